//! Bias of the resampled estimator as a function of buffer size.
//!
//! For an i.i.d. buffer the exact conditional expectation of the resampled
//! mean is the whole-buffer self-normalized update `N / D`, with
//! `N = (1/n) sum rho_i Delta_i` and `D = (1/n) sum rho_i`. Its bias against
//! the exact expected update `mu = E_pi[Delta]` decays like `1/n`.
//!
//! The study estimates that bias across many i.i.d. buffers with the exact
//! zero-mean control variate `g = N - mu D` (both `E[N] = mu` and
//! `E[D] = 1` hold exactly): per buffer,
//!
//! ```text
//! h = N / D - mu - g = g (1 - D) / D,    E[h] = bias(n)
//! ```
//!
//! subtracting `g` removes the O(1/sqrt(n m)) sampling noise and leaves an
//! estimator whose standard error scales like the bias itself, so the decay
//! rate is measurable with modest `m`. The bias-corrected estimator's
//! per-buffer expectation is `N` itself, so its bias estimate is the plain
//! grand mean of `N - mu`.

use rand::RngCore;

use crate::linear::{Featurizer, LinearValueFn};

use super::dp::IidSampler;

/// Grand means and standard errors of the two bias estimates at one buffer
/// size.
#[derive(Debug, Clone)]
pub struct BiasEstimate {
    pub n: usize,
    /// Mean of `h` across buffers: bias of the resampled mean.
    pub ir_bias: Vec<f64>,
    pub ir_bias_se: Vec<f64>,
    /// Mean of `N - mu` across buffers: bias of the bias-corrected mean.
    pub bc_bias: Vec<f64>,
    pub bc_bias_se: Vec<f64>,
}

impl BiasEstimate {
    pub fn ir_bias_norm(&self) -> f64 {
        self.ir_bias.iter().map(|b| b * b).sum::<f64>().sqrt()
    }
}

/// Runs `m_buffers` i.i.d. buffers of each size in `n_list`.
pub fn bias_decay_study<F>(
    sampler: &IidSampler,
    vf: &LinearValueFn<F>,
    truth: &[f64],
    n_list: &[usize],
    m_buffers: usize,
    rng: &mut dyn RngCore,
) -> Vec<BiasEstimate>
where
    F: Featurizer<State = usize>,
{
    let dim = vf.dim();
    n_list
        .iter()
        .map(|&n| {
            let mut ir_sum = vec![0.0; dim];
            let mut ir_sum_sq = vec![0.0; dim];
            let mut bc_sum = vec![0.0; dim];
            let mut bc_sum_sq = vec![0.0; dim];
            for _ in 0..m_buffers {
                let mut weighted = vec![0.0; dim];
                let mut rho_mean = 0.0;
                for _ in 0..n {
                    let t = sampler.sample(rng);
                    rho_mean += t.rho / n as f64;
                    let delta = crate::estimators::per_transition_delta(vf, &t);
                    for (&i, &v) in delta.indices.iter().zip(&delta.values) {
                        weighted[i] += t.rho * v / n as f64;
                    }
                }
                for i in 0..dim {
                    let g = weighted[i] - truth[i] * rho_mean;
                    let h = if rho_mean > 0.0 {
                        g * (1.0 - rho_mean) / rho_mean
                    } else {
                        0.0
                    };
                    ir_sum[i] += h;
                    ir_sum_sq[i] += h * h;
                    let bc = weighted[i] - truth[i];
                    bc_sum[i] += bc;
                    bc_sum_sq[i] += bc * bc;
                }
            }
            let m = m_buffers as f64;
            let finish = |sum: Vec<f64>, sum_sq: Vec<f64>| {
                let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
                let se: Vec<f64> = sum_sq
                    .iter()
                    .zip(&mean)
                    .map(|(&sq, &mu)| (((sq / m - mu * mu).max(0.0)) / (m - 1.0)).sqrt())
                    .collect();
                (mean, se)
            };
            let (ir_bias, ir_bias_se) = finish(ir_sum, ir_sum_sq);
            let (bc_bias, bc_bias_se) = finish(bc_sum, bc_sum_sq);
            BiasEstimate { n, ir_bias, ir_bias_se, bc_bias, bc_bias_se }
        })
        .collect()
}

/// Spearman rank correlation, used to check that bias shrinks monotonically
/// with buffer size.
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let rank = |vals: &[f64]| -> Vec<f64> {
        let mut order: Vec<usize> = (0..vals.len()).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        let mut ranks = vec![0.0; vals.len()];
        for (r, &i) in order.iter().enumerate() {
            ranks[i] = r as f64;
        }
        ranks
    };
    let rx = rank(xs);
    let ry = rank(ys);
    let n = xs.len() as f64;
    let mean = (n - 1.0) / 2.0;
    let mut cov = 0.0;
    let mut var_x = 0.0;
    let mut var_y = 0.0;
    for i in 0..xs.len() {
        cov += (rx[i] - mean) * (ry[i] - mean);
        var_x += (rx[i] - mean).powi(2);
        var_y += (ry[i] - mean).powi(2);
    }
    cov / (var_x.sqrt() * var_y.sqrt())
}
