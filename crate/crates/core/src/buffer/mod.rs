//! Fixed-capacity sliding-window transition store with proportional
//! (ratio-weighted) and uniform sampling.
//!
//! The buffer keeps the most recent `n` transitions, evicting oldest first.
//! A sum tree over the stored importance ratios gives O(log n) proportional
//! draws; mini-batches sample with replacement so draws are i.i.d. given the
//! buffer contents.

mod sum_tree;

pub use sum_tree::SumTree;

use rand::Rng;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::gvf::{ContinuousState, Transition};

/// A sampled mini-batch: buffer slot indices plus the referenced
/// transitions. Sampling is with replacement, so indices may repeat.
#[derive(Debug, Clone)]
pub struct MiniBatch<S> {
    pub indices: Vec<usize>,
    pub transitions: Vec<Transition<S>>,
}

impl<S> MiniBatch<S> {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }
}

/// State serialization hooks for the debugging snapshot dump.
pub trait SnapshotState {
    fn columns() -> &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

impl SnapshotState for usize {
    fn columns() -> &'static [&'static str] {
        &["s"]
    }
    fn fields(&self) -> Vec<String> {
        vec![self.to_string()]
    }
}

impl SnapshotState for ContinuousState {
    fn columns() -> &'static [&'static str] {
        &["s_x", "s_y"]
    }
    fn fields(&self) -> Vec<String> {
        vec![self.x.to_string(), self.y.to_string()]
    }
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer<S> {
    capacity: usize,
    slots: Vec<Option<Transition<S>>>,
    tree: SumTree,
    cursor: usize,
    count: usize,
    rho_sum: f64,
    pushes_since_exact: usize,
}

const EXACT_SUM_EVERY: usize = 10_000;

impl<S: Clone> ReplayBuffer<S> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity >= 1, "buffer capacity must be positive");
        Self {
            capacity,
            slots: vec![None; capacity],
            tree: SumTree::new(capacity),
            cursor: 0,
            count: 0,
            rho_sum: 0.0,
            pushes_since_exact: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn get(&self, slot: usize) -> Option<&Transition<S>> {
        self.slots.get(slot).and_then(|t| t.as_ref())
    }

    /// Store a transition, evicting the oldest when full.
    pub fn push(&mut self, t: Transition<S>) {
        debug_assert!(t.rho.is_finite() && t.rho >= 0.0, "invalid ratio");
        if let Some(old) = self.slots[self.cursor].take() {
            self.rho_sum -= old.rho;
        }
        self.rho_sum += t.rho;
        self.tree.set(self.cursor, t.rho);
        self.slots[self.cursor] = Some(t);
        self.cursor = (self.cursor + 1) % self.capacity;
        if self.count < self.capacity {
            self.count += 1;
        }
        self.pushes_since_exact += 1;
        if self.pushes_since_exact >= EXACT_SUM_EVERY {
            self.rho_sum = self.iter().map(|t| t.rho).sum();
            self.pushes_since_exact = 0;
        }
    }

    /// Live transitions, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Transition<S>> {
        (0..self.count).map(move |i| {
            let slot = self.live_slot(i);
            self.slots[slot].as_ref().expect("live slot populated")
        })
    }

    fn live_slot(&self, i: usize) -> usize {
        (self.cursor + self.capacity - self.count + i) % self.capacity
    }

    /// Sum of stored ratios (kept incrementally, refreshed exactly on a
    /// fixed schedule).
    pub fn rho_sum(&self) -> f64 {
        self.rho_sum
    }

    /// Root of the sampling tree; equals `rho_sum` up to bounded drift.
    pub fn tree_total(&self) -> f64 {
        self.tree.total()
    }

    /// Arithmetic mean of the stored ratios.
    pub fn mean_ratio(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptyBuffer);
        }
        Ok(self.rho_sum / self.count as f64)
    }

    /// `(sum rho)^2 / sum rho^2`, between 1 and the live count.
    pub fn effective_sample_size(&self) -> Result<f64> {
        if self.count == 0 {
            return Err(Error::EmptyBuffer);
        }
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for t in self.iter() {
            sum += t.rho;
            sum_sq += t.rho * t.rho;
        }
        if sum <= 0.0 {
            return Err(Error::DegenerateWeights);
        }
        Ok(sum * sum / sum_sq)
    }

    /// Draw `k` slots with replacement, proportionally to stored ratios.
    pub fn sample_proportional(&self, k: usize, rng: &mut dyn RngCore) -> Result<MiniBatch<S>> {
        if self.count == 0 {
            return Err(Error::EmptyBuffer);
        }
        let total = self.tree.total();
        if total <= 0.0 {
            return Err(Error::DegenerateWeights);
        }
        let mut indices = Vec::with_capacity(k);
        let mut transitions = Vec::with_capacity(k);
        for _ in 0..k {
            let u = rng.gen_range(0.0..total);
            let slot = self.tree.find(u);
            indices.push(slot);
            transitions.push(self.slots[slot].clone().expect("sampled slot populated"));
        }
        Ok(MiniBatch { indices, transitions })
    }

    /// Draw `k` slots with replacement, uniformly over live entries.
    pub fn sample_uniform(&self, k: usize, rng: &mut dyn RngCore) -> Result<MiniBatch<S>> {
        if self.count == 0 {
            return Err(Error::EmptyBuffer);
        }
        let mut indices = Vec::with_capacity(k);
        let mut transitions = Vec::with_capacity(k);
        for _ in 0..k {
            let slot = self.live_slot(rng.gen_range(0..self.count));
            indices.push(slot);
            transitions.push(self.slots[slot].clone().expect("live slot populated"));
        }
        Ok(MiniBatch { indices, transitions })
    }

    /// Probability that a proportional draw selects each live slot, taken
    /// from the sampling tree's own selection intervals. Pairs of
    /// `(slot, probability)`.
    pub fn selection_probabilities(&self) -> Vec<(usize, f64)> {
        let total = self.tree.total();
        self.tree
            .selection_intervals(self.capacity)
            .into_iter()
            .enumerate()
            .filter(|(slot, _)| self.slots[*slot].is_some())
            .map(|(slot, (lo, hi))| (slot, (hi - lo) / total))
            .collect()
    }
}

impl<S: Clone + SnapshotState> ReplayBuffer<S> {
    /// Debugging dump of the live window, oldest first. Not load-bearing.
    pub fn snapshot_csv(&self) -> String {
        let mut out = String::new();
        let state_cols = S::columns().join(",");
        let next_cols: Vec<String> =
            S::columns().iter().map(|c| format!("{c}_next")).collect();
        out.push_str(&format!(
            "{},a,{},cumulant,gamma_next,rho\n",
            state_cols,
            next_cols.join(",")
        ));
        for t in self.iter() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                t.s.fields().join(","),
                t.a.0,
                t.s_next.fields().join(","),
                t.cumulant,
                t.gamma_next,
                t.rho
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{ChainEnv, Environment};
    use crate::gvf::{is_ratio, Action, FixedActionDist, Policy};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::VecDeque;

    fn t(id: usize, rho: f64) -> Transition<usize> {
        Transition {
            s: id,
            a: Action(0),
            s_next: id + 1,
            cumulant: 0.0,
            gamma_next: 1.0,
            rho,
        }
    }

    #[test]
    fn push_into_empty_buffer() {
        let mut buf = ReplayBuffer::new(4);
        buf.push(t(0, 2.5));
        assert_eq!(buf.len(), 1);
        assert_abs_diff_eq!(buf.tree_total(), 2.5);
        assert_abs_diff_eq!(buf.rho_sum(), 2.5);
    }

    #[test]
    fn sliding_window_evicts_the_oldest() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..4 {
            buf.push(t(i, 1.0));
        }
        assert_eq!(buf.len(), 3);
        let ids: Vec<usize> = buf.iter().map(|t| t.s).collect();
        assert_eq!(ids, vec![1, 2, 3]);
    }

    #[test]
    fn tree_total_tracks_the_live_window_over_long_streams() {
        let mut buf = ReplayBuffer::new(512);
        let mut reference: VecDeque<f64> = VecDeque::new();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for i in 0..100_000 {
            let rho = rng.gen::<f64>() * 10.0;
            buf.push(t(i, rho));
            reference.push_back(rho);
            if reference.len() > 512 {
                reference.pop_front();
            }
            if i % 1000 == 0 {
                let exact: f64 = reference.iter().sum();
                assert!(
                    (buf.tree_total() - exact).abs() <= 1e-9 * exact,
                    "tree drifted at push {i}"
                );
                assert!((buf.rho_sum() - exact).abs() <= 1e-9 * exact);
            }
        }
    }

    #[test]
    fn proportional_selection_matches_ratios_exactly_on_small_buffers() {
        // Enumerate the tree's selection intervals for every buffer size
        // up to 8 and check interval mass against rho / sum(rho).
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 1..=8usize {
            let mut buf = ReplayBuffer::new(n);
            let rhos: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 5.0 + 0.01).collect();
            for (i, &rho) in rhos.iter().enumerate() {
                buf.push(t(i, rho));
            }
            let total: f64 = rhos.iter().sum();
            for (slot, p) in buf.selection_probabilities() {
                assert!(
                    (p - rhos[slot] / total).abs() < 1e-12,
                    "slot {slot} of {n}: {p}"
                );
            }
        }
    }

    #[test]
    fn zero_weight_slots_are_never_drawn() {
        let mut buf = ReplayBuffer::new(4);
        for (i, rho) in [0.0, 0.0, 3.0, 1.0].iter().enumerate() {
            buf.push(t(i, *rho));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut counts = [0usize; 4];
        let draws = 40_000;
        for _ in 0..draws {
            let batch = buf.sample_proportional(1, &mut rng).unwrap();
            counts[batch.indices[0]] += 1;
        }
        assert_eq!(counts[0], 0);
        assert_eq!(counts[1], 0);
        let p2 = counts[2] as f64 / draws as f64;
        assert!((p2 - 0.75).abs() < 0.01, "slot 2 frequency {p2}");
    }

    #[test]
    fn proportional_frequencies_pass_a_chi_square_check() {
        let rhos = [9.0, 1.0 / 9.0, 9.0, 1.0 / 9.0];
        let mut buf = ReplayBuffer::new(4);
        for (i, &rho) in rhos.iter().enumerate() {
            buf.push(t(i, rho));
        }
        let total: f64 = rhos.iter().sum();
        let expected: Vec<f64> = rhos.iter().map(|r| r / total).collect();
        assert_abs_diff_eq!(expected[0], 0.493_902_439_024_39, epsilon = 1e-12);
        assert_abs_diff_eq!(expected[1], 0.006_097_560_975_609_756, epsilon = 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let draws = 100_000usize;
        let mut counts = [0usize; 4];
        let batch = buf.sample_proportional(draws, &mut rng).unwrap();
        for slot in batch.indices {
            counts[slot] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(&expected)
            .map(|(&obs, &p)| {
                let exp = p * draws as f64;
                (obs as f64 - exp).powi(2) / exp
            })
            .sum();
        // 0.999 quantile of chi-square with 3 degrees of freedom.
        assert!(chi2 < 16.266, "chi-square statistic {chi2}");
    }

    #[test]
    fn uniform_sampling_covers_live_slots_evenly() {
        let mut buf = ReplayBuffer::new(4);
        for i in 0..4 {
            buf.push(t(i, (i + 1) as f64));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let draws = 100_000usize;
        let mut counts = [0usize; 4];
        for slot in buf.sample_uniform(draws, &mut rng).unwrap().indices {
            counts[slot] += 1;
        }
        let sigma = (0.25 * 0.75 / draws as f64).sqrt();
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.25).abs() < 3.0 * sigma, "frequency {freq}");
        }
    }

    #[test]
    fn single_entry_and_empty_batches() {
        let mut buf = ReplayBuffer::new(4);
        buf.push(t(7, 1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..32 {
            assert_eq!(buf.sample_uniform(1, &mut rng).unwrap().indices, vec![0]);
        }
        assert!(buf.sample_uniform(0, &mut rng).unwrap().is_empty());
        assert!(buf.sample_proportional(0, &mut rng).unwrap().is_empty());
    }

    #[test]
    fn error_surface() {
        let empty: ReplayBuffer<usize> = ReplayBuffer::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            empty.clone().sample_uniform(1, &mut rng),
            Err(Error::EmptyBuffer)
        ));
        assert!(matches!(empty.mean_ratio(), Err(Error::EmptyBuffer)));

        let mut zeros = ReplayBuffer::new(2);
        zeros.push(t(0, 0.0));
        zeros.push(t(1, 0.0));
        assert!(matches!(
            zeros.sample_proportional(1, &mut rng),
            Err(Error::DegenerateWeights)
        ));
        assert!(matches!(
            zeros.effective_sample_size(),
            Err(Error::DegenerateWeights)
        ));
    }

    #[test]
    fn mean_ratio_examples() {
        let mut buf = ReplayBuffer::new(3);
        for rho in [1.0, 1.0, 1.0] {
            buf.push(t(0, rho));
        }
        assert_abs_diff_eq!(buf.mean_ratio().unwrap(), 1.0);

        let mut buf = ReplayBuffer::new(2);
        buf.push(t(0, 2.0));
        buf.push(t(1, 0.0));
        assert_abs_diff_eq!(buf.mean_ratio().unwrap(), 1.0);
    }

    #[test]
    fn mean_ratio_approaches_one_on_a_long_chain_stream() {
        let mu = FixedActionDist::new(vec![0.9, 0.1]).unwrap();
        let pi = FixedActionDist::new(vec![0.1, 0.9]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let mut env = ChainEnv::new(&mut rng);
        let mut buf = ReplayBuffer::new(15_000);
        while buf.len() < 15_000 {
            let s = env.state();
            let a = mu.sample(&s, &mut rng);
            let rho = is_ratio(&pi, &mu, &s, a).unwrap();
            buf.push(env.step(a, &mut rng).with_rho(rho));
        }
        assert!((buf.mean_ratio().unwrap() - 1.0).abs() < 0.05);
    }

    #[test]
    fn effective_sample_size_examples() {
        let mut buf = ReplayBuffer::new(4);
        for i in 0..4 {
            buf.push(t(i, 0.7));
        }
        assert_abs_diff_eq!(buf.effective_sample_size().unwrap(), 4.0, epsilon = 1e-12);

        let mut buf = ReplayBuffer::new(3);
        buf.push(t(0, 0.0));
        buf.push(t(1, 5.0));
        buf.push(t(2, 0.0));
        assert_abs_diff_eq!(buf.effective_sample_size().unwrap(), 1.0, epsilon = 1e-12);

        let mut buf = ReplayBuffer::new(2);
        buf.push(t(0, 1.0));
        buf.push(t(1, 3.0));
        assert_abs_diff_eq!(buf.effective_sample_size().unwrap(), 1.6, epsilon = 1e-12);
    }

    #[test]
    fn sampling_is_deterministic_per_seed() {
        let mut buf = ReplayBuffer::new(8);
        for i in 0..8 {
            buf.push(t(i, (i % 3 + 1) as f64));
        }
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = buf.sample_proportional(16, &mut rng).unwrap().indices;
            let b = buf.sample_uniform(16, &mut rng).unwrap().indices;
            (a, b)
        };
        assert_eq!(draw(3), draw(3));
        assert_ne!(draw(3), draw(4));
    }

    #[test]
    fn snapshot_dump_lists_live_rows_in_order() {
        let mut buf = ReplayBuffer::new(2);
        for i in 0..3 {
            buf.push(t(i, 1.5));
        }
        let csv = buf.snapshot_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "s,a,s_next,cumulant,gamma_next,rho");
        assert_eq!(lines[1], "1,0,2,0,1,1.5");
        assert_eq!(lines[2], "2,0,3,0,1,1.5");
    }

    proptest! {
        /// After any interleaving of pushes the live window holds exactly
        /// the last `min(count, n)` pushes, in order.
        #[test]
        fn eviction_matches_a_reference_deque(
            capacity in 1usize..9,
            serials in proptest::collection::vec(0usize..1000, 0..40),
        ) {
            let mut buf = ReplayBuffer::new(capacity);
            let mut reference: VecDeque<usize> = VecDeque::new();
            for &serial in &serials {
                buf.push(t(serial, 1.0));
                reference.push_back(serial);
                if reference.len() > capacity {
                    reference.pop_front();
                }
                let live: Vec<usize> = buf.iter().map(|t| t.s).collect();
                prop_assert_eq!(&live, &reference.iter().copied().collect::<Vec<_>>());
            }
        }

        /// ESS stays within [1, count] for strictly positive weights.
        #[test]
        fn ess_bounds(rhos in proptest::collection::vec(0.01f64..20.0, 1..32)) {
            let mut buf = ReplayBuffer::new(rhos.len());
            for (i, &rho) in rhos.iter().enumerate() {
                buf.push(t(i, rho));
            }
            let ess = buf.effective_sample_size().unwrap();
            prop_assert!(ess >= 1.0 - 1e-12);
            prop_assert!(ess <= rhos.len() as f64 + 1e-12);
        }
    }
}
