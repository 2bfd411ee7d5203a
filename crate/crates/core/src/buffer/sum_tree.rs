//! Binary sum tree over nonnegative leaf weights with O(log n) point
//! updates and prefix-weight lookup, used for proportional sampling from
//! the replay buffer.
//!
//! Internal sums drift by at most a few ulps per update; the tree recomputes
//! every internal node from the leaves after a fixed number of mutations to
//! keep the root within 1e-9 relative error of the exact leaf sum.

const REBUILD_EVERY: usize = 10_000;

#[derive(Debug, Clone)]
pub struct SumTree {
    /// Number of leaves, padded to a power of two.
    cap: usize,
    /// 1-indexed heap layout; leaves occupy `cap..2 * cap`.
    tree: Vec<f64>,
    mutations: usize,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let cap = capacity.next_power_of_two().max(1);
        Self { cap, tree: vec![0.0; 2 * cap], mutations: 0 }
    }

    pub fn get(&self, i: usize) -> f64 {
        self.tree[self.cap + i]
    }

    pub fn total(&self) -> f64 {
        self.tree[1]
    }

    pub fn set(&mut self, i: usize, w: f64) {
        debug_assert!(w >= 0.0 && w.is_finite(), "weight must be nonnegative");
        let mut node = self.cap + i;
        self.tree[node] = w;
        while node > 1 {
            node /= 2;
            self.tree[node] = self.tree[2 * node] + self.tree[2 * node + 1];
        }
        self.mutations += 1;
        if self.mutations >= REBUILD_EVERY {
            self.rebuild();
        }
    }

    /// Recompute every internal node from the leaves.
    pub fn rebuild(&mut self) {
        for node in (1..self.cap).rev() {
            self.tree[node] = self.tree[2 * node] + self.tree[2 * node + 1];
        }
        self.mutations = 0;
    }

    /// Index of the leaf whose cumulative-weight interval contains `u`,
    /// for `u` in `[0, total)`.
    pub fn find(&self, mut u: f64) -> usize {
        let mut node = 1;
        while node < self.cap {
            let left = 2 * node;
            if u < self.tree[left] {
                node = left;
            } else {
                u -= self.tree[left];
                node = left + 1;
            }
        }
        let mut idx = node - self.cap;
        // Boundary rounding can land exactly on a zero-width interval; step
        // to the next positive leaf (the caller guarantees total > 0).
        if self.tree[self.cap + idx] == 0.0 {
            for _ in 0..self.cap {
                idx = (idx + 1) % self.cap;
                if self.tree[self.cap + idx] > 0.0 {
                    break;
                }
            }
        }
        idx
    }

    /// The half-open `[lo, hi)` interval of `u` values that select each of
    /// the first `n` leaves, in the same arithmetic `find` uses.
    pub fn selection_intervals(&self, n: usize) -> Vec<(f64, f64)> {
        let mut out = vec![(0.0, 0.0); self.cap];
        let mut stack = vec![(1usize, 0.0f64)];
        while let Some((node, lo)) = stack.pop() {
            if node >= self.cap {
                out[node - self.cap] = (lo, lo + self.tree[node]);
            } else {
                stack.push((2 * node, lo));
                stack.push((2 * node + 1, lo + self.tree[2 * node]));
            }
        }
        out.truncate(n);
        out
    }
}
