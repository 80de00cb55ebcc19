//! Empirical expanding threshold.
//!
//! For a prefix `x_{1:i}` with order statistics `x_{1,i} ≥ … ≥ x_{i,i}`,
//! `M_i = min(i, min{k : x_{k,i} ≤ k})` and `τ_i = x_{M_i,i}`. The state keeps
//! the `M_i` largest symbols in a min-heap: every symbol is pushed, then the
//! minimum is popped while the second-smallest element is strictly below the
//! heap size.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum ThresholdError {
    #[error("symbol 0 is reserved and cannot be observed")]
    ZeroSymbol,
}

#[derive(Debug, Clone, Default)]
pub struct ThresholdState {
    queue: BinaryHeap<Reverse<u64>>,
    observed: u64,
}

impl ThresholdState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Current `M_i` (0 before any observation).
    pub fn rank(&self) -> u64 {
        self.queue.len() as u64
    }

    /// Current `τ_i = x_{M_i,i}` (0 before any observation).
    pub fn tau(&self) -> u64 {
        self.queue.peek().map_or(0, |r| r.0)
    }

    /// Number of symbols observed so far.
    pub fn observed(&self) -> u64 {
        self.observed
    }

    /// True while `M_i = i` is forced by the cap, i.e. no `k ≤ i` has
    /// `x_{k,i} ≤ k`. Outside this regime `τ_i ≤ M_i`.
    pub fn capped(&self) -> bool {
        self.observed > 0 && self.tau() > self.rank()
    }

    pub fn observe(&mut self, x: u64) -> Result<(), ThresholdError> {
        if x == 0 {
            return Err(ThresholdError::ZeroSymbol);
        }
        self.observed += 1;
        self.queue.push(Reverse(x));
        while self.queue.len() >= 2 {
            let size = self.queue.len() as u64;
            let Reverse(smallest) = self.queue.pop().expect("non-empty");
            let second = self.queue.peek().expect("two elements").0;
            if second >= size {
                self.queue.push(Reverse(smallest));
                break;
            }
        }
        Ok(())
    }

    /// Retained symbols in decreasing order.
    pub fn retained(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.queue.iter().map(|r| r.0).collect();
        v.sort_unstable_by(|a, b| b.cmp(a));
        v
    }
}

/// Direct evaluation of `(M_i, τ_i)` from a whole prefix: sort descending and
/// take the first rank `k` whose order statistic is at most `k`.
///
/// Returns `(0, 0)` for an empty prefix.
pub fn brute_force_threshold(prefix: &[u64]) -> (u64, u64) {
    if prefix.is_empty() {
        return (0, 0);
    }
    let mut sorted = prefix.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let m = sorted
        .iter()
        .enumerate()
        .find(|&(idx, &x)| x <= idx as u64 + 1)
        .map_or(sorted.len(), |(idx, _)| idx + 1);
    (m as u64, sorted[m - 1])
}
