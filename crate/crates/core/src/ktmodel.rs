//! Censoring Krichevsky-Trofimov mixture over a growing alphabet.
//!
//! With counts `n_j` over the whole prefix and alphabet `{0, …, A}`, the
//! predictive weights are `2·n_j + 1` for `1 ≤ j ≤ A` and `1` for the escape
//! symbol `0`, so the total is `2·S + A + 1` where `S = Σ_{1≤j≤A} n_j`. This
//! is the add-one-half estimator normalized over the symbols it can emit.
//!
//! Symbols `1..=D` live in a Fenwick tree of weights; `D` doubles as the
//! alphabet grows, up to [`DENSE_LIMIT`]. Counts above `D` sit in an ordered
//! map and are summed on demand, which only matters for alphabets larger
//! than the dense limit.

use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use crate::arith::{FrequencyTable, WeightModel};

/// Largest symbol kept in the dense tree.
pub const DENSE_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum KtError {
    #[error("the escape symbol 0 is never counted")]
    ZeroSymbol,
}

/// Fenwick tree over `1..=len`.
#[derive(Debug, Clone, Default)]
struct Fenwick {
    tree: Vec<u64>,
}

impl Fenwick {
    fn from_values(values: &[u64]) -> Self {
        let mut tree = Vec::with_capacity(values.len() + 1);
        tree.push(0);
        tree.extend_from_slice(values);
        let n = values.len();
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                tree[parent] += tree[i];
            }
        }
        Self { tree }
    }

    fn len(&self) -> usize {
        self.tree.len().saturating_sub(1)
    }

    fn add(&mut self, mut i: usize, delta: u64) {
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Sum of positions `1..=i`.
    fn prefix(&self, mut i: usize) -> u64 {
        let mut acc = 0;
        while i > 0 {
            acc += self.tree[i];
            i &= i - 1;
        }
        acc
    }

    /// Largest `p` with `prefix(p) ≤ target`.
    fn search(&self, mut target: u64) -> usize {
        let n = self.len();
        let mut pos = 0;
        let mut step = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

/// Occurrence counts `n_j` over the full prefix (censored occurrences
/// included), plus the weight index used for coding.
#[derive(Debug, Clone, Default)]
pub struct KtModel {
    dense_counts: Vec<u64>,
    weights: Fenwick,
    sparse: BTreeMap<u64, u64>,
    top: u64,
    observed: u64,
}

impl KtModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Number of symbols recorded (`i`).
    pub fn observed(&self) -> u64 {
        self.observed
    }

    /// Current alphabet upper end `A` (the alphabet is `{0, …, A}`).
    pub fn top(&self) -> u64 {
        self.top
    }

    fn dense_len(&self) -> u64 {
        self.dense_counts.len() as u64
    }

    pub fn count(&self, j: u64) -> u64 {
        if j == 0 {
            0
        } else if j <= self.dense_len() {
            self.dense_counts[(j - 1) as usize]
        } else {
            self.sparse.get(&j).copied().unwrap_or(0)
        }
    }

    pub fn record(&mut self, j: u64) -> Result<(), KtError> {
        if j == 0 {
            return Err(KtError::ZeroSymbol);
        }
        self.observed += 1;
        if j <= self.dense_len() {
            self.dense_counts[(j - 1) as usize] += 1;
            self.weights.add(j as usize, 2);
        } else {
            *self.sparse.entry(j).or_insert(0) += 1;
        }
        Ok(())
    }

    /// Sets the alphabet to `{0, …, top}`. Counts already accumulated for
    /// symbols entering the alphabet take effect immediately.
    pub fn set_top(&mut self, top: u64) {
        self.top = top;
        if top > self.dense_len() && self.dense_len() < DENSE_LIMIT {
            self.grow_dense(top.next_power_of_two().min(DENSE_LIMIT));
        }
    }

    fn grow_dense(&mut self, new_len: u64) {
        let old_len = self.dense_len();
        let moved: Vec<(u64, u64)> = self
            .sparse
            .range(old_len + 1..=new_len)
            .map(|(&k, &v)| (k, v))
            .collect();
        self.dense_counts.resize(new_len as usize, 0);
        for (k, v) in moved {
            self.sparse.remove(&k);
            self.dense_counts[(k - 1) as usize] = v;
        }
        let weights: Vec<u64> = self.dense_counts.iter().map(|&c| 2 * c + 1).collect();
        self.weights = Fenwick::from_values(&weights);
    }

    /// Σ_{1≤s≤p} (2·n_s + 1), for `p ≤ top`.
    fn weight_prefix(&self, p: u64) -> u64 {
        let d = self.dense_len();
        if p <= d {
            return self.weights.prefix(p as usize);
        }
        let sparse: u64 = self.sparse.range(d + 1..=p).map(|(_, &c)| c).sum();
        self.weights.prefix(d as usize) + (p - d) + 2 * sparse
    }

    /// In-alphabet count total `S = Σ_{1≤j≤top} n_j`.
    pub fn in_alphabet_total(&self) -> u64 {
        (self.weight_prefix(self.top) - self.top) / 2
    }

    /// Explicit table of the current predictive weights; intended for small
    /// alphabets (tests, inspection).
    pub fn snapshot(&self) -> FrequencyTable {
        FrequencyTable::new((0..=self.top).map(|j| self.weight(j)).collect())
    }
}

impl WeightModel for KtModel {
    fn alphabet_size(&self) -> u64 {
        self.top + 1
    }

    fn total(&self) -> u64 {
        1 + self.weight_prefix(self.top)
    }

    fn weight(&self, symbol: u64) -> u64 {
        if symbol == 0 {
            1
        } else {
            2 * self.count(symbol) + 1
        }
    }

    fn cumulative(&self, symbol: u64) -> u64 {
        if symbol == 0 {
            0
        } else {
            1 + self.weight_prefix(symbol - 1)
        }
    }

    fn symbol_at(&self, target: u64) -> u64 {
        if target == 0 {
            return 0;
        }
        let rest = target - 1;
        let d = self.dense_len().min(self.top);
        let dense_total = self.weights.prefix(d as usize);
        if rest < dense_total {
            return self.weights.search(rest) as u64 + 1;
        }
        let mut rest = rest - dense_total;
        let mut next = d + 1;
        for (&s, &c) in self.sparse.range(d + 1..=self.top) {
            let gap = s - next;
            if rest < gap {
                return next + rest;
            }
            rest -= gap;
            let w = 2 * c + 1;
            if rest < w {
                return s;
            }
            rest -= w;
            next = s + 1;
        }
        next + rest
    }
}

/// Reference construction of the predictive weights from raw counts:
/// `2·n_j + 1` for `j` in `1..=top`, and `1` for the escape.
pub fn predictive_weights(counts: &HashMap<u64, u64>, top: u64) -> FrequencyTable {
    let mut weights = vec![1u64];
    weights.extend((1..=top).map(|j| 2 * counts.get(&j).copied().unwrap_or(0) + 1));
    FrequencyTable::new(weights)
}
