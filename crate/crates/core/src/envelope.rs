//! Envelope classes over the positive integers.
//!
//! An envelope `f : ℕ₊ → (0, 1]` with `1 < Σ f < ∞` bounds the marginal of
//! every source in its class. From `f` we derive the envelope distribution
//! `F(k) = 1 − Σ_{j>k} f(j)` (clipped at 0), a smoothed survival function
//! `F̄_c` on the reals, the quantile `U(t)` solving `F̄_c(U) = 1/t`, and the
//! exact threshold `m(t)` solving `F̄_c(x) = x/t`.
//!
//! Two families are supported: power envelopes `min(1, C·j^{-α})` (heavy
//! tailed, extreme-value index `γ = 1/(α−1)`) and geometric envelopes
//! `min(1, C·q^j)` (light tailed, `γ = 0`). Tail sums are evaluated in
//! closed form, through the Hurwitz zeta function for the power family.
//!
//! [`SourceModel`] turns an envelope into concrete memoryless sources: the
//! envelope distribution itself, the dithered worst-case sources `P_θ`
//! used for the redundancy lower bound, their common reindexed law `G`,
//! and arbitrary finite pmfs.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvelopeError {
    #[error("invalid envelope: {0}")]
    Invalid(String),
    #[error("cannot parse envelope '{0}' (expected e.g. power:alpha=2 or geometric:q=0.8,c=1)")]
    Parse(String),
    #[error("quantile level t must exceed 1, got {0}")]
    QuantileDomain(f64),
    #[error("invalid source: {0}")]
    Source(String),
}

/// Hurwitz zeta `ζ(s, a) = Σ_{k≥0} (k + a)^{-s}` for `s > 1`, `a > 0`.
///
/// Direct summation until the argument reaches 32, then Euler-Maclaurin
/// with Bernoulli terms through `B_12`.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    debug_assert!(s > 1.0 && a > 0.0);
    const BERNOULLI_OVER_FACTORIAL: [f64; 6] = [
        1.0 / 6.0 / 2.0,
        -1.0 / 30.0 / 24.0,
        1.0 / 42.0 / 720.0,
        -1.0 / 30.0 / 40320.0,
        5.0 / 66.0 / 3628800.0,
        -691.0 / 2730.0 / 479001600.0,
    ];
    let mut head = 0.0;
    let mut x = a;
    while x < 32.0 {
        head += x.powf(-s);
        x += 1.0;
    }
    let xs = x.powf(-s);
    let mut tail = x * xs / (s - 1.0) + 0.5 * xs;
    // rising factorial s (s+1) … (s+2j-2) times x^{-s-2j+1}
    let mut rising = s;
    let mut power = xs / x;
    let inv_x2 = 1.0 / (x * x);
    for (j, coef) in BERNOULLI_OVER_FACTORIAL.iter().enumerate() {
        tail += coef * rising * power;
        let m = 2.0 * j as f64;
        rising *= (s + m + 1.0) * (s + m + 2.0);
        power *= inv_x2;
    }
    head + tail
}

/// Envelope family and its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    /// `f(j) = min(1, scale · j^{-alpha})`, `alpha > 1`.
    Power { scale: f64, alpha: f64 },
    /// `f(j) = min(1, scale · ratio^j)`, `0 < ratio < 1`.
    Geometric { scale: f64, ratio: f64 },
}

/// A validated envelope function with its derived distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeSpec {
    family: Family,
    /// Smallest `j` with unclipped value `≤ 1`; `f(j) = 1` below it.
    clip_end: u64,
}

impl EnvelopeSpec {
    pub fn power(alpha: f64, scale: f64) -> Result<Self, EnvelopeError> {
        Self::new(Family::Power { scale, alpha })
    }

    pub fn geometric(ratio: f64, scale: f64) -> Result<Self, EnvelopeError> {
        Self::new(Family::Geometric { scale, ratio })
    }

    pub fn new(family: Family) -> Result<Self, EnvelopeError> {
        match family {
            Family::Power { scale, alpha } => {
                if !(alpha > 1.0 && alpha.is_finite()) {
                    return Err(EnvelopeError::Invalid(format!("power exponent must exceed 1, got {alpha}")));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(EnvelopeError::Invalid(format!("scale must be positive, got {scale}")));
                }
            }
            Family::Geometric { scale, ratio } => {
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(EnvelopeError::Invalid(format!("geometric ratio must lie in (0,1), got {ratio}")));
                }
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(EnvelopeError::Invalid(format!("scale must be positive, got {scale}")));
                }
            }
        }
        let mut spec = Self { family, clip_end: 1 };
        spec.clip_end = spec.find_clip_end()?;
        let mass = spec.tail_sum(0);
        if !(mass > 1.0 && mass.is_finite()) {
            return Err(EnvelopeError::Invalid(format!(
                "envelope mass Σf = {mass} must lie in (1, ∞)"
            )));
        }
        Ok(spec)
    }

    fn find_clip_end(&self) -> Result<u64, EnvelopeError> {
        let guess = match self.family {
            Family::Power { scale, alpha } => scale.powf(1.0 / alpha).ceil(),
            Family::Geometric { scale, ratio } => (scale.ln() / -ratio.ln()).ceil(),
        };
        if guess.is_nan() || guess >= 1e15 {
            return Err(EnvelopeError::Invalid("envelope is clipped at 1 over too many symbols".into()));
        }
        let mut j = (guess.max(1.0) as u64).max(1);
        while j > 1 && self.raw(j as f64 - 1.0) <= 1.0 {
            j -= 1;
        }
        while self.raw(j as f64) > 1.0 {
            j += 1;
        }
        Ok(j)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Extreme-value index: `1/(α−1)` for power envelopes, `0` for geometric.
    pub fn gamma(&self) -> f64 {
        match self.family {
            Family::Power { alpha, .. } => 1.0 / (alpha - 1.0),
            Family::Geometric { .. } => 0.0,
        }
    }

    fn raw(&self, x: f64) -> f64 {
        match self.family {
            Family::Power { scale, alpha } => scale * x.powf(-alpha),
            Family::Geometric { scale, ratio } => scale * ratio.powf(x),
        }
    }

    /// `Σ_{k≥0} raw(a + step·k)` for `a ≥ clip_end`.
    fn raw_progression_sum(&self, a: f64, step: f64) -> f64 {
        match self.family {
            Family::Power { scale, alpha } => scale * step.powf(-alpha) * hurwitz_zeta(alpha, a / step),
            Family::Geometric { scale, ratio } => scale * ratio.powf(a) / -(step * ratio.ln()).exp_m1(),
        }
    }

    /// Envelope value `f(j)`.
    pub fn f(&self, j: u64) -> f64 {
        if j < self.clip_end {
            1.0
        } else {
            self.raw(j as f64)
        }
    }

    /// Unclipped tail mass `Σ_{j>k} f(j)`.
    pub fn tail_sum(&self, k: u64) -> f64 {
        let start = (k + 1).max(self.clip_end);
        let ones = self.clip_end.saturating_sub(k + 1) as f64;
        ones + self.raw_progression_sum(start as f64, 1.0)
    }

    /// Sum of `f` over the progression `start, start + step, …` (`step ≥ 1`).
    fn progression_sum(&self, start: u64, step: u64) -> f64 {
        let (first, ones) = if start >= self.clip_end {
            (start, 0)
        } else {
            let n = (self.clip_end - start).div_ceil(step);
            (start + n * step, n)
        };
        ones as f64 + self.raw_progression_sum(first as f64, step as f64)
    }

    /// Survival function `F̄(k) = min(1, Σ_{j>k} f(j))` of the envelope distribution.
    pub fn survival(&self, k: u64) -> f64 {
        self.tail_sum(k).min(1.0)
    }

    /// Envelope distribution `F(k)`.
    pub fn cdf(&self, k: u64) -> f64 {
        1.0 - self.survival(k)
    }

    /// `ln F̄(k+1) − ln F̄(k)`, computed without cancellation.
    fn log_survival_step(&self, k: u64) -> f64 {
        let t = self.tail_sum(k);
        if t > 1.0 {
            self.survival(k + 1).ln()
        } else {
            (-self.f(k + 1) / t).ln_1p()
        }
    }

    /// Smoothed survival `F̄_c(x)`.
    ///
    /// Agrees with [`survival`](Self::survival) at integers. Between
    /// integers `ln F̄` is interpolated by a monotone cubic Hermite spline
    /// whose node slopes are harmonic means of adjacent secants, which keeps
    /// it C¹ and strictly decreasing wherever `F̄ < 1`.
    pub fn smoothed_survival(&self, x: f64) -> f64 {
        assert!(x >= 0.0, "smoothed survival needs x ≥ 0, got {x}");
        if x >= 1e15 {
            return self.raw_progression_sum(x + 1.0, 1.0).min(1.0);
        }
        let k = x.floor() as u64;
        let t = x - k as f64;
        let base = self.survival(k);
        if t == 0.0 {
            return base;
        }
        let d = self.log_survival_step(k);
        let d_prev = if k == 0 { 0.0 } else { self.log_survival_step(k - 1) };
        let d_next = self.log_survival_step(k + 1);
        let slope = |a: f64, b: f64| if a < 0.0 && b < 0.0 { 2.0 * a * b / (a + b) } else { 0.0 };
        let m0 = slope(d_prev, d);
        let m1 = slope(d, d_next);
        let t2 = t * t;
        let t3 = t2 * t;
        let h01 = 3.0 * t2 - 2.0 * t3;
        let h10 = t3 - 2.0 * t2 + t;
        let h11 = t3 - t2;
        base * (h01 * d + h10 * m0 + h11 * m1).exp()
    }

    /// Quantile `U(t)`: the `x` with `F̄_c(x) = 1/t`, to relative tolerance 1e-10.
    pub fn quantile(&self, t: f64) -> Result<f64, EnvelopeError> {
        if t.is_nan() || t <= 1.0 {
            return Err(EnvelopeError::QuantileDomain(t));
        }
        let p = 1.0 / t;
        let mut lo = 0.0;
        let mut hi = 1.0;
        while self.smoothed_survival(hi) > p {
            lo = hi;
            hi *= 2.0;
            if hi > 1e300 {
                return Ok(f64::INFINITY);
            }
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-10 * hi {
                break;
            }
            if self.smoothed_survival(mid) > p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Exact threshold `m(t)`: the root of `F̄_c(x) = x/t` on `[0, t]`, to
    /// absolute tolerance 1e-9. Returns `t` when `F̄_c(t) = 1` (no crossing yet).
    pub fn exact_threshold(&self, t: f64) -> f64 {
        if t.is_nan() || t <= 0.0 {
            return 0.0;
        }
        let g = |x: f64| self.smoothed_survival(x) - x / t;
        if g(t) >= 0.0 {
            return t;
        }
        let (mut lo, mut hi) = (0.0, t);
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= 1e-9 || mid <= lo || mid >= hi {
                break;
            }
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// `k0 = max{k : Σ_{j≥k} f(j) ≥ 1}`, where the envelope distribution
    /// puts its first atom.
    pub fn first_atom(&self) -> u64 {
        // tail_sum(k-1) ≥ 1 holds at k = 1 and fails eventually
        let mut lo = 1u64;
        let mut hi = 2u64;
        while self.tail_sum(hi - 1) >= 1.0 {
            lo = hi;
            hi *= 2;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.tail_sum(mid - 1) >= 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// The envelope distribution as a source.
    pub fn envelope_source(&self) -> SourceModel {
        SourceModel::build(Law::Envelope {
            spec: self.clone(),
            first_atom: self.first_atom(),
        })
    }

    pub fn bayes_construction(&self) -> Result<BayesConstruction, EnvelopeError> {
        BayesConstruction::new(self.clone())
    }

    /// Worst-case source `P_θ` with `θ` drawn as fair bits keyed by `theta_seed`.
    pub fn bayes_source(&self, theta_seed: u64) -> Result<SourceModel, EnvelopeError> {
        Ok(self.bayes_construction()?.source(theta_seed))
    }
}

impl fmt::Display for EnvelopeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.family {
            Family::Power { scale, alpha } => write!(f, "power:alpha={alpha},c={scale}"),
            Family::Geometric { scale, ratio } => write!(f, "geometric:q={ratio},c={scale}"),
        }
    }
}

impl FromStr for EnvelopeSpec {
    type Err = EnvelopeError;

    /// `power:alpha=A[,c=C]` or `geometric:q=Q[,c=C]`; `c` defaults to 1.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parse_err = || EnvelopeError::Parse(s.to_string());
        let (kind, params) = s.trim().split_once(':').ok_or_else(parse_err)?;
        let mut scale = 1.0;
        let mut shape = None;
        for item in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (key, value) = item.split_once('=').ok_or_else(parse_err)?;
            let value: f64 = value.trim().parse().map_err(|_| parse_err())?;
            match (kind.trim(), key.trim()) {
                (_, "c") => scale = value,
                ("power", "alpha") | ("geometric", "q") => shape = Some(value),
                _ => return Err(parse_err()),
            }
        }
        let shape = shape.ok_or_else(parse_err)?;
        match kind.trim() {
            "power" => Self::power(shape, scale),
            "geometric" => Self::geometric(shape, scale),
            _ => Err(parse_err()),
        }
    }
}

/// The dithered worst-case construction for a (non-increasing) envelope.
///
/// Symbols below `j0` get `f(j)/Z`. From `j0` on, the alphabet is cut into
/// pairs `{j0+2k, j0+2k+1}`; block `k` carries mass
/// `min(f(j0+2k), f(j0+2k+1))` on the member selected by `θ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct BayesConstruction {
    spec: EnvelopeSpec,
    j0: u64,
    normalizer: f64,
    head_mass: f64,
}

impl BayesConstruction {
    /// Picks the smallest `j0` with `Σ_{j<j0} f(j) ≥ 1` whose block masses
    /// sum to less than 1, so that `Z ≥ 1`.
    pub fn new(spec: EnvelopeSpec) -> Result<Self, EnvelopeError> {
        let mut head = 0.0;
        let mut j0 = 1u64;
        while head < 1.0 {
            head += spec.f(j0);
            j0 += 1;
        }
        loop {
            let blocks = spec.progression_sum(j0 + 1, 2);
            if blocks < 1.0 {
                let normalizer = head / (1.0 - blocks);
                return Ok(Self {
                    spec,
                    j0,
                    normalizer,
                    head_mass: head,
                });
            }
            if j0 > 1 << 24 {
                return Err(EnvelopeError::Invalid("no admissible j0 for the worst-case construction".into()));
            }
            head += spec.f(j0);
            j0 += 1;
        }
    }

    pub fn j0(&self) -> u64 {
        self.j0
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    pub fn spec(&self) -> &EnvelopeSpec {
        &self.spec
    }

    /// Mass of block `k`: `min(f(j0+2k), f(j0+2k+1)) = f(j0+2k+1)`.
    pub fn block_mass(&self, k: u64) -> f64 {
        self.spec.f(self.j0 + 2 * k + 1)
    }

    /// `Σ_{k' ≥ k}` block masses.
    pub fn blocks_tail(&self, k: u64) -> f64 {
        self.spec.progression_sum(self.j0 + 2 * k + 1, 2)
    }

    /// Reindexed probability `g(j')`.
    pub fn reindexed_pmf(&self, j: u64) -> f64 {
        if j == 0 {
            0.0
        } else if j < self.j0 {
            self.spec.f(j) / self.normalizer
        } else {
            self.block_mass(j - self.j0)
        }
    }

    /// `Ḡ(k) = Σ_{j'>k} g(j')`.
    pub fn reindexed_survival(&self, k: u64) -> f64 {
        if k + 1 >= self.j0 {
            self.blocks_tail(k + 1 - self.j0)
        } else {
            let below: f64 = (1..=k).map(|j| self.spec.f(j)).sum();
            (self.head_mass - below) / self.normalizer + self.blocks_tail(0)
        }
    }

    /// The common reindexed law `G`.
    pub fn reindexed(&self) -> SourceModel {
        SourceModel::build(Law::Reindexed(self.clone()))
    }

    pub fn source(&self, theta_seed: u64) -> SourceModel {
        SourceModel::build(Law::Bayes {
            construction: self.clone(),
            theta_seed,
        })
    }
}

/// Bit `θ_k` of the dither sequence keyed by `seed` (splitmix64 finalizer).
pub fn theta_bit(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    (z ^ (z >> 31)) & 1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    EnvelopeDistribution,
    BayesWorstCase { theta_seed: u64 },
    BayesReindexed,
    Custom,
}

#[derive(Debug, Clone)]
enum Law {
    Envelope { spec: EnvelopeSpec, first_atom: u64 },
    Bayes { construction: BayesConstruction, theta_seed: u64 },
    Reindexed(BayesConstruction),
    Custom(Vec<f64>),
}

/// A memoryless source over the positive integers, sampled by inverting
/// its survival function.
///
/// The survival function is tabulated up to the point where it falls below
/// [`HEAD_TAIL_MASS`] (or over the whole support for finite pmfs); deeper
/// draws fall back to an exponential-then-bisection search on the analytic
/// tail.
#[derive(Debug, Clone)]
pub struct SourceModel {
    law: Law,
    head_survival: Vec<f64>,
}

const HEAD_TAIL_MASS: f64 = 1e-3;
const HEAD_MAX: u64 = 1 << 20;

impl SourceModel {
    fn build(law: Law) -> Self {
        let mut model = Self {
            law,
            head_survival: Vec::new(),
        };
        let mut table = vec![1.0];
        let limit = match &model.law {
            Law::Custom(p) => p.len() as u64,
            _ => HEAD_MAX,
        };
        let mut k = 0;
        while k < limit && (table[k as usize] >= HEAD_TAIL_MASS || k < 64 || matches!(model.law, Law::Custom(_))) {
            k += 1;
            table.push(model.sampling_survival(k));
        }
        model.head_survival = table;
        model
    }

    /// A finite pmf over `1..=pmf.len()`.
    pub fn custom(pmf: Vec<f64>) -> Result<Self, EnvelopeError> {
        if pmf.is_empty() || pmf.iter().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return Err(EnvelopeError::Source("pmf entries must be finite and non-negative".into()));
        }
        let total: f64 = pmf.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(EnvelopeError::Source(format!("pmf sums to {total}, not 1")));
        }
        Ok(Self::build(Law::Custom(pmf)))
    }

    /// The source that always emits `1`.
    pub fn deterministic() -> Self {
        Self::build(Law::Custom(vec![1.0]))
    }

    pub fn provenance(&self) -> Provenance {
        match &self.law {
            Law::Envelope { .. } => Provenance::EnvelopeDistribution,
            Law::Bayes { theta_seed, .. } => Provenance::BayesWorstCase { theta_seed: *theta_seed },
            Law::Reindexed(_) => Provenance::BayesReindexed,
            Law::Custom(_) => Provenance::Custom,
        }
    }

    pub fn pmf(&self, j: u64) -> f64 {
        if j == 0 {
            return 0.0;
        }
        match &self.law {
            Law::Envelope { spec, first_atom } => {
                if j < *first_atom {
                    0.0
                } else if j == *first_atom {
                    1.0 - spec.tail_sum(j)
                } else {
                    spec.f(j)
                }
            }
            Law::Bayes { construction, theta_seed } => {
                let j0 = construction.j0;
                if j < j0 {
                    construction.reindexed_pmf(j)
                } else {
                    let k = (j - j0) / 2;
                    if (j - j0) % 2 == theta_bit(*theta_seed, k) {
                        construction.block_mass(k)
                    } else {
                        0.0
                    }
                }
            }
            Law::Reindexed(c) => c.reindexed_pmf(j),
            Law::Custom(p) => p.get((j - 1) as usize).copied().unwrap_or(0.0),
        }
    }

    /// `Σ_{j>k} pmf(j)`.
    pub fn survival(&self, k: u64) -> f64 {
        match &self.law {
            Law::Bayes { construction, theta_seed } => {
                let j0 = construction.j0;
                if k + 1 < j0 {
                    construction.reindexed_survival(k)
                } else {
                    let offset = k + 1 - j0;
                    let block = offset / 2;
                    if offset.is_multiple_of(2) {
                        construction.blocks_tail(block)
                    } else {
                        let here = theta_bit(*theta_seed, block) as f64 * construction.block_mass(block);
                        here + construction.blocks_tail(block + 1)
                    }
                }
            }
            _ => self.sampling_survival(k),
        }
    }

    /// Survival of the law that is sampled directly; for `P_θ` this is the
    /// reindexed `G`, and draws are then mapped through `θ`.
    fn sampling_survival(&self, k: u64) -> f64 {
        match &self.law {
            Law::Envelope { spec, first_atom } => {
                if k < *first_atom {
                    1.0
                } else {
                    spec.tail_sum(k)
                }
            }
            Law::Bayes { construction, .. } | Law::Reindexed(construction) => construction.reindexed_survival(k),
            Law::Custom(p) => {
                let k = (k as usize).min(p.len());
                p[k..].iter().sum::<f64>()
            }
        }
    }

    /// `m'_n = min{k ≥ 1 : Ḡ(k) ≤ k/n}` for the law whose distinct-symbol
    /// count this source shares (the reindexed `G` for `P_θ`).
    pub fn integer_threshold(&self, n: u64) -> u64 {
        if n == 0 {
            return 1;
        }
        let ok = |k: u64| self.sampling_survival(k) <= k as f64 / n as f64;
        let (mut lo, mut hi) = (1u64, n.max(1));
        if ok(lo) {
            return 1;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// Checks `pmf(j) ≤ f(j)` for `j ≤ up_to`.
    pub fn dominated_by(&self, spec: &EnvelopeSpec, up_to: u64) -> bool {
        (1..=up_to).all(|j| self.pmf(j) <= spec.f(j) * (1.0 + 1e-12))
    }

    /// One draw for a uniform `u ∈ (0, 1]`: the least `k` with `S(k) < u`.
    fn invert(&self, u: f64) -> u64 {
        let table = &self.head_survival;
        let last = table.len() - 1;
        if table[last] < u {
            return table.partition_point(|&s| s >= u) as u64;
        }
        if matches!(self.law, Law::Custom(_)) {
            return last as u64;
        }
        let mut lo = last as u64; // S(lo) ≥ u
        let mut hi = lo.max(1) * 2;
        while self.sampling_survival(hi) >= u {
            lo = hi;
            hi = hi.saturating_mul(2);
            if hi == u64::MAX {
                return hi;
            }
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.sampling_survival(mid) >= u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    }

    fn map_draw(&self, j: u64) -> u64 {
        match &self.law {
            Law::Bayes { construction, theta_seed } if j >= construction.j0 => {
                let k = j - construction.j0;
                construction.j0 + 2 * k + theta_bit(*theta_seed, k)
            }
            _ => j,
        }
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let u = 1.0 - rng.random::<f64>();
        self.map_draw(self.invert(u))
    }

    /// `n` i.i.d. draws from a ChaCha8 generator seeded with `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<u64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample_with(&mut rng)).collect()
    }

    /// `−log2 P(x_{1:n})`; infinite if some symbol has probability 0.
    pub fn neg_log2_likelihood(&self, xs: &[u64]) -> f64 {
        xs.iter().map(|&x| -self.pmf(x).log2()).sum()
    }
}
