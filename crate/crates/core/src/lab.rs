//! Monte-Carlo experiments on envelope-class sources.
//!
//! Each trial draws `x_{1:n}` from a source, encodes it, and records the
//! codelength split together with `−log2 P_n(x_{1:n})`, the final empirical
//! threshold `M_n` and the number of distinct symbols `K_n`. Trials are
//! keyed by `(seed, n, trial)`, so results do not depend on scheduling.
//!
//! CSV column orders are fixed by the `HEADER` constant of each row type.

use std::collections::HashSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::codec::{self, CensorRule, CodecError};
use crate::envelope::{BayesConstruction, EnvelopeError, EnvelopeSpec, SourceModel};

/// Fewest trials accepted by a bound-checking redundancy experiment.
pub const MIN_TRIALS_REDUNDANCY: usize = 30;
/// Fewest trials accepted by threshold and distinct-symbol experiments.
pub const MIN_TRIALS_CONCENTRATION: usize = 200;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config: {0}")]
    Config(String),
    #[error("at least {required} trials per n are required, got {got}")]
    TooFewTrials { required: usize, got: usize },
    #[error(transparent)]
    Envelope(#[from] EnvelopeError),
    #[error("codec failure in trial: {0}")]
    Codec(#[from] CodecError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Which member of the envelope class is sampled.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceKind {
    /// The envelope distribution itself.
    Envelope,
    /// Worst-case source `P_θ`, with a fresh `θ` per trial.
    Bayes,
    /// A finite pmf over `1..=len`.
    Custom(Vec<f64>),
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceKind::Envelope => f.write_str("envelope"),
            SourceKind::Bayes => f.write_str("bayes"),
            SourceKind::Custom(p) => {
                let parts: Vec<String> = p.iter().map(f64::to_string).collect();
                write!(f, "custom:{}", parts.join(","))
            }
        }
    }
}

impl FromStr for SourceKind {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "envelope" => Ok(SourceKind::Envelope),
            "bayes" => Ok(SourceKind::Bayes),
            other => {
                let pmf = other
                    .strip_prefix("custom:")
                    .ok_or_else(|| LabError::Config(format!("unknown source '{other}'")))?;
                let values = pmf
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| LabError::Config(format!("bad pmf '{pmf}'")))?;
                Ok(SourceKind::Custom(values))
            }
        }
    }
}

/// Parses `a..b` (powers-of-two doubling from `a` up to `b`) or a
/// comma-separated increasing list.
pub fn parse_n_grid(s: &str) -> Result<Vec<u64>, LabError> {
    let bad = || LabError::Config(format!("bad n grid '{s}' (expected e.g. 1024..65536 or 100,200,400)"));
    let grid: Vec<u64> = if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a == 0 || a > b {
            return Err(bad());
        }
        std::iter::successors(Some(a), |&n| n.checked_mul(2)).take_while(|&n| n <= b).collect()
    } else {
        s.split(',').map(|v| v.trim().parse::<u64>().map_err(|_| bad())).collect::<Result<_, _>>()?
    };
    if grid.is_empty() || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad());
    }
    Ok(grid)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub envelope: EnvelopeSpec,
    pub source: SourceKind,
    pub n_grid: Vec<u64>,
    pub trials: usize,
    pub seed: u64,
    pub rule: CensorRule,
    pub output: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            envelope: EnvelopeSpec::power(2.0, 1.0).expect("valid default envelope"),
            source: SourceKind::Envelope,
            n_grid: parse_n_grid("1024..65536").expect("valid default grid"),
            trials: MIN_TRIALS_CONCENTRATION,
            seed: 1,
            rule: CensorRule::Rank,
            output: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads `key = value` lines; `#` starts a comment. Keys: `envelope`,
    /// `source`, `n`, `trials`, `seed`, `rule`, `out`. Missing keys keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self, LabError> {
        let mut cfg = Self::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| LabError::Config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(key.trim(), value.trim())
                .map_err(|e| LabError::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = fs::read_to_string(path).map_err(|source| LabError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Sets one option by its config-file key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), LabError> {
        match key {
            "envelope" => self.envelope = value.parse()?,
            "source" => self.source = value.parse()?,
            "n" => self.n_grid = parse_n_grid(value)?,
            "trials" => {
                self.trials = value
                    .parse()
                    .map_err(|_| LabError::Config(format!("bad trial count '{value}'")))?
            }
            "seed" => self.seed = value.parse().map_err(|_| LabError::Config(format!("bad seed '{value}'")))?,
            "rule" => self.rule = value.parse().map_err(LabError::Config)?,
            "out" => self.output = Some(PathBuf::from(value)),
            other => return Err(LabError::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn require_trials(&self, required: usize) -> Result<(), LabError> {
        if self.trials < required {
            return Err(LabError::TooFewTrials {
                required,
                got: self.trials,
            });
        }
        Ok(())
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generator key for one trial.
pub fn trial_key(seed: u64, n: u64, trial: u64) -> u64 {
    splitmix(splitmix(splitmix(seed) ^ n) ^ trial)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub n: u64,
    pub trial: u64,
    /// Generator key the sample was drawn with.
    pub seed: u64,
    pub total_bits: u64,
    pub mixture_bits: u64,
    pub elias_bits: u64,
    pub ideal_mixture_bits: f64,
    /// `N`: censored symbols, terminator excluded.
    pub censored: u64,
    /// `M_n`.
    pub final_rank: u64,
    /// `K_n`.
    pub distinct: u64,
    /// `−log2 P_n(x_{1:n})` under the sampling source.
    pub neg_log2_likelihood: f64,
}

impl TrialRecord {
    /// Pointwise redundancy `total_bits + log2 P_n(x)`.
    pub fn redundancy(&self) -> f64 {
        self.total_bits as f64 - self.neg_log2_likelihood
    }

    /// Mixture part `mixture_bits + log2 P_n(x)`.
    pub fn mixture_redundancy(&self) -> f64 {
        self.mixture_bits as f64 - self.neg_log2_likelihood
    }
}

enum Prepared {
    Fixed(SourceModel),
    Bayes(BayesConstruction),
}

/// A validated configuration with its source prepared once.
pub struct Experiment {
    cfg: ExperimentConfig,
    prepared: Prepared,
}

impl Experiment {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, LabError> {
        let prepared = match &cfg.source {
            SourceKind::Envelope => Prepared::Fixed(cfg.envelope.envelope_source()),
            SourceKind::Bayes => Prepared::Bayes(cfg.envelope.bayes_construction()?),
            SourceKind::Custom(pmf) => Prepared::Fixed(SourceModel::custom(pmf.clone())?),
        };
        Ok(Self { cfg, prepared })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    /// `m_n` of the envelope.
    pub fn exact_threshold(&self, n: u64) -> f64 {
        self.cfg.envelope.exact_threshold(n as f64)
    }

    /// `m'_n` of the sampled law (the reindexed law for worst-case sources).
    pub fn integer_threshold(&self, n: u64) -> u64 {
        match &self.prepared {
            Prepared::Fixed(src) => src.integer_threshold(n),
            Prepared::Bayes(c) => c.reindexed().integer_threshold(n),
        }
    }

    pub fn run_trial(&self, n: u64, trial: u64) -> Result<TrialRecord, LabError> {
        let key = trial_key(self.cfg.seed, n, trial);
        let bayes;
        let source = match &self.prepared {
            Prepared::Fixed(src) => src,
            Prepared::Bayes(c) => {
                bayes = c.source(splitmix(key ^ 0x7468_6574_6131));
                &bayes
            }
        };
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let xs: Vec<u64> = (0..n).map(|_| source.sample_with(&mut rng)).collect();
        let (_, report) = codec::encode_with_report(&xs, self.cfg.rule)?;
        let distinct = xs.iter().collect::<HashSet<_>>().len() as u64;
        Ok(TrialRecord {
            n,
            trial,
            seed: key,
            total_bits: report.total_bits,
            mixture_bits: report.mixture_bits,
            elias_bits: report.elias_bits,
            ideal_mixture_bits: report.ideal_mixture_bits,
            censored: report.censored,
            final_rank: report.final_rank,
            distinct,
            neg_log2_likelihood: source.neg_log2_likelihood(&xs),
        })
    }

    /// All trials for every `n`, in grid order then trial order.
    pub fn run_grid(&self) -> Result<Vec<Vec<TrialRecord>>, LabError> {
        self.cfg
            .n_grid
            .iter()
            .map(|&n| {
                (0..self.cfg.trials as u64)
                    .into_par_iter()
                    .map(|t| self.run_trial(n, t))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect()
    }
}

pub fn run_trial(cfg: &ExperimentConfig, n: u64, trial: u64) -> Result<TrialRecord, LabError> {
    Experiment::new(cfg.clone())?.run_trial(n, trial)
}

/// Mean, unbiased variance and standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub var: f64,
    pub se: f64,
}

impl Summary {
    pub fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = values.into_iter().collect();
        let n = v.len() as f64;
        if v.is_empty() {
            return Self { mean: f64::NAN, var: f64::NAN, se: f64::NAN };
        }
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 {
            v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self { mean, var, se: (var / n).sqrt() }
    }
}

/// Outcome of one bound check.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self { name: name.to_string(), passed, detail }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{}: {verdict}  ({})", self.name, self.detail)
    }
}

pub trait CsvRow {
    const HEADER: &'static [&'static str];
    fn fields(&self) -> Vec<String>;
}

fn num(x: f64) -> String {
    x.to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyRow {
    pub n: u64,
    pub trials: usize,
    pub mean_redundancy: f64,
    pub se: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub m_n: f64,
    pub m_log_n: f64,
    pub upper_five_halves: f64,
    pub lower_half: f64,
    /// `2·m_n·log2 n·log2 max(m_n, 2)`.
    pub light_tail_shape: f64,
    pub mean_mixture_redundancy: f64,
    pub mean_elias_bits: f64,
    pub mean_censored: f64,
    pub mean_rank: f64,
    pub mean_distinct: f64,
    pub per_symbol: f64,
}

impl CsvRow for RedundancyRow {
    const HEADER: &'static [&'static str] = &[
        "n",
        "trials",
        "mean_redundancy",
        "se",
        "ci_low",
        "ci_high",
        "m_n",
        "m_log2n",
        "bound_5_2",
        "bound_1_2",
        "light_tail_shape",
        "mean_mixture_redundancy",
        "mean_elias_bits",
        "mean_censored",
        "mean_M",
        "mean_K",
        "per_symbol",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.trials.to_string(),
            num(self.mean_redundancy),
            num(self.se),
            num(self.ci_low),
            num(self.ci_high),
            num(self.m_n),
            num(self.m_log_n),
            num(self.upper_five_halves),
            num(self.lower_half),
            num(self.light_tail_shape),
            num(self.mean_mixture_redundancy),
            num(self.mean_elias_bits),
            num(self.mean_censored),
            num(self.mean_rank),
            num(self.mean_distinct),
            num(self.per_symbol),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdRow {
    pub n: u64,
    pub trials: usize,
    pub mean_rank: f64,
    pub var_rank: f64,
    pub se_rank: f64,
    pub m_n: f64,
    /// `m_n + 3√m_n + 3`.
    pub mean_bound: f64,
    /// Deviation levels `t = √mean` and `2√mean`, with the fraction of
    /// trials where `M_n − mean ≥ t` and the Bernstein bound
    /// `exp(−t²/(2(mean + t/3)))`.
    pub t1: f64,
    pub exceed_t1: f64,
    pub bernstein_t1: f64,
    pub t2: f64,
    pub exceed_t2: f64,
    pub bernstein_t2: f64,
}

impl CsvRow for ThresholdRow {
    const HEADER: &'static [&'static str] = &[
        "n",
        "trials",
        "mean_M",
        "var_M",
        "se_M",
        "m_n",
        "mean_bound",
        "t1",
        "exceed_t1",
        "bernstein_t1",
        "t2",
        "exceed_t2",
        "bernstein_t2",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.trials.to_string(),
            num(self.mean_rank),
            num(self.var_rank),
            num(self.se_rank),
            num(self.m_n),
            num(self.mean_bound),
            num(self.t1),
            num(self.exceed_t1),
            num(self.bernstein_t1),
            num(self.t2),
            num(self.exceed_t2),
            num(self.bernstein_t2),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DistinctRow {
    pub n: u64,
    pub trials: usize,
    pub mean_distinct: f64,
    pub se_distinct: f64,
    pub mean_rank: f64,
    pub twice_mean_rank: f64,
    /// Standard error of the paired difference `K_n − 2M_n`.
    pub se_gap: f64,
    pub integer_threshold: u64,
    pub ratio: f64,
}

impl CsvRow for DistinctRow {
    const HEADER: &'static [&'static str] = &[
        "n",
        "trials",
        "mean_K",
        "se_K",
        "mean_M",
        "twice_mean_M",
        "se_K_minus_2M",
        "m_prime_n",
        "ratio_K_over_m_prime",
    ];

    fn fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.trials.to_string(),
            num(self.mean_distinct),
            num(self.se_distinct),
            num(self.mean_rank),
            num(self.twice_mean_rank),
            num(self.se_gap),
            self.integer_threshold.to_string(),
            num(self.ratio),
        ]
    }
}

pub fn redundancy_rows(exp: &Experiment, records: &[Vec<TrialRecord>]) -> Vec<RedundancyRow> {
    records
        .iter()
        .map(|trials| {
            let n = trials.first().map_or(0, |r| r.n);
            let r = Summary::of(trials.iter().map(TrialRecord::redundancy));
            let m_n = exp.exact_threshold(n);
            let log_n = (n.max(1) as f64).log2();
            let mean = |f: fn(&TrialRecord) -> f64| Summary::of(trials.iter().map(f)).mean;
            RedundancyRow {
                n,
                trials: trials.len(),
                mean_redundancy: r.mean,
                se: r.se,
                ci_low: r.mean - 1.96 * r.se,
                ci_high: r.mean + 1.96 * r.se,
                m_n,
                m_log_n: m_n * log_n,
                upper_five_halves: 2.5 * m_n * log_n,
                lower_half: 0.5 * m_n * log_n,
                light_tail_shape: 2.0 * m_n * log_n * m_n.max(2.0).log2(),
                mean_mixture_redundancy: mean(TrialRecord::mixture_redundancy),
                mean_elias_bits: mean(|t| t.elias_bits as f64),
                mean_censored: mean(|t| t.censored as f64),
                mean_rank: mean(|t| t.final_rank as f64),
                mean_distinct: mean(|t| t.distinct as f64),
                per_symbol: r.mean / n.max(1) as f64,
            }
        })
        .collect()
}

/// Mean redundancy per grid point with bound curves, and the checks:
/// heavy-tailed envelopes against `3·m_n·log2 n` with a grid spread of the
/// normalized redundancy of at most 4; light-tailed envelopes against
/// `2.5·m_n·log2 n·log2 max(m_n, 2)`; the mixture part against
/// `0.8·m_n·log2 n + 2(N̄+1)`; vanishing per-symbol redundancy; and a
/// floor of −1 bit.
pub fn redundancy_curve(cfg: &ExperimentConfig) -> Result<(Vec<RedundancyRow>, Vec<Check>), LabError> {
    cfg.require_trials(MIN_TRIALS_REDUNDANCY)?;
    let exp = Experiment::new(cfg.clone())?;
    let records = exp.run_grid()?;
    let rows = redundancy_rows(&exp, &records);
    let checks = redundancy_checks(&cfg.envelope, &rows);
    Ok((rows, checks))
}

pub fn redundancy_checks(envelope: &EnvelopeSpec, rows: &[RedundancyRow]) -> Vec<Check> {
    let mut checks = Vec::new();
    let worst = |f: &dyn Fn(&RedundancyRow) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    if envelope.gamma() > 0.0 {
        let w = worst(&|r| r.mean_redundancy / r.m_log_n);
        checks.push(Check::new("redundancy<=3.0*m*log2(n)", w <= 3.0, format!("max ratio {w:.4}")));
        let ratios: Vec<f64> = rows.iter().map(|r| r.mean_redundancy / r.m_log_n).collect();
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        checks.push(Check::new(
            "ratio-spread<=4",
            lo > 0.0 && hi / lo <= 4.0,
            format!("min {lo:.4}, max {hi:.4}"),
        ));
    } else {
        let bound = |r: &RedundancyRow| 2.5 * r.m_log_n * r.m_n.max(2.0).log2();
        let w = worst(&|r| r.mean_redundancy / bound(r));
        checks.push(Check::new(
            "redundancy<=2.5*m*log2(n)*log2(m)",
            w <= 1.0,
            format!("max fraction of bound {w:.4}"),
        ));
    }
    let w = worst(&|r| r.mean_mixture_redundancy - (0.8 * r.m_log_n + 2.0 * (r.mean_censored + 1.0)));
    checks.push(Check::new(
        "mixture<=0.8*m*log2(n)+2(N+1)",
        w <= 0.0,
        format!("max excess {w:.3} bits"),
    ));
    let decreasing = rows
        .windows(2)
        .all(|w| w[1].per_symbol <= w[0].per_symbol + 3.0 * w[0].se / w[0].n as f64);
    checks.push(Check::new(
        "per-symbol-decreasing",
        decreasing,
        format!(
            "{:.5} -> {:.5}",
            rows.first().map_or(f64::NAN, |r| r.per_symbol),
            rows.last().map_or(f64::NAN, |r| r.per_symbol)
        ),
    ));
    let floor = rows.iter().map(|r| r.mean_redundancy).fold(f64::INFINITY, f64::min);
    checks.push(Check::new("redundancy>=-1", floor >= -1.0, format!("min {floor:.3} bits")));
    checks
}

fn bernstein(mean: f64, t: f64) -> f64 {
    (-t * t / (2.0 * (mean + t / 3.0))).exp()
}

pub fn threshold_rows(exp: &Experiment, records: &[Vec<TrialRecord>]) -> Vec<ThresholdRow> {
    records
        .iter()
        .map(|trials| {
            let n = trials.first().map_or(0, |r| r.n);
            let s = Summary::of(trials.iter().map(|t| t.final_rank as f64));
            let m_n = exp.exact_threshold(n);
            let count = trials.len() as f64;
            let exceed = |t: f64| trials.iter().filter(|r| r.final_rank as f64 - s.mean >= t).count() as f64 / count;
            let t1 = s.mean.sqrt();
            let t2 = 2.0 * t1;
            ThresholdRow {
                n,
                trials: trials.len(),
                mean_rank: s.mean,
                var_rank: s.var,
                se_rank: s.se,
                m_n,
                mean_bound: m_n + 3.0 * m_n.sqrt() + 3.0,
                t1,
                exceed_t1: exceed(t1),
                bernstein_t1: bernstein(s.mean, t1),
                t2,
                exceed_t2: exceed(t2),
                bernstein_t2: bernstein(s.mean, t2),
            }
        })
        .collect()
}

/// Concentration of `M_n`: `var ≤ mean·(1 + 4/√trials)`,
/// `mean ≤ m_n + 3√m_n + 3 + 3·SE`, and both tail exceedance rates within
/// their Bernstein bounds plus three binomial standard errors.
pub fn threshold_stats(cfg: &ExperimentConfig) -> Result<(Vec<ThresholdRow>, Vec<Check>), LabError> {
    cfg.require_trials(MIN_TRIALS_CONCENTRATION)?;
    let exp = Experiment::new(cfg.clone())?;
    let records = exp.run_grid()?;
    let rows = threshold_rows(&exp, &records);
    let checks = threshold_checks(&rows);
    Ok((rows, checks))
}

pub fn threshold_checks(rows: &[ThresholdRow]) -> Vec<Check> {
    let worst = |f: &dyn Fn(&ThresholdRow) -> f64| rows.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let var = worst(&|r| r.var_rank / (r.mean_rank * (1.0 + 4.0 / (r.trials as f64).sqrt())));
    let mean = worst(&|r| r.mean_rank - (r.mean_bound + 3.0 * r.se_rank));
    let tail = |exceed: f64, bound: f64, trials: usize| exceed - bound - 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt();
    let tails = worst(&|r| tail(r.exceed_t1, r.bernstein_t1, r.trials).max(tail(r.exceed_t2, r.bernstein_t2, r.trials)));
    vec![
        Check::new("var<=mean", var <= 1.0, format!("max var/(slackened mean) {var:.4}")),
        Check::new("mean<=m+3sqrt(m)+3", mean <= 0.0, format!("max excess {mean:.3}")),
        Check::new("tail<=bernstein", tails <= 0.0, format!("max excess {tails:.4}")),
    ]
}

pub fn distinct_rows(exp: &Experiment, records: &[Vec<TrialRecord>]) -> Vec<DistinctRow> {
    records
        .iter()
        .map(|trials| {
            let n = trials.first().map_or(0, |r| r.n);
            let k = Summary::of(trials.iter().map(|t| t.distinct as f64));
            let m = Summary::of(trials.iter().map(|t| t.final_rank as f64));
            let gap = Summary::of(trials.iter().map(|t| t.distinct as f64 - 2.0 * t.final_rank as f64));
            let m_prime = exp.integer_threshold(n);
            DistinctRow {
                n,
                trials: trials.len(),
                mean_distinct: k.mean,
                se_distinct: k.se,
                mean_rank: m.mean,
                twice_mean_rank: 2.0 * m.mean,
                se_gap: gap.se,
                integer_threshold: m_prime,
                ratio: k.mean / m_prime as f64,
            }
        })
        .collect()
}

/// `mean K_n ≤ 2·mean M_n + 3·SE` at every `n`; for heavy-tailed
/// envelopes also `mean K_n / m'_n` within a band of spread at most 3.
pub fn distinct_symbol_stats(cfg: &ExperimentConfig) -> Result<(Vec<DistinctRow>, Vec<Check>), LabError> {
    cfg.require_trials(MIN_TRIALS_CONCENTRATION)?;
    let exp = Experiment::new(cfg.clone())?;
    let records = exp.run_grid()?;
    let rows = distinct_rows(&exp, &records);
    let heavy = cfg.envelope.gamma() > 0.0 && !matches!(cfg.source, SourceKind::Custom(_));
    let checks = distinct_checks(&rows, heavy);
    Ok((rows, checks))
}

pub fn distinct_checks(rows: &[DistinctRow], heavy_tailed: bool) -> Vec<Check> {
    let excess = rows
        .iter()
        .map(|r| r.mean_distinct - r.twice_mean_rank - 3.0 * r.se_gap)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut checks = vec![Check::new("K<=2M", excess <= 0.0, format!("max excess {excess:.3}"))];
    if heavy_tailed {
        let hi = rows.iter().map(|r| r.ratio).fold(f64::NEG_INFINITY, f64::max);
        let lo = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        checks.push(Check::new(
            "K/m'-band<=3",
            lo > 0.0 && hi / lo <= 3.0,
            format!("min {lo:.4}, max {hi:.4}"),
        ));
    }
    checks
}

/// Writes a header row and one row per entry.
pub fn write_csv<R: CsvRow, W: Write>(rows: &[R], writer: W) -> Result<(), LabError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(R::HEADER)?;
    for row in rows {
        w.write_record(row.fields())?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn emit_csv<R: CsvRow>(rows: &[R], path: &Path) -> Result<(), LabError> {
    let io_err = |source| LabError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::create(path).map_err(io_err)?;
    write_csv(rows, io::BufWriter::new(file))
}
