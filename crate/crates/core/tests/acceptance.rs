//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits non-zero if any criterion fails.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use etac::codec::{self, CensorRule, CodelengthReport};
use etac::elias;
use etac::envelope::EnvelopeSpec;
use etac::lab::{self, Experiment, ExperimentConfig, SourceKind, Summary, TrialRecord};
use etac::threshold::ThresholdState;

const CORPUS_SIZE: usize = 1000;
const CORPUS_DIGEST: &str = "6fd6b180305df7f3b41e0f556ead76cded64b8ae2fd697c13dfe355c1e87ecaf";

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Uniform in (0, 1], built from 53 random bits.
fn unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Power-law symbol with `P(X > k) ≈ k^{1−α}`, using only correctly rounded
/// arithmetic so the corpus is identical on every platform.
fn zipf(rng: &mut ChaCha8Rng, alpha_times_two: u32) -> u64 {
    let u = unit(rng);
    let x = match alpha_times_two {
        3 => 1.0 / (u * u),
        4 => 1.0 / u,
        6 => 1.0 / u.sqrt(),
        _ => unreachable!(),
    };
    (x.ceil() as u64).clamp(1, 1 << 40)
}

/// Geometric on `1, 2, …` with stopping chance `1 − q`, `q = num/den`.
fn geometric(rng: &mut ChaCha8Rng, num: u32, den: u32) -> u64 {
    let mut x = 1;
    while rng.random_range(0..den) < num {
        x += 1;
    }
    x
}

fn corpus() -> Vec<Vec<u64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x00C0_FFEE);
    (0..CORPUS_SIZE)
        .map(|i| {
            let len = match i / 8 {
                0 => 0,
                1 => 5000,
                _ => rng.random_range(0..=5000usize),
            };
            match i % 8 {
                0 => (0..len).map(|_| zipf(&mut rng, 3)).collect(),
                1 => (0..len).map(|_| zipf(&mut rng, 4)).collect(),
                2 => (0..len).map(|_| zipf(&mut rng, 6)).collect(),
                3 => (0..len).map(|_| geometric(&mut rng, 1, 2)).collect(),
                4 => (0..len).map(|_| geometric(&mut rng, 9, 10)).collect(),
                5 => vec![rng.random_range(1..=100u64); len],
                6 => {
                    let mut x = rng.random_range(1..=1000u64);
                    (0..len)
                        .map(|_| {
                            x += rng.random_range(1..=3u64);
                            x
                        })
                        .collect()
                }
                _ => {
                    let mut m: Vec<u64> = (0..len).map(|_| zipf(&mut rng, 4)).collect();
                    if len > 0 {
                        let at = rng.random_range(0..len);
                        m[at] = 1_000_000_000;
                    }
                    m
                }
            }
        })
        .collect()
}

/// Threshold by definition: descending order statistics, first rank `k`
/// with `x_(k) ≤ k`, capped at the prefix length.
#[derive(Default)]
struct NaiveThreshold {
    desc: Vec<u64>,
}

impl NaiveThreshold {
    fn insert(&mut self, x: u64) {
        let at = self.desc.partition_point(|&v| v > x);
        self.desc.insert(at, x);
    }

    fn rank_tau(&self) -> (u64, u64) {
        if self.desc.is_empty() {
            return (0, 0);
        }
        let m = (0..self.desc.len())
            .find(|&k| self.desc[k] <= k as u64 + 1)
            .map_or(self.desc.len(), |k| k + 1);
        (m as u64, self.desc[m - 1])
    }

    fn count_at_most(&self, t: u64) -> u64 {
        (self.desc.len() - self.desc.partition_point(|&v| v > t)) as u64
    }

    fn count_of(&self, x: u64) -> u64 {
        let lo = self.desc.partition_point(|&v| v > x);
        let hi = self.desc.partition_point(|&v| v >= x);
        (hi - lo) as u64
    }
}

/// `−log2` of the product of KT predictive ratios along the message,
/// including the terminating escape.
fn ideal_bits_oracle(msg: &[u64], rule: CensorRule) -> f64 {
    let mut past = NaiveThreshold::default();
    let mut bits = 0.0;
    let step = |past: &NaiveThreshold, x: Option<u64>| {
        let (m, tau) = past.rank_tau();
        let t = if rule == CensorRule::Rank { m } else { tau };
        let total = 2 * past.count_at_most(t) + t + 1;
        let weight = match x {
            Some(x) if x <= t => 2 * past.count_of(x) + 1,
            _ => 1,
        };
        (total as f64 / weight as f64).log2()
    };
    for &x in msg {
        bits += step(&past, Some(x));
        past.insert(x);
    }
    bits + step(&past, None)
}

fn criterion_1(corpus: &[Vec<u64>]) -> (Outcome, Vec<CodelengthReport>) {
    let mut failures = 0;
    let mut reports = Vec::with_capacity(corpus.len() * 2);
    for msg in corpus {
        for rule in [CensorRule::Rank, CensorRule::Value] {
            let (container, report) = codec::encode_with_report(msg, rule).expect("corpus symbols are valid");
            if codec::decode_bytes(&container.to_bytes()).ok().as_deref() != Some(msg.as_slice()) {
                failures += 1;
            }
            reports.push(report);
        }
    }
    let total = reports.len();
    let detail = format!("{} of {total} encodings decoded exactly", total - failures);
    (outcome(failures == 0, detail), reports)
}

fn criterion_4(corpus: &[Vec<u64>], reports: &[CodelengthReport]) -> Outcome {
    let mut failures = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    let mut worst_err: f64 = 0.0;
    let cases = corpus.iter().flat_map(|m| [(m, CensorRule::Rank), (m, CensorRule::Value)]);
    for ((msg, rule), report) in cases.zip(reports) {
        let gap = report.mixture_bits as f64 - report.ideal_mixture_bits - 2.0 * (report.censored + 1) as f64;
        let err = (ideal_bits_oracle(msg, rule) - report.ideal_mixture_bits).abs();
        worst_gap = worst_gap.max(gap);
        worst_err = worst_err.max(err);
        if gap > 0.0 || err > 1e-6 {
            failures += 1;
        }
    }
    outcome(
        failures == 0,
        format!("max mixture_bits - ideal - 2(N+1) = {worst_gap:.3}; max ideal-bits discrepancy {worst_err:.2e}"),
    )
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut mismatches = 0u64;
    let mut steps = 0u64;
    for p in 0..10_000 {
        let len = rng.random_range(1..=2000usize);
        let range = match p % 4 {
            0 => 10,
            1 => 100,
            2 => 3000,
            _ => 1 << 40,
        };
        let mut inc = ThresholdState::new();
        let mut naive = NaiveThreshold::default();
        for _ in 0..len {
            let x = if p % 4 == 3 {
                zipf(&mut rng, 4)
            } else {
                rng.random_range(1..=range)
            };
            inc.observe(x).expect("positive symbol");
            naive.insert(x);
            steps += 1;
            if (inc.rank(), inc.tau()) != naive.rank_tau() {
                mismatches += 1;
            }
        }
    }
    outcome(mismatches == 0, format!("{mismatches} mismatches over {steps} steps"))
}

fn bit_length(z: u64) -> u64 {
    64 - z.leading_zeros() as u64
}

fn criterion_3() -> Outcome {
    let mut over_budget = 0;
    let mut bad_decode = 0;
    for y in 1..=1_000_000u64 {
        let word = elias::encode(y).expect("positive");
        let l = bit_length(y);
        if word.len() as u64 > l + 2 * bit_length(l) {
            over_budget += 1;
        }
        if elias::decode(&mut word.cursor()).ok() != Some(y) {
            bad_decode += 1;
        }
    }
    let mut words: Vec<String> = (1..=1u64 << 12).map(|y| elias::encode(y).unwrap().to_string()).collect();
    words.sort();
    let prefix_pairs = words.windows(2).filter(|w| w[1].starts_with(&w[0])).count();
    outcome(
        over_budget == 0 && bad_decode == 0 && prefix_pairs == 0,
        format!("{over_budget} over budget, {bad_decode} decode errors, {prefix_pairs} prefix pairs"),
    )
}

fn loglog_slope(ts: &[f64], ys: &[f64]) -> f64 {
    let xs: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_5() -> Outcome {
    let spec = EnvelopeSpec::power(2.0, 1.0).unwrap();
    let mut worst: f64 = 0.0;
    for e in 2..=7 {
        let n = 10f64.powi(e);
        let m = spec.exact_threshold(n);
        worst = worst.max((spec.smoothed_survival(m) - m / n).abs());
    }
    let ts: Vec<f64> = (0..=16).map(|i| 10f64.powf(3.0 + 0.25 * i as f64)).collect();
    let ms: Vec<f64> = ts.iter().map(|&t| spec.exact_threshold(t)).collect();
    let slope = loglog_slope(&ts, &ms);
    outcome(
        worst <= 1e-8 && (slope - 0.5).abs() <= 0.05,
        format!("max |F̄_c(m) - m/n| = {worst:.2e}; slope {slope:.4}"),
    )
}

fn grid() -> Vec<u64> {
    lab::parse_n_grid("1024..65536").unwrap()
}

fn records(envelope: &str, source: SourceKind, n_grid: Vec<u64>, trials: usize, seed: u64) -> Vec<Vec<TrialRecord>> {
    let cfg = ExperimentConfig {
        envelope: envelope.parse().unwrap(),
        source,
        n_grid,
        trials,
        seed,
        ..ExperimentConfig::default()
    };
    Experiment::new(cfg).unwrap().run_grid().unwrap()
}

fn concentration(spec: &EnvelopeSpec, trials: &[TrialRecord]) -> (bool, String) {
    let m = Summary::of(trials.iter().map(|t| t.final_rank as f64));
    let m_n = spec.exact_threshold(trials[0].n as f64);
    let count = trials.len() as f64;
    let var_ok = m.var <= m.mean * (1.0 + 4.0 / count.sqrt());
    let bound = m_n + 3.0 * m_n.sqrt() + 3.0 + 3.0 * m.se;
    let mean_ok = m.mean <= bound;
    (
        var_ok && mean_ok,
        format!("var {:.2} vs mean {:.2}, mean vs bound {:.2}", m.var, m.mean, bound),
    )
}

/// `(passed, worst excess)` for `mean K ≤ 2·mean M + 3·SE` at every `n`.
fn distinct_vs_rank(grid: &[Vec<TrialRecord>]) -> (bool, f64) {
    let worst = grid
        .iter()
        .map(|trials| {
            let k = Summary::of(trials.iter().map(|t| t.distinct as f64));
            let m = Summary::of(trials.iter().map(|t| t.final_rank as f64));
            let gap = Summary::of(trials.iter().map(|t| t.distinct as f64 - 2.0 * t.final_rank as f64));
            k.mean - 2.0 * m.mean - 3.0 * gap.se
        })
        .fold(f64::NEG_INFINITY, f64::max);
    (worst <= 0.0, worst)
}

fn mean_redundancy(trials: &[TrialRecord]) -> f64 {
    Summary::of(trials.iter().map(TrialRecord::redundancy)).mean
}

fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_etac"))
}

fn bench_bytes(verb: &str, extra: &[&str], out: &std::path::Path) -> Option<Vec<u8>> {
    let status = Command::new(bin())
        .arg(verb)
        .args(extra)
        .arg("--out")
        .arg(out)
        .stderr(std::process::Stdio::null())
        .status()
        .ok()?;
    status.code().filter(|&c| c == 0 || c == 1)?;
    std::fs::read(out).ok()
}

fn criterion_10(corpus: &[Vec<u64>]) -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let runs: [(&str, Vec<&str>); 3] = [
        ("bench-redundancy", vec!["--n", "1024,4096", "--trials", "30", "--seed", "77"]),
        ("bench-threshold", vec!["--n", "2048", "--trials", "200", "--seed", "77", "--envelope", "geometric:q=0.8"]),
        ("bench-distinct", vec!["--n", "1024,2048", "--trials", "200", "--seed", "77", "--source", "bayes"]),
    ];
    let mut identical = 0;
    for (verb, args) in &runs {
        let a = bench_bytes(verb, args, &dir.path().join(format!("{verb}-a.csv")));
        let b = bench_bytes(verb, args, &dir.path().join(format!("{verb}-b.csv")));
        if a.is_some() && a == b {
            identical += 1;
        }
    }
    let mut hasher = Sha256::new();
    for msg in corpus {
        for rule in [CensorRule::Rank, CensorRule::Value] {
            let bytes = codec::encode(msg, rule).unwrap().to_bytes();
            hasher.update((bytes.len() as u64).to_le_bytes());
            hasher.update(&bytes);
        }
    }
    let digest: String = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    outcome(
        identical == runs.len() && digest == CORPUS_DIGEST,
        format!("{identical}/{} bench verbs byte-identical; corpus digest {digest}", runs.len()),
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut record = |id, name, f: &mut dyn FnMut() -> Outcome| {
        let start = Instant::now();
        let o = f();
        let elapsed = start.elapsed();
        let verdict = if o.passed { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict}: {name} ({}; {:.1}s)", o.detail, elapsed.as_secs_f64());
        results.push((id, name, o, elapsed));
    };

    let corpus = corpus();
    let mut reports = Vec::new();
    record(1, "lossless roundtrip on the randomized corpus, both rules", &mut || {
        let (o, r) = criterion_1(&corpus);
        reports = r;
        o
    });
    record(2, "incremental threshold equals the definition", &mut criterion_2);
    record(3, "Elias codeword budget and prefix-freeness", &mut criterion_3);
    record(4, "arithmetic accounting against the KT ratio oracle", &mut || criterion_4(&corpus, &reports));
    record(5, "exact threshold identity and slope", &mut criterion_5);

    let power = EnvelopeSpec::power(2.0, 1.0).unwrap();
    let geo = EnvelopeSpec::geometric(0.8, 1.0).unwrap();
    let (mut conc_power, mut conc_geo, mut red_power, mut red_geo) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    record(6, "threshold concentration at n = 2^14, 500 trials", &mut || {
        conc_power = records("power:alpha=2", SourceKind::Envelope, vec![1 << 14], 500, 6);
        conc_geo = records("geometric:q=0.8", SourceKind::Envelope, vec![1 << 14], 500, 6);
        let (a, da) = concentration(&power, &conc_power[0]);
        let (b, db) = concentration(&geo, &conc_geo[0]);
        outcome(a && b, format!("power: {da}; geometric: {db}"))
    });

    record(7, "heavy-tail redundancy within 3 m_n log2 n, ratio spread <= 4", &mut || {
        red_power = records("power:alpha=2", SourceKind::Envelope, grid(), 100, 7);
        let ratios: Vec<f64> = red_power
            .iter()
            .map(|t| {
                let n = t[0].n as f64;
                mean_redundancy(t) / (power.exact_threshold(n) * n.log2())
            })
            .collect();
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        outcome(hi <= 3.0 && lo > 0.0 && hi / lo <= 4.0, format!("ratio range [{lo:.3}, {hi:.3}]"))
    });

    record(8, "light-tail redundancy within 2.5 m_n log2 n log2 m_n", &mut || {
        red_geo = records("geometric:q=0.8", SourceKind::Envelope, grid(), 100, 8);
        let worst = red_geo
            .iter()
            .map(|t| {
                let n = t[0].n as f64;
                let m = geo.exact_threshold(n);
                mean_redundancy(t) / (2.5 * m * n.log2() * m.max(2.0).log2())
            })
            .fold(f64::NEG_INFINITY, f64::max);
        outcome(worst <= 1.0, format!("max fraction of bound {worst:.3}"))
    });

    record(9, "distinct symbols: K <= 2M and stable K/m'_n band", &mut || {
        let bayes = records("power:alpha=2", SourceKind::Bayes, grid(), 200, 9);
        let mut worst = f64::NEG_INFINITY;
        let mut all = true;
        for g in [&conc_power, &conc_geo, &red_power, &red_geo, &bayes] {
            let (ok, w) = distinct_vs_rank(g);
            all &= ok;
            worst = worst.max(w);
        }
        let construction = power.bayes_construction().unwrap();
        let reindexed = construction.reindexed();
        let ratios: Vec<f64> = bayes
            .iter()
            .map(|t| {
                let k = Summary::of(t.iter().map(|r| r.distinct as f64)).mean;
                k / reindexed.integer_threshold(t[0].n) as f64
            })
            .collect();
        let hi = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = ratios.iter().copied().fold(f64::INFINITY, f64::min);
        outcome(
            all && lo > 0.0 && hi / lo <= 3.0,
            format!("max K - 2M - 3SE {worst:.2}; K/m'_n range [{lo:.3}, {hi:.3}]"),
        )
    });

    record(10, "determinism of bench CSV and corpus encodings", &mut || criterion_10(&corpus));

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.passed).map(|r| r.0).collect();
    let total: f64 = results.iter().map(|r| r.3.as_secs_f64()).sum();
    println!(
        "acceptance: {}/{} criteria passed in {total:.1}s",
        results.len() - failed.len(),
        results.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
