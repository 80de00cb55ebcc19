use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use etac::codec::{self, CensorRule, CodecError, Container};
use etac::lab::{self, Check, CsvRow, ExperimentConfig, LabError};

const EXIT_DATA: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(name = "etac", version, about = "Expanding-threshold auto-censoring coder for integer sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Encode whitespace-separated positive integers into an ETC1 container.
    Compress {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = CensorRule::Rank)]
        rule: CensorRule,
        /// Treat the input as raw bytes, mapping byte b to symbol b+1.
        #[arg(long)]
        bytes: bool,
    },
    /// Decode an ETC1 container back to token text.
    Decompress {
        input: PathBuf,
        output: PathBuf,
        /// Write symbols as raw bytes (symbol s becomes byte s-1).
        #[arg(long)]
        bytes: bool,
    },
    /// Mean redundancy against the envelope bound curves.
    BenchRedundancy(BenchArgs),
    /// Concentration of the empirical threshold M_n.
    BenchThreshold(BenchArgs),
    /// Distinct-symbol counts against 2·M_n and m'_n.
    BenchDistinct(BenchArgs),
    /// Summarize an ETC1 container.
    Inspect { input: PathBuf },
}

#[derive(Args)]
struct BenchArgs {
    /// key = value experiment file; flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// e.g. power:alpha=2 or geometric:q=0.8,c=1
    #[arg(long)]
    envelope: Option<String>,
    /// envelope, bayes or custom:p1,p2,...
    #[arg(long)]
    source: Option<String>,
    /// a..b (doubling) or a comma-separated list
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    trials: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    rule: Option<String>,
    /// CSV destination; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Data(String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Config(_) | LabError::TooFewTrials { .. } | LabError::Envelope(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

fn data<E: std::fmt::Display>(context: &str) -> impl FnOnce(E) -> Failure + '_ {
    move |e| Failure::Data(format!("{context}: {e}"))
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(data(&path.display().to_string()))
}

/// Writes through a temporary file in the destination directory, so a
/// failed run never leaves partial output behind.
fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    let context = path.display().to_string();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(data(&context))?;
    tmp.write_all(contents).map_err(data(&context))?;
    tmp.persist(path).map_err(|e| Failure::Data(format!("{context}: {}", e.error)))?;
    Ok(())
}

fn parse_tokens(text: &str) -> Result<Vec<u64>, Failure> {
    let mut out = Vec::new();
    for (line_idx, line) in text.lines().enumerate() {
        let mut rest = line;
        let mut column = 1;
        while let Some(start) = rest.find(|c: char| !c.is_whitespace()) {
            column += rest[..start].chars().count();
            rest = &rest[start..];
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            let token = &rest[..end];
            match token.parse::<u64>() {
                Ok(v) if v > 0 => out.push(v),
                _ => {
                    return Err(Failure::Data(format!(
                        "line {}, column {column}: '{token}' is not a positive integer",
                        line_idx + 1
                    )))
                }
            }
            column += token.chars().count();
            rest = &rest[end..];
        }
    }
    Ok(out)
}

fn compress(input: &Path, output: &Path, rule: CensorRule, bytes: bool) -> Result<(), Failure> {
    let raw = read_file(input)?;
    let msg = if bytes {
        raw.iter().map(|&b| b as u64 + 1).collect()
    } else {
        let text = String::from_utf8(raw).map_err(|_| Failure::Data(format!("{}: not UTF-8 text", input.display())))?;
        parse_tokens(&text)?
    };
    let (container, report) = codec::encode_with_report(&msg, rule).map_err(data("encode"))?;
    write_atomic(output, &container.to_bytes())?;
    eprintln!(
        "symbols={} total_bits={} mixture_bits={} elias_bits={} N_censored={} M={} tau={} rule={}",
        report.symbols,
        report.total_bits,
        report.mixture_bits,
        report.elias_bits,
        report.censored,
        report.final_rank,
        report.final_tau,
        rule
    );
    Ok(())
}

fn load_container(path: &Path) -> Result<(Container, Vec<u64>), Failure> {
    let raw = read_file(path)?;
    let context = path.display().to_string();
    let container = Container::from_bytes(&raw).map_err(|e: CodecError| Failure::Data(format!("{context}: {e}")))?;
    let msg = codec::decode(&container).map_err(data(&context))?;
    Ok((container, msg))
}

fn decompress(input: &Path, output: &Path, bytes: bool) -> Result<(), Failure> {
    let (_, msg) = load_container(input)?;
    let contents = if bytes {
        msg.iter()
            .map(|&s| {
                u8::try_from(s - 1).map_err(|_| Failure::Data(format!("symbol {s} does not fit in a byte")))
            })
            .collect::<Result<Vec<u8>, _>>()?
    } else {
        let mut text = String::new();
        for (i, s) in msg.iter().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            write!(text, "{s}").expect("writing to a String");
        }
        if !msg.is_empty() {
            text.push('\n');
        }
        text.into_bytes()
    };
    write_atomic(output, &contents)
}

fn inspect(input: &Path) -> Result<(), Failure> {
    let (container, msg) = load_container(input)?;
    let report = codec::codelength_report(&msg, container.rule).map_err(data("re-encode"))?;
    let distinct = msg.iter().collect::<std::collections::HashSet<_>>().len();
    println!("rule: {}", container.rule);
    println!("container_bytes: {}", container.to_bytes().len());
    println!("payload_bits: {}", container.payload.len());
    println!("symbols: {}", report.symbols);
    println!("distinct_symbols: {distinct}");
    println!("mixture_bits: {}", report.mixture_bits);
    println!("elias_bits: {}", report.elias_bits);
    println!("ideal_mixture_bits: {:.3}", report.ideal_mixture_bits);
    println!("censored: {}", report.censored);
    println!("final_M: {}", report.final_rank);
    println!("final_tau: {}", report.final_tau);
    Ok(())
}

fn bench_config(args: &BenchArgs) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &args.config {
        Some(path) => ExperimentConfig::load(path).map_err(|e| match e {
            LabError::Io { .. } => Failure::Data(e.to_string()),
            other => Failure::Usage(other.to_string()),
        })?,
        None => ExperimentConfig::default(),
    };
    let overrides = [
        ("envelope", &args.envelope),
        ("source", &args.source),
        ("n", &args.n),
        ("trials", &args.trials),
        ("seed", &args.seed),
        ("rule", &args.rule),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(out) = &args.out {
        cfg.output = Some(out.clone());
    }
    Ok(cfg)
}

fn emit<R: CsvRow>(rows: &[R], cfg: &ExperimentConfig, checks: &[Check]) -> Result<bool, Failure> {
    match &cfg.output {
        Some(path) => {
            let mut buf = Vec::new();
            lab::write_csv(rows, &mut buf)?;
            write_atomic(path, &buf)?;
        }
        None => lab::write_csv(rows, io::stdout().lock())?,
    }
    for c in checks {
        eprintln!("{c}");
    }
    Ok(checks.iter().all(|c| c.passed))
}

fn run(cli: Cli) -> Result<bool, Failure> {
    match cli.command {
        Command::Compress { input, output, rule, bytes } => compress(&input, &output, rule, bytes).map(|_| true),
        Command::Decompress { input, output, bytes } => decompress(&input, &output, bytes).map(|_| true),
        Command::Inspect { input } => inspect(&input).map(|_| true),
        Command::BenchRedundancy(args) => {
            let cfg = bench_config(&args)?;
            let (rows, checks) = lab::redundancy_curve(&cfg)?;
            emit(&rows, &cfg, &checks)
        }
        Command::BenchThreshold(args) => {
            let cfg = bench_config(&args)?;
            let (rows, checks) = lab::threshold_stats(&cfg)?;
            emit(&rows, &cfg, &checks)
        }
        Command::BenchDistinct(args) => {
            let cfg = bench_config(&args)?;
            let (rows, checks) = lab::distinct_symbol_stats(&cfg)?;
            emit(&rows, &cfg, &checks)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_DATA),
        Err(Failure::Usage(msg)) => {
            eprintln!("etac: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Data(msg)) => {
            eprintln!("etac: {msg}");
            ExitCode::from(EXIT_DATA)
        }
    }
}
