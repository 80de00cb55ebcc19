use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn etac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_etac")).args(args).output().expect("binary runs")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        Self {
            dir: tempfile::tempdir().unwrap(),
        }
    }

    fn file(&self, name: &str, contents: &[u8]) -> PathBuf {
        let p = self.dir.path().join(name);
        fs::write(&p, contents).unwrap();
        p
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn compress_reports_censoring_and_roundtrips() {
    let w = Work::new();
    let input = w.file("m.txt", b"5 1 3\n2  2\n");
    let packed = w.path("m.etc");
    let out = etac(&["compress", path_str(&input), path_str(&packed)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.contains("N_censored=2"), "{err}");
    assert!(err.contains("total_bits=") && err.contains("mixture_bits=") && err.contains("elias_bits="));
    assert_eq!(&fs::read(&packed).unwrap()[..4], b"ETC1");

    let restored = w.path("m.out");
    let out = etac(&["decompress", path_str(&packed), path_str(&restored)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(&restored).unwrap(), "5 1 3 2 2\n");
}

#[test]
fn value_rule_is_recorded_in_the_container() {
    let w = Work::new();
    let input = w.file("m.txt", b"7 1000000000 3 3 1 2");
    let packed = w.path("m.etc");
    assert_eq!(etac(&["compress", "--rule", "value", path_str(&input), path_str(&packed)]).status.code(), Some(0));
    let restored = w.path("m.out");
    assert_eq!(etac(&["decompress", path_str(&packed), path_str(&restored)]).status.code(), Some(0));
    assert_eq!(fs::read_to_string(&restored).unwrap(), "7 1000000000 3 3 1 2\n");
    let info = etac(&["inspect", path_str(&packed)]);
    assert_eq!(info.status.code(), Some(0));
    let text = String::from_utf8(info.stdout).unwrap();
    assert!(text.contains("rule: value") && text.contains("symbols: 6"), "{text}");
}

#[test]
fn empty_input_gives_a_terminator_only_container() {
    let w = Work::new();
    let input = w.file("empty.txt", b"");
    let packed = w.path("e.etc");
    assert_eq!(etac(&["compress", path_str(&input), path_str(&packed)]).status.code(), Some(0));
    assert_eq!(fs::read(&packed).unwrap().len(), 6);
    let restored = w.path("e.out");
    assert_eq!(etac(&["decompress", path_str(&packed), path_str(&restored)]).status.code(), Some(0));
    assert_eq!(fs::read(&restored).unwrap(), b"");
}

#[test]
fn bytes_mode_roundtrip() {
    let w = Work::new();
    let data: Vec<u8> = (0..=255u8).chain(b"hello hello hello".iter().copied()).collect();
    let input = w.file("raw.bin", &data);
    let packed = w.path("raw.etc");
    assert_eq!(etac(&["compress", "--bytes", path_str(&input), path_str(&packed)]).status.code(), Some(0));
    let restored = w.path("raw.out");
    assert_eq!(etac(&["decompress", "--bytes", path_str(&packed), path_str(&restored)]).status.code(), Some(0));
    assert_eq!(fs::read(&restored).unwrap(), data);
}

#[test]
fn bad_tokens_exit_one_and_name_the_token() {
    let w = Work::new();
    for (text, token) in [("3 0 2", "'0'"), ("1\n2 -4", "'-4'"), ("1 2.5", "'2.5'"), ("abc", "'abc'")] {
        let input = w.file("bad.txt", text.as_bytes());
        let out = etac(&["compress", path_str(&input), path_str(&w.path("bad.etc"))]);
        assert_eq!(out.status.code(), Some(1), "{text}");
        let err = stderr(&out);
        assert!(err.contains(token) && err.contains("line"), "{err}");
        assert!(!w.path("bad.etc").exists());
    }
}

#[test]
fn corrupt_containers_exit_one_without_output() {
    let w = Work::new();
    let input = w.file("m.txt", b"4 8 15 16 23 42 4 8 15 16 23 42");
    let packed = w.path("m.etc");
    assert_eq!(etac(&["compress", path_str(&input), path_str(&packed)]).status.code(), Some(0));
    let bytes = fs::read(&packed).unwrap();

    let restored = w.path("out.txt");
    for cut in [0, 3, 5, bytes.len() - 1] {
        let truncated = w.file("t.etc", &bytes[..cut]);
        let out = etac(&["decompress", path_str(&truncated), path_str(&restored)]);
        assert_eq!(out.status.code(), Some(1), "cut {cut}");
        assert!(!restored.exists(), "partial output after cut {cut}");
    }
    let mut bad_magic = bytes.clone();
    bad_magic[0] = b'X';
    let out = etac(&["decompress", path_str(&w.file("b.etc", &bad_magic)), path_str(&restored)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).to_lowercase().contains("magic"), "{}", stderr(&out));
    let mut bad_flags = bytes.clone();
    bad_flags[4] = 0x80;
    let out = etac(&["decompress", path_str(&w.file("f.etc", &bad_flags)), path_str(&restored)]);
    assert_eq!(out.status.code(), Some(1));
    let out = etac(&["decompress", path_str(&w.path("missing.etc")), path_str(&restored)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    let w = Work::new();
    let input = w.file("m.txt", b"1 2 3");
    let cases: Vec<Vec<&str>> = vec![
        vec![],
        vec!["explode"],
        vec!["compress"],
        vec!["compress", "--frobnicate", path_str(&input), "x"],
        vec!["compress", "--rule", "median", path_str(&input), "x"],
        vec!["bench-threshold", "--envelope", "power:alpha=0.5"],
        vec!["bench-threshold", "--envelope", "geometric:q=0.5"],
        vec!["bench-threshold", "--envelope", "weibull:k=2"],
        vec!["bench-redundancy", "--trials", "10"],
        vec!["bench-threshold", "--trials", "100"],
        vec!["bench-distinct", "--trials", "many"],
        vec!["bench-redundancy", "--n", "4096..1024"],
        vec!["bench-redundancy", "--source", "uniform"],
    ];
    for args in cases {
        let out = etac(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
    assert_eq!(etac(&["--help"]).status.code(), Some(0));
}

#[test]
fn bench_output_is_deterministic_and_reports_checks() {
    let w = Work::new();
    let args = ["bench-threshold", "--n", "1024,2048", "--trials", "200", "--seed", "5"];
    let a = w.path("a.csv");
    let b = w.path("b.csv");
    let out_a = etac(&[&args[..], &["--out", path_str(&a)]].concat());
    assert_eq!(etac(&[&args[..], &["--out", path_str(&b)]].concat()).status.code(), Some(0));
    assert_eq!(out_a.status.code(), Some(0), "{}", stderr(&out_a));
    assert!(stderr(&out_a).contains("var<=mean: PASS"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let csv = fs::read_to_string(&a).unwrap();
    assert!(csv.starts_with("n,trials,mean_M,var_M"));
    assert_eq!(csv.lines().count(), 3);

    let stdout = etac(&args);
    assert_eq!(stdout.stdout, fs::read(&a).unwrap());
}

#[test]
fn bench_reads_a_config_file_and_flags_override_it() {
    let w = Work::new();
    let cfg = w.file(
        "exp.cfg",
        b"# distinct symbols\nenvelope = power:alpha=2\nsource = bayes\nn = 1024,2048\ntrials = 200\nseed = 3\n",
    );
    let out = etac(&["bench-distinct", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(stderr(&out).contains("K<=2M: PASS"));

    let out = etac(&["bench-distinct", "--config", path_str(&cfg), "--n", "512"]);
    assert_eq!(String::from_utf8(out.stdout.clone()).unwrap().lines().count(), 2);

    let broken = w.file("broken.cfg", b"trials: 200\n");
    assert_eq!(etac(&["bench-distinct", "--config", path_str(&broken)]).status.code(), Some(2));
    let missing = w.path("none.cfg");
    assert_eq!(etac(&["bench-distinct", "--config", path_str(&missing)]).status.code(), Some(1));
}

#[test]
fn bench_redundancy_small_run() {
    let out = etac(&["bench-redundancy", "--n", "1024", "--trials", "30", "--envelope", "geometric:q=0.8"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let csv = String::from_utf8(out.stdout.clone()).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(header.split(',').count(), 17);
    assert!(stderr(&out).contains("redundancy<=2.5*m*log2(n)*log2(m): PASS"));
}
