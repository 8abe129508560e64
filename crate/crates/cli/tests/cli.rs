use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hbilinear"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

const SMALL: &str = r#"
[exponents]
n = 1
lambda = 1.0
p = 2.0
q = 2.0

[quadrature]
k_min = -1
k_max = 8
samples_per_shell = 1000
seed = 11
"#;

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn check_exponents_exit_codes() {
    let cases: [(&[&str], i32); 4] = [
        (&["--lambda", "1", "--p", "2", "--q", "2"], 0),
        (&["--lambda", "1", "--p", "20", "--q", "2", "--alpha", "3.5", "--gamma", "-3"], 0),
        (&["--lambda", "1", "--p", "1.6", "--q", "1.6", "--alpha", "-2", "--beta", "-1.5", "--gamma", "4"], 2),
        (&["--lambda", "1", "--p", "2", "--q", "2", "--alpha", "1.5", "--beta", "1.5", "--gamma", "6"], 3),
    ];
    for (args, code) in cases {
        let out = bin().arg("check-exponents").args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(code), "{args:?}");
    }
    let out = run(&["check-exponents", "--lambda", "1", "--p", "1.6", "--q", "1.6", "--alpha", "-2", "--beta", "-1.5", "--gamma", "4"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("verdict: Unbounded") && text.contains("witnesses: III"), "{text}");
}

#[test]
fn stein_weiss_flag() {
    let out = run(&["check-exponents", "--lambda", "1", "--p", "2", "--q", "2", "--alpha", "0.5", "--beta", "0.5", "--stein-weiss"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn invalid_input_exits_one() {
    let out = run(&["check-exponents", "--lambda", "9", "--p", "2", "--q", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[exponents]\nn = 1\nlambda = 1.0\np = 2.0\nq = 2.0\nomega = 1\n");
    let out = run(&["norm-ratio", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("omega"));
}

#[test]
fn divergence_rejects_mismatched_family() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[exponents]\nn = 1\nlambda = 1.0\np = 2.0\nq = 2.0\nalpha = 0.0\nbeta = 0.0\ngamma = -1.0\n",
    );
    let out = run(&["divergence", "--family", "a", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["divergence", "--family", "c", "--config", &cfg, "--truncations", "8,16"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

fn assert_deterministic(args: &[&str]) {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let mut full: Vec<&str> = args.to_vec();
        full.extend(["--out", p.to_str().unwrap()]);
        let out = run(&full);
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let (ca, cb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!ca.is_empty());
    assert_eq!(ca, cb, "{args:?}");
    let strip = |p: &Path| -> String {
        let mut meta = p.as_os_str().to_owned();
        meta.push(".meta.toml");
        std::fs::read_to_string(meta)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("timestamp_unix"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));
}

#[test]
fn reports_are_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    assert_deterministic(&["eval-operator", "--op", "B", "--at", "0.2,-0.1,0.3", "--config", &cfg]);
    assert_deterministic(&["eval-operator", "--op", "S", "--at", "0.2,-0.1,0.3", "--config", &cfg, "--seed", "5"]);
    assert_deterministic(&["divergence", "--family", "b", "--seed", "2"]);
    assert_deterministic(&["divergence", "--family", "c", "--truncations", "8,16"]);
    assert_deterministic(&["tiling-audit", "--half-width", "50", "--samples", "5000", "--seed", "9"]);
}

#[test]
fn stdout_csv_when_no_out() {
    let out = run(&["tiling-audit", "--samples", "2000"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("overlap_count,points\n"), "{text}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("coverage_failures = 0"));
}

#[test]
fn eval_operator_far_point_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = run(&["eval-operator", "--op", "B", "--at", "3,0,0", "--config", &cfg]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stderr).unwrap();
    assert!(text.contains("value = 0.0000000000000000e0"), "{text}");
}
