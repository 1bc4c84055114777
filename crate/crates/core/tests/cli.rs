use std::path::{Path, PathBuf};
use std::process::Command;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs")
}

fn run(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_gjlog")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap(), String::from_utf8(out.stderr).unwrap())
}

fn body(csv: &str) -> String {
    let (first, rest) = csv.split_once('\n').unwrap();
    assert!(first.starts_with("# gjlog ") && first.contains("generated_at="), "{first}");
    rest.to_string()
}

#[test]
fn check_config_reports_legendre_threshold() {
    let cfg = configs().join("check_legendre.json");
    let (code, out, err) = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let b = body(&out);
    let mut rdr = csv::Reader::from_reader(b.as_bytes());
    let verdicts: Vec<String> = rdr.records().map(|r| r.unwrap()[4].to_string()).collect();
    assert_eq!(verdicts, ["holds", "holds", "boundary", "fails"]);
    assert!(err.contains("nevai p=4"));
}

#[test]
fn output_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mz.csv");
    let cfg = configs().join("mz_chebyshev.json");
    let (code, stdout, _) = run(&["mz", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "99", "--threads", "2"]);
    assert_eq!(code, 0);
    assert!(stdout.is_empty());
    let text = std::fs::read_to_string(&out).unwrap();
    let b = body(&text);
    let mut rdr = csv::Reader::from_reader(b.as_bytes());
    assert_eq!(rdr.headers().unwrap(), vec!["command", "parameters", "metric", "value", "theory_verdict", "seed", "witness"]);
    for r in rdr.records() {
        let r = r.unwrap();
        assert_eq!(&r[5], "99");
        if r[2] == *"mz_ratio_sup" && r[1].starts_with("p=2;") {
            assert!((r[3].parse::<f64>().unwrap() - 1.0).abs() < 1e-8, "{r:?}");
        }
    }
}

#[test]
fn invalid_configs_exit_2_without_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.csv");
    for (i, text) in [
        r#"{"command": "fourier", "p": [3], "n": [16, 8], "seed": 1}"#,
        r#"{"command": "fourier", "p": [3], "n": [8, 16]}"#,
        r#"{"command": "interp", "p": [0.5], "n": [8]}"#,
        r#"{"command": "mz", "p": [2], "n": [8], "seed": 1, "m": 0}"#,
        r#"{"command": "hilbert", "p": [2], "tol": 0.5}"#,
        r#"{"command": "ortho", "n": [8], "unknown": true}"#,
        r#"{"command": "ortho", "n": [8], "alpha": {"points": [-1, 1], "Gamma": [-1.5, 0], "gamma": [0, 0], "h": "one"}}"#,
        r#"not json"#,
    ]
    .iter()
    .enumerate()
    {
        let cfg = dir.path().join(format!("c{i}.json"));
        std::fs::write(&cfg, text).unwrap();
        let (code, stdout, err) = run(&["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code, 2, "{text}: {err}");
        assert!(stdout.is_empty() && !out.exists(), "{text}");
    }
    let (code, _, _) = run(&["hilbert", "--config", configs().join("check_legendre.json").to_str().unwrap()]);
    assert_eq!(code, 2);
}

#[test]
fn numerical_failure_truncates_with_marker() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tight.json");
    // |x| has a kink, so the adaptive error norm cannot reach 1e-14
    std::fs::write(&cfg, r#"{"command": "interp", "p": [2], "n": [16, 64], "target": "abs", "tol": 1e-14}"#).unwrap();
    let (code, out, err) = run(&["--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 3, "{err}");
    let last = out.lines().last().unwrap();
    assert!(last.contains(",TRUNCATED,") && last.contains("no convergence"), "{last}");
    assert!(err.contains("truncated"));
}

#[test]
fn every_config_is_deterministic() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let p = path.to_str().unwrap();
        let (c1, a, _) = run(&["--config", p, "--threads", "1"]);
        let (c2, b, _) = run(&["--config", p, "--threads", "4"]);
        assert_eq!((c1, c2), (0, 0), "{p}");
        assert_eq!(body(&a), body(&b), "{p}");
    }
}
