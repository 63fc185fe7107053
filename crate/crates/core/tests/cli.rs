use bornflea::harness::*;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_bornflea");
const EXPERIMENTS: [&str; 5] = ["twostate_born", "doublewell_born", "prop1_oscillator", "equidistribution", "splitting_check"];

fn golden(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

fn bornflea(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn subcommand(experiment: &str) -> String {
    experiment.replace('_', "-")
}

fn schema(experiment: &str) -> &'static [&'static str] {
    match experiment {
        "twostate_born" => TWOSTATE_COLUMNS,
        "doublewell_born" => DOUBLEWELL_COLUMNS,
        "prop1_oscillator" => PROP1_COLUMNS,
        "equidistribution" => EQUIDISTRIBUTION_COLUMNS,
        _ => SPLITTING_COLUMNS,
    }
}

// Cells equal as text, or as numbers within a relative 1e-9.
fn cells_agree(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    match (a.parse::<f64>(), b.parse::<f64>()) {
        (Ok(x), Ok(y)) => (x - y).abs() <= 1e-9 * x.abs().max(y.abs()).max(1e-300),
        _ => false,
    }
}

#[test]
fn golden_files_fix_schema_and_values() {
    let dir = tempfile::tempdir().unwrap();
    for exp in EXPERIMENTS {
        let out = dir.path().join(format!("{exp}.csv"));
        let cfg = golden(&format!("{exp}.json"));
        let res = bornflea(&[&subcommand(exp), "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{exp}: {}", String::from_utf8_lossy(&res.stderr));
        let fresh = std::fs::read_to_string(&out).unwrap();
        let frozen = std::fs::read_to_string(golden(&format!("{exp}.csv"))).unwrap();
        let (fl, gl): (Vec<&str>, Vec<&str>) = (fresh.lines().collect(), frozen.lines().collect());
        assert_eq!(fl.len(), gl.len(), "{exp}: row count");
        let header_at = fl.iter().position(|l| !l.starts_with('#')).unwrap();
        assert_eq!(&fl[..=header_at], &gl[..=header_at], "{exp}: provenance and header");
        assert_eq!(fl[header_at].split(',').collect::<Vec<_>>(), schema(exp), "{exp}: declared columns");
        let keys: Vec<&str> = fl[..header_at].iter().map(|l| l.split(':').next().unwrap()).collect();
        assert_eq!(keys, ["# bornflea", "# experiment", "# config_sha256", "# seed"]);
        for (a, b) in fl[header_at + 1..].iter().zip(&gl[header_at + 1..]) {
            let (ca, cb): (Vec<&str>, Vec<&str>) = (a.split(',').collect(), b.split(',').collect());
            assert_eq!(ca.len(), schema(exp).len());
            assert!(ca.iter().zip(&cb).all(|(x, y)| cells_agree(x, y)), "{exp}:\n{a}\n{b}");
        }
    }
}

#[test]
fn reruns_are_byte_identical_across_threads_and_invocations() {
    let dir = tempfile::tempdir().unwrap();
    for exp in EXPERIMENTS {
        let cfg = golden(&format!("{exp}.json"));
        let mut outputs = Vec::new();
        for (i, threads) in ["1", "1", "3"].iter().enumerate() {
            let out = dir.path().join(format!("{exp}_{i}.csv"));
            let res = bornflea(&[
                &subcommand(exp),
                "--config",
                cfg.to_str().unwrap(),
                "--out",
                out.to_str().unwrap(),
                "--threads",
                threads,
            ]);
            assert!(res.status.success());
            outputs.push(std::fs::read(&out).unwrap());
        }
        assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{exp} output changed between runs");
    }
}

#[test]
fn seed_override_changes_samples_and_provenance() {
    let cfg = golden("doublewell_born.json");
    let a = bornflea(&["doublewell-born", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    let b = bornflea(&["doublewell-born", "--config", cfg.to_str().unwrap(), "--seed", "2"]);
    assert!(a.status.success() && b.status.success());
    let (ta, tb) = (String::from_utf8(a.stdout).unwrap(), String::from_utf8(b.stdout).unwrap());
    assert!(ta.contains("# seed: 1") && tb.contains("# seed: 2"));
    let rows = |t: &str| t.lines().filter(|l| !l.starts_with('#')).skip(1).map(String::from).collect::<Vec<_>>();
    assert_ne!(rows(&ta), rows(&tb));
}

#[test]
fn validate_echoes_resolved_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "min.json", r#"{"experiment": "twostate_born"}"#);
    let res = bornflea(&["validate", "--config", &cfg]);
    assert!(res.status.success());
    let echoed: serde_json::Value = serde_json::from_slice(&res.stdout).unwrap();
    assert_eq!(echoed["model"]["hbar"], serde_json::json!([0.3, 0.2, 0.15, 0.1]));
    assert_eq!(echoed["model"]["alpha2"], serde_json::json!(0.7));
    assert_eq!(echoed["distribution"], serde_json::json!({"kind": "uniform", "lo": 0.5, "hi": 1.5}));
    assert_eq!(echoed["model"]["time"], serde_json::json!({"mode": "diagonal"}));
}

#[test]
fn config_errors_exit_with_status_two() {
    let dir = tempfile::tempdir().unwrap();
    let zero = write_config(dir.path(), "zero.json", r#"{"experiment": "twostate_born", "model": {"hbar": [0.2, 0.0]}}"#);
    let res = bornflea(&["validate", "--config", &zero]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("model.hbar[1]") && err.contains("positive"), "{err}");

    let at_zero = write_config(
        dir.path(),
        "delta.json",
        r#"{"experiment": "twostate_born", "distribution": {"kind": "uniform", "lo": -0.5, "hi": 0.5}}"#,
    );
    let res = bornflea(&["twostate-born", "--config", &at_zero]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("real nonzero values of delta"));

    let syntax = write_config(dir.path(), "syntax.json", "{\n  \"experiment\": \"equidistribution\",\n  \"t_list\": [10,]\n}");
    let res = bornflea(&["validate", "--config", &syntax]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("line 3, column"));

    let wrong = golden("equidistribution.json");
    let res = bornflea(&["splitting-check", "--config", wrong.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));

    let missing = dir.path().join("absent.json");
    assert_eq!(bornflea(&["validate", "--config", missing.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn every_violation_is_reported() {
    let raw = r#"{
        "experiment": "doublewell_born",
        "model": {"hbar": [0.3, -1, 0.05], "alpha2": 1.2, "levels": 1, "time": {"mode": "diagonal"}},
        "flea_distribution": {
            "magnitude": {"kind": "uniform", "lo": 0.1, "hi": 0.05},
            "center": {"kind": "uniform", "lo": -0.9, "hi": -0.75},
            "width": -0.1,
            "positive_fraction": 1.5
        },
        "n_samples": 0,
        "t_list": [1]
    }"#;
    let Err(ConfigError::Invalid(v)) = validate_config(raw) else { panic!("config must be rejected") };
    let paths: Vec<&str> = v.iter().map(|x| x.path.as_str()).collect();
    for expected in [
        "model.time",
        "t_list",
        "model.hbar[1]",
        "model.hbar[2]",
        "model.alpha2",
        "model.levels",
        "flea_distribution.magnitude",
        "flea_distribution.width",
        "flea_distribution.positive_fraction",
        "n_samples",
    ] {
        assert!(paths.contains(&expected), "missing {expected} in {paths:?}");
    }
}

#[test]
fn flea_law_over_a_minimum_is_rejected() {
    let raw = r#"{"experiment": "doublewell_born", "flea_distribution": {
        "magnitude": {"kind": "uniform", "lo": 0.05, "hi": 0.1},
        "center": {"kind": "uniform", "lo": -1.1, "hi": -0.8},
        "width": 0.1, "positive_fraction": 0.5}}"#;
    let Err(ConfigError::Invalid(v)) = validate_config(raw) else { panic!("config must be rejected") };
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].path, "flea_distribution");
}

#[test]
fn numeric_failures_exit_with_status_three() {
    let dir = tempfile::tempdir().unwrap();
    // the tunnelling gap underflows at this ħ
    let cfg = write_config(dir.path(), "tiny.json", r#"{"experiment": "splitting_check", "model": {"hbar": [0.001]}}"#);
    let res = bornflea(&["splitting-check", "--config", &cfg]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stderr).contains("splitting_check failed"));
}

#[test]
fn run_examples() {
    let cfg = validate_config(r#"{"experiment": "equidistribution", "t_list": [10, 100, 1000]}"#).unwrap();
    let table = run(&cfg).unwrap();
    assert_eq!(table.rows().len(), 3);
    let tv: Vec<f64> = table.rows().iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(tv.windows(2).all(|w| w[1] < w[0]), "{tv:?}");

    let cfg = validate_config(r#"{"experiment": "twostate_born", "model": {"alpha2": 0.7}}"#).unwrap();
    let table = run(&cfg).unwrap();
    let final_gap = table.rows().iter().filter(|r| r[0] == "0.1").map(|r| r[6].parse::<f64>().unwrap()).fold(0.0, f64::max);
    assert!(final_gap <= 1e-4, "{final_gap}");
    assert_eq!(table.rows().len(), 16);
}

#[test]
fn digest_ignores_the_output_path() {
    let a = validate_config(r#"{"experiment": "equidistribution", "output": "a.csv"}"#).unwrap();
    let b = validate_config(r#"{"experiment": "equidistribution", "output": "b.csv"}"#).unwrap();
    let c = validate_config(r#"{"experiment": "equidistribution", "seed": 4}"#).unwrap();
    assert_eq!(config_digest(&a), config_digest(&b));
    assert_ne!(config_digest(&a), config_digest(&c));
}
