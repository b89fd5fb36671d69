use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cyclin(args: &[&str], dir: &Path, workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cyclin"));
    cmd.args(args).current_dir(dir);
    match workers {
        Some(w) => cmd.env("CYCLIN_WORKERS", w),
        None => cmd.env_remove("CYCLIN_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn sample_writes_two_square_csvs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    for out in ["a", "b"] {
        let o = cyclin(&["sample", "--n", "4", "--m", "2", "--dist", "ginibre", "--seed", "7", "--out", out], dir.path(), None);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for k in 1..=2 {
        let a = fs::read_to_string(dir.path().join(format!("a/factor_{k}.csv"))).unwrap();
        let b = fs::read_to_string(dir.path().join(format!("b/factor_{k}.csv"))).unwrap();
        assert_eq!(a, b);
        let rows: Vec<&str> = a.lines().collect();
        assert_eq!(rows.len(), 4);
        assert!(rows.iter().all(|r| r.split(',').count() == 4));
    }
    assert!(!dir.path().join("a/factor_3.csv").exists());
}

#[test]
fn sample_per_factor_laws() {
    let dir = tempfile::tempdir().unwrap();
    let o = cyclin(&["sample", "--n", "3", "--m", "2", "--dist", "ginibre,gauss-match-discrete", "--out", "."], dir.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cyclin(&["sample", "--n", "3", "--m", "3", "--dist", "ginibre,ginibre", "--out", "."], dir.path(), None);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn unknown_distribution_lists_valid_names() {
    let dir = tempfile::tempdir().unwrap();
    let o = cyclin(&["sample", "--n", "4", "--m", "2", "--dist", "unknown"], dir.path(), None);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    for name in ["ginibre", "rademacher-complex", "gauss-match-discrete", "uniform-disc"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn svmin_identity_chain_prints_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = cyclin(&["svmin", "--n", "1", "--m", "2", "--identity", "--z-abs", "2", "--method", "dense"], dir.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    let line = stdout(&o).lines().find(|l| l.starts_with("sigma_min")).unwrap().to_string();
    let v: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!((v - 1.0).abs() < 1e-12, "{line}");
    assert!(stderr(&o).contains("outside"));
}

#[test]
fn svmin_both_methods_agree() {
    let dir = tempfile::tempdir().unwrap();
    let o = cyclin(&["svmin", "--n", "20", "--m", "3", "--z-abs", "5", "--z-arg", "0.7", "--method", "both", "--seed", "11"], dir.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let values: Vec<f64> = out
        .lines()
        .filter(|l| l.starts_with("sigma_min"))
        .map(|l| l.rsplit(' ').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(values.len(), 2);
    assert!((values[0] - values[1]).abs() <= 1e-6 * values[1], "{out}");
    assert!(out.contains("agree to 1e-6: true"));
    assert!(!stderr(&o).contains("outside"), "|z| = 5 is inside [20^0.4, 20^0.6]");
}

#[test]
fn svmin_loads_factor_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let o = cyclin(&["sample", "--n", "5", "--m", "2", "--seed", "3", "--out", "f"], dir.path(), None);
    assert!(o.status.success());
    let o = cyclin(&["svmin", "--factors", "f/factor_1.csv,f/factor_2.csv", "--z-abs", "2", "--method", "both"], dir.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("n = 5, M = 2"));
}

#[test]
fn svmin_without_z_abs_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = cyclin(&["svmin", "--n", "3", "--m", "2"], dir.path(), None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--z-abs"));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cyclin(&["--help"], dir.path(), None).status.code(), Some(0));
    assert_eq!(cyclin(&["frobnicate"], dir.path(), None).status.code(), Some(1));
}

const MINIMAL: &str = r#"{"n_grid": [50], "m": 2, "A": 0.2, "trials": 10, "seed": 5}"#;

#[test]
fn minimal_sweep_emits_one_line_per_trial() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), MINIMAL).unwrap();
    let start = std::time::Instant::now();
    let o = cyclin(&["sweep", "cfg.json", "--out", "res"], dir.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(start.elapsed().as_secs() < 60);
    let jsonl = fs::read_to_string(dir.path().join("res/records.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 10);
    for (i, line) in jsonl.lines().enumerate() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["trial"], i);
        for key in ["seed_path", "n", "m", "z_re", "z_im", "sigma_min", "dist_min", "dist_argmin", "mass_profile", "incompressible", "a", "b", "wall_ms"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
    }
    let csv = fs::read_to_string(dir.path().join("res/summary.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("res/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 5);
    assert_eq!(manifest["command"], "sweep");
    assert!(manifest["finished_unix_ms"].as_u64() >= manifest["started_unix_ms"].as_u64());
    assert!(!dir.path().join("res/records.jsonl.tmp").exists());
}

#[test]
fn invalid_configs_exit_one_with_field_path() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"n_grid": [50], "m": 2, "A": 2, "trials": 10, "seed": 5}"#, "A"),
        (r#"{"n_grid": [50], "m": 2, "A": 0.2, "trials": "ten", "seed": 5}"#, "trials"),
        (r#"{"n_grid": [50], "m": 2, "A": 0.2, "trials": 10, "seed": 5, "z_rule": {"kind": "power", "exponent": "x"}}"#, "z_rule"),
        (r#"{"n_grid": [50], "m": 2, "A": 0.2, "trials": 10, "seed": 5, "bogus": 1}"#, "bogus"),
    ];
    for (text, field) in cases {
        fs::write(dir.path().join("bad.json"), text).unwrap();
        let o = cyclin(&["sweep", "bad.json", "--out", "res"], dir.path(), None);
        assert_eq!(o.status.code(), Some(1), "{text}");
        assert!(stderr(&o).contains(field), "{}", stderr(&o));
    }
    assert!(!dir.path().join("res").exists());
}

#[test]
fn rerun_is_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), MINIMAL).unwrap();
    let o = cyclin(&["nullmass", "cfg.json", "--out", "first"], dir.path(), Some("2"));
    assert!(o.status.success(), "{}", stderr(&o));
    let o = cyclin(&["rerun", "first/manifest.json", "--out", "second"], dir.path(), Some("1"));
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["records.jsonl", "summary.csv"] {
        assert_eq!(fs::read(dir.path().join("first").join(f)).unwrap(), fs::read(dir.path().join("second").join(f)).unwrap(), "{f}");
    }
}

#[test]
fn linstat_and_histogram_write_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"n_grid": [30], "m": 1, "A": 0.2, "trials": 12, "seed": 2,
                  "variance": {"grid_resolution": 80, "fourier_modes": 32, "bootstrap": 50}}"#;
    fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    let o = cyclin(&["linstat", "cfg.json", "--out", "lin"], dir.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.path().join("lin/records.jsonl")).unwrap().lines().count(), 12);
    let o = cyclin(&["histogram", "cfg.json", "--out", "hist"], dir.path(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    let h: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("hist/summary.json")).unwrap()).unwrap();
    assert_eq!(h["total"], 30 * 12);
}

#[test]
fn bad_worker_count_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("cfg.json"), MINIMAL).unwrap();
    let o = cyclin(&["sweep", "cfg.json"], dir.path(), Some("many"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exceeded_failure_budget_exits_two_after_writing_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = r#"{"n_grid": [10], "m": 2, "A": 0.2, "trials": 5, "seed": 1, "z_rule": {"kind": "fixed", "re": 0.0, "im": 0.0}}"#;
    fs::write(dir.path().join("cfg.json"), cfg).unwrap();
    let o = cyclin(&["sweep", "cfg.json", "--out", "res"], dir.path(), None);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(dir.path().join("res/records.jsonl")).unwrap().lines().count(), 5);
    assert!(dir.path().join("res/manifest.json").exists());
}

#[test]
fn bundled_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg: cyclin::experiments::ExperimentConfig = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        seen += 1;
    }
    assert!(seen >= 4);
}
