use std::path::Path;
use std::process::{Command, Output};

fn uqdc(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_uqdc"));
    cmd.args(args).env_remove("UQDC_THREADS");
    if let Some(t) = threads {
        cmd.env("UQDC_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn small_config(dir: &Path, experiment: &str, extra: &str) -> std::path::PathBuf {
    let out = dir.join("out");
    let text = format!(
        r#"{{"experiment": "{experiment}", "m": 400, "orders": [1, 2], "seed": 5,
            "table_sizes": [200, 400], "region_samples": 500, "proposals": 2000,
            "output_dir": "{}" {extra}}}"#,
        out.display()
    );
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn run_writes_every_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "ode", "");
    let out = uqdc(&["run", "--config", cfg.to_str().unwrap()], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    for f in [
        "bounds.csv",
        "lipschitz.csv",
        "expected_ratio.csv",
        "pushforward_error.csv",
        "composed_error.csv",
        "updated_error.csv",
        "report.json",
        "timing.json",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }
    let bounds = read(&dir, "bounds.csv");
    assert!(bounds.starts_with("m\\n,1,2\n200,"), "{bounds}");
    assert_eq!(bounds.lines().count(), 3);
    let report: serde_json_like::Keys = serde_json_like::top_level_keys(&read(&dir, "report.json"));
    assert_eq!(report, vec!["config", "tables", "curves", "diagnostics", "meta"]);
}

#[test]
fn output_is_byte_stable_across_runs_and_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "singular", "");
    let dir = tmp.path().join("out");
    let snapshot = || {
        ["bounds.csv", "lipschitz.csv", "expected_ratio.csv", "pushforward_error.csv", "composed_error.csv", "updated_error.csv", "report.json"]
            .map(|f| read(&dir, f))
    };
    assert!(uqdc(&["run", "--config", cfg.to_str().unwrap()], Some("1")).status.success());
    let first = snapshot();
    assert!(uqdc(&["run", "--config", cfg.to_str().unwrap()], Some("3")).status.success());
    assert_eq!(snapshot(), first);
}

#[test]
fn overrides_apply() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_config(tmp.path(), "pde", "");
    let alt = tmp.path().join("alt");
    let out = uqdc(
        &["run", "--config", cfg.to_str().unwrap(), "--seed", "77", "--replicates", "2", "--out", alt.to_str().unwrap()],
        None,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read(&alt, "report.json");
    assert!(report.contains("\"seed\": 77"));
    assert!(report.contains("\"replicates\": 2"));
    assert!(!tmp.path().join("out").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, r#"{"experiment": "ode", "m": 10}"#).unwrap();
    assert_eq!(uqdc(&["run", "--config", bad.to_str().unwrap()], None).status.code(), Some(2));
    let missing = tmp.path().join("missing.json");
    assert_eq!(uqdc(&["run", "--config", missing.to_str().unwrap()], None).status.code(), Some(2));
    assert_eq!(uqdc(&["verify", "--experiment", "heat"], None).status.code(), Some(2));
    let cfg = small_config(tmp.path(), "ode", "");
    assert_eq!(uqdc(&["run", "--config", cfg.to_str().unwrap()], Some("zero")).status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let far = r#", "observed": {"family": "normal", "mean": 50.0, "std": 0.1}"#;
    let cfg = small_config(tmp.path(), "singular", far);
    let out = uqdc(&["run", "--config", cfg.to_str().unwrap()], None);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("rejection"));
}

#[test]
fn verify_oracles() {
    let out = uqdc(&["verify", "--experiment", "oracles"], None);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("criterion 12 PASS"), "{text}");
    assert!(text.contains("1 of 1 criteria passed"));
}

/// Minimal scan of the top-level keys of a pretty-printed JSON object.
mod serde_json_like {
    pub type Keys = Vec<String>;

    pub fn top_level_keys(text: &str) -> Keys {
        text.lines()
            .filter(|l| l.starts_with("  \"") && !l.starts_with("   "))
            .map(|l| l.trim().split('"').nth(1).unwrap().to_string())
            .collect()
    }
}
