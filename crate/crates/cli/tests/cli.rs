use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SURROGATE_WAVEFORM: &str = r#"
schema = 1
task = "waveform"
seed = 1

[backend]
preset = "surrogate-waveform"

[grid]
count = 6

[encoding.waveform]
segments = 20
"#;

fn skyrc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_skyrc")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn run(config: &Path, out: &Path) -> Output {
    skyrc(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()])
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn waveform_run_writes_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "w.toml", SURROGATE_WAVEFORM);
    let out = dir.path().join("out");
    let o = run(&cfg, &out);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["features.csv", "protocol.csv", "weights.csv", "eval.json", "manifest.json", "config.toml"] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let m = json(&out.join("manifest.json"));
    assert_eq!(m["seed"], 1);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    let e = json(&out.join("eval.json"));
    assert!(e["test_segment_accuracy"].as_f64().unwrap() > 0.5);
}

#[test]
fn repeated_runs_are_identical() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "w.toml", SURROGATE_WAVEFORM);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a).status.success());
    let o = skyrc(&["run", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success());
    for f in ["eval.json", "weights.csv", "features.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn seed_override_changes_the_waveform() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "w.toml", SURROGATE_WAVEFORM);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(run(&cfg, &a).status.success());
    let o = skyrc(&["run", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap(), "--seed", "4"]);
    assert!(o.status.success());
    assert_ne!(fs::read(a.join("protocol.csv")).unwrap(), fs::read(b.join("protocol.csv")).unwrap());
    assert_eq!(json(&b.join("manifest.json"))["seed"], 4);
}

#[test]
fn empty_subsection_table_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let text = SURROGATE_WAVEFORM.replace("[grid]\ncount = 6\n", "");
    let cfg = write_config(dir.path(), "w.toml", &text);
    let o = run(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("subsection table is empty"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn negative_ridge_names_key_and_line() {
    let dir = TempDir::new().unwrap();
    let text = format!("{SURROGATE_WAVEFORM}\n[readout]\nridge_lambda = -1.0\n");
    let line = text.lines().position(|l| l.starts_with("ridge_lambda")).unwrap() + 1;
    let cfg = write_config(dir.path(), "w.toml", &text);
    let o = skyrc(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("ridge_lambda"), "{err}");
    assert!(err.contains(&format!("line {line}")), "{err}");
}

#[test]
fn missing_mnist_file_is_reported_before_running() {
    let dir = TempDir::new().unwrap();
    let text = r#"
schema = 1
task = "mnist"

[backend]
preset = "surrogate-mnist"

[encoding]
data_dir = "nowhere"
"#;
    let cfg = write_config(dir.path(), "m.toml", text);
    let o = run(&cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("t10k-images-idx3-ubyte"), "{}", stderr(&o));
}

#[test]
fn unknown_probe_exits_with_usage_code() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "w.toml", SURROGATE_WAVEFORM);
    let o = skyrc(&["probe", "entropy", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown probe"));
}

#[test]
fn missing_feature_file_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let text = format!("{SURROGATE_WAVEFORM}\n[probe]\nfeatures = \"absent.csv\"\n");
    let cfg = write_config(dir.path(), "w.toml", &text);
    let o = skyrc(&["probe", "dimensionality", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.csv"));
}

#[test]
fn runtime_errors_name_the_module() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.csv"), "t,S01\n0,not-a-number\n").unwrap();
    let text = format!("{SURROGATE_WAVEFORM}\n[probe]\nfeatures = \"bad.csv\"\n");
    let cfg = write_config(dir.path(), "w.toml", &text);
    let out = dir.path().join("o");
    let o = skyrc(&["probe", "dimensionality", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.starts_with("error [") && err.contains("bad.csv"), "{err}");
}

#[test]
fn validate_lists_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "w.toml", SURROGATE_WAVEFORM);
    let o = skyrc(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.starts_with("0 errors"));
    assert!(text.contains("ridge"));
}

#[test]
fn memoryless_backend_has_no_memory() {
    let dir = TempDir::new().unwrap();
    let text = r#"
schema = 1
task = "probe"

[backend]
kind = "surrogate"
leak_gamma = 1e-12
feedback_gain = 0.0
"#;
    let cfg = write_config(dir.path(), "p.toml", text);
    let out = dir.path().join("out");
    let o = skyrc(&["probe", "memory", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = json(&out.join("memory.json"));
    assert!(m["divergence"].as_f64().unwrap() < 1e-9, "{m}");
}

#[test]
fn nonlinearity_probe_writes_one_row_per_amplitude() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "w.toml", SURROGATE_WAVEFORM);
    let out = dir.path().join("out");
    let o = skyrc(&["probe", "nonlinearity", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("nonlinearity.csv")).unwrap();
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn dimensionality_from_stored_features() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "w.toml", SURROGATE_WAVEFORM);
    let run_dir = dir.path().join("run");
    assert!(run(&cfg, &run_dir).status.success());
    let text = format!("{SURROGATE_WAVEFORM}\n[probe]\nfeatures = \"run/features.csv\"\n");
    let probe_cfg = write_config(dir.path(), "p.toml", &text);
    let out = dir.path().join("dim");
    let o = skyrc(&["probe", "dimensionality", "--config", probe_cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&out.join("dimensionality.json"));
    let sv: Vec<f64> = r["singular_values"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).collect();
    assert_eq!(sv.len(), 6);
    assert!(sv.windows(2).all(|w| w[0] >= w[1]));
    let rank = r["effective_rank"].as_u64().unwrap();
    assert!((1..=6).contains(&rank));
    // One table per unordered subsection pair.
    assert_eq!(fs::read_dir(out.join("pairs")).unwrap().count(), 15);
}
