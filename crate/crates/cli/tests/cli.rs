use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hetcache(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hetcache"))
        .args(args)
        .env_remove("HETCACHE_SEED")
        .output()
        .expect("run hetcache")
}

fn configs(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(name)
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn analytic_breakdown_json() {
    let cfg = configs("reference.cfg");
    let out = hetcache(&["analytic", "--config", cfg.to_str().unwrap(), "--content-rank", "1"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let obj = v.as_object().unwrap();
    for key in ["p_hit_sbs", "p_out_sbs", "p_hit_mbs", "p_out_mbs", "p_out_total"] {
        assert!(obj[key].is_f64(), "{key}");
    }
    assert!((obj["p_hit_sbs"].as_f64().unwrap() - 0.54406).abs() < 1e-5);
    assert!((obj["p_out_total"].as_f64().unwrap() - 0.32645).abs() < 1e-5);
}

#[test]
fn analytic_average_json() {
    let cfg = configs("reference.cfg");
    let out = hetcache(&["analytic", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stderr(&out));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["policy"], "pcp");
    assert_eq!(v["cache_slots"], 30);
    assert!((v["avg_outage"].as_f64().unwrap() - 0.44098).abs() < 1e-5);
}

#[test]
fn storage_sweep_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("storage_bandwidth.csv");
    let spec = configs("storage_bandwidth.spec");
    let out = hetcache(&[
        "sweep",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--no-timing",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "d_tilde,beta,policy,engine,avg_outage,std_error,wall_ms");
    // 10 storage values, 11 bandwidth values, two policies.
    assert_eq!(lines.count(), 10 * 11 * 2);
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "small.cfg", "lambda_sbs = 0.01\nlibrary_size = 20\nrealizations = 5\n");
    let a = hetcache(&["simulate", "--config", &cfg, "--seed", "7"]);
    let b = hetcache(&["simulate", "--config", &cfg, "--seed", "7"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["average"]["seed"], 7);
    assert_eq!(v["realizations"], 5);
}

#[test]
fn unknown_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.cfg", "beta = 0.1\nlamda_sbs = 0.2\n");
    let out = hetcache(&["analytic", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr(&out);
    assert!(err.contains("lamda_sbs") && err.contains("line 2"), "{err}");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "beta.cfg", "beta = 3\n");
    let out = hetcache(&["analytic", "--config", &bad]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("beta"));

    assert_eq!(hetcache(&["analytic", "--bogus"]).status.code(), Some(2));
    assert_eq!(hetcache(&["analytic", "--config", "/no/such/file.cfg"]).status.code(), Some(2));
    assert_eq!(hetcache(&["--help"]).status.code(), Some(0));

    // A valid spec whose output cannot be written is a runtime failure.
    let spec = configs("storage_bandwidth.spec");
    let out = hetcache(&["sweep", "--spec", spec.to_str().unwrap(), "--out", "/no/such/dir/out.csv"]);
    assert_eq!(out.status.code(), Some(1));
}
