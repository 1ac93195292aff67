use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rayreg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rayreg")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Three regions of 60 observations with means 1, 2 and 3.5.
fn region_data(dir: &Path) -> String {
    let mut s = String::from("region,y\n");
    let mut u = 0.37_f64;
    for (reg, mu) in [("A", 1.0), ("B", 2.0), ("C", 3.5)] {
        for _ in 0..60 {
            u = (u * 7919.0 + 0.1234).fract();
            let y = 2.0 * mu * (-(1.0 - u).ln() / std::f64::consts::PI).sqrt();
            s += &format!("{reg},{y:.6}\n");
        }
    }
    let p = dir.join("regions.csv");
    std::fs::write(&p, s).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn fit_reports_every_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    let data = region_data(dir.path());
    let out = dir.path().join("out");
    let o = rayreg(&["--out-dir", out.to_str().unwrap(), "fit", &data, "--response", "y", "--dummy", "region", "--reference", "A"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc = read_json(&out.join("fit.json"));
    let fits = doc["fits"].as_array().unwrap();
    assert_eq!(fits.len(), 2);
    for f in fits {
        let coef = f["coefficients"].as_array().unwrap();
        let names: Vec<&str> = coef.iter().map(|c| c["name"].as_str().unwrap()).collect();
        assert_eq!(names, ["(Intercept)", "B", "C"]);
        assert!(coef.iter().all(|c| c["p_value"].as_f64().is_some_and(|p| (0.0..=1.0).contains(&p))));
        assert_eq!(f["converged"], true);
    }
    assert!(out.join("manifest.json").exists());
}

#[test]
fn json_format_prints_parseable_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let data = region_data(dir.path());
    let out = dir.path().join("out");
    let o = rayreg(&["--format", "json", "--out-dir", out.to_str().unwrap(), "fit", &data, "--response", "y", "--method", "wmle"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.is_object());
}

#[test]
fn delta_with_mle_warns() {
    let dir = tempfile::tempdir().unwrap();
    let data = region_data(dir.path());
    let out = dir.path().join("out");
    let o = rayreg(&["--out-dir", out.to_str().unwrap(), "fit", &data, "--response", "y", "--method", "mle", "--delta", "0.01"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("--delta is ignored with --method mle"), "{}", stderr(&o));
}

#[test]
fn missing_input_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let o = rayreg(&["--out-dir", dir.path().to_str().unwrap(), "fit", missing.to_str().unwrap(), "--response", "y"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("nope.csv"), "{}", stderr(&o));
}

#[test]
fn nonpositive_responses_are_listed_by_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.csv");
    std::fs::write(&p, "y,x\n1.0,0.1\n-2.0,0.2\n0,0.3\n1.5,0.4\n").unwrap();
    let o = rayreg(&["--out-dir", dir.path().to_str().unwrap(), "fit", p.to_str().unwrap(), "--response", "y", "--covariates", "x"]);
    assert!(!o.status.success());
    let e = stderr(&o);
    assert!(e.contains("2 nonpositive") && e.contains("lines 3, 4"), "{e}");
}

#[test]
fn simulate_warns_on_degenerate_settings() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"N": 50, "epsilon": [0.5], "replications": 1}"#).unwrap();
    let o = rayreg(&["--out-dir", dir.path().to_str().unwrap(), "simulate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let e = stderr(&o);
    assert!(e.contains("single replication"), "{e}");
    assert!(e.contains("50% or more"), "{e}");
}

#[test]
fn config_errors_name_the_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"epsilon": [0.01, "high"]}"#).unwrap();
    let o = rayreg(&["--out-dir", dir.path().to_str().unwrap(), "simulate", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("config error at `epsilon`"), "{}", stderr(&o));
    std::fs::write(&cfg, r#"{"replication": 3}"#).unwrap();
    let o = rayreg(&["--out-dir", dir.path().to_str().unwrap(), "simulate", "--config", cfg.to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("replication"), "{}", stderr(&o));
}

fn scene(dir: &Path) -> (Value, std::path::PathBuf) {
    let sdir = dir.join("scene");
    let o = rayreg(&["--out-dir", sdir.to_str().unwrap(), "synth-scene"]);
    assert!(o.status.success(), "{}", stderr(&o));
    (read_json(&sdir.join("scene.json")), sdir)
}

#[test]
fn detect_on_synthetic_scene() {
    let dir = tempfile::tempdir().unwrap();
    let (doc, sdir) = scene(dir.path());
    let out = dir.path().join("det");
    let p = |f: &str| sdir.join(f).to_str().unwrap().to_string();
    let o = rayreg(&[
        "--out-dir", out.to_str().unwrap(), "detect",
        "--interest", &p("interest.rrm"),
        "--covariate", &p("reference_1.rrm"),
        "--covariate", &p("reference_2.rrm"),
        "--region", doc["region_arg"].as_str().unwrap(),
        "--truth", &p("truth.csv"),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let score = read_json(&out.join("wmle_score.json"));
    assert!(score["hits"].as_u64().unwrap() >= 22, "{score}");
    assert!(out.join("wmle_mask.pgm").exists());
}

#[test]
fn single_pixel_training_region_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let (_, sdir) = scene(dir.path());
    let p = |f: &str| sdir.join(f).to_str().unwrap().to_string();
    let o = rayreg(&[
        "--out-dir", dir.path().join("det").to_str().unwrap(), "detect",
        "--interest", &p("interest.rrm"),
        "--covariate", &p("reference_1.rrm"),
        "--region", "10,10,1,1",
    ]);
    assert!(!o.status.success());
    assert!(stderr(&o).starts_with("error:"), "{}", stderr(&o));
    let o = rayreg(&["detect", "--interest", &p("interest.rrm"), "--region", "1,2,3"]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("four values"), "{}", stderr(&o));
}

#[test]
fn replay_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a");
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"N": [60], "epsilon": [0.05], "replications": 8}"#).unwrap();
    let o = rayreg(&["--seed", "9", "--out-dir", first.to_str().unwrap(), "simulate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let second = dir.path().join("b");
    let o = rayreg(&["--out-dir", second.to_str().unwrap(), "replay", first.join("manifest.json").to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).contains("outputs identical"), "{}", stderr(&o));
    for f in ["table.json", "table.txt"] {
        assert_eq!(std::fs::read(first.join(f)).unwrap(), std::fs::read(second.join(f)).unwrap(), "{f}");
    }
    let m = read_json(&first.join("manifest.json"));
    assert_eq!(m["seed"], 9);
    assert_eq!(m["config"]["replications"], 8);
}

#[test]
fn replay_detects_changed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let data = region_data(dir.path());
    let out = dir.path().join("a");
    assert!(rayreg(&["--out-dir", out.to_str().unwrap(), "fit", &data, "--response", "y"]).status.success());
    std::fs::write(&data, "region,y\nA,1.0\nA,2.0\nA,3.0\n").unwrap();
    let o = rayreg(&["--out-dir", dir.path().join("b").to_str().unwrap(), "replay", out.join("manifest.json").to_str().unwrap()]);
    assert!(!o.status.success());
    assert!(stderr(&o).contains("changed since the recorded run"), "{}", stderr(&o));
}
