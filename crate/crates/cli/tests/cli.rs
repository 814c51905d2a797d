use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_metacost"));
    c.env_remove("METACOST_OUT");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Small MARG68-generated dataset written by the binary itself.
fn synth(dir: &TempDir) -> PathBuf {
    let data = dir.path().join("data");
    let o = run(&["synth", "--preset", "small", "--target", "MARG68", "--seed", "3", "--out", p(&data)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    data
}

fn csv_body(path: &Path) -> String {
    let text = fs::read_to_string(path).unwrap();
    assert!(text.starts_with("# config:"), "{}", path.display());
    text.lines().skip(1).collect::<Vec<_>>().join("\n")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn validate_exit_codes() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let o = run(&["validate", "--dataset", p(&data)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("ok: 16 trials"));

    // activation above one in the first muscle of one trial
    let victim = data.join("S02_v1.3_i+8.csv");
    let text = fs::read_to_string(&victim).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    let mut cells: Vec<String> = lines[5].split(',').map(String::from).collect();
    let header: Vec<&str> = lines[0].split(',').collect();
    let col = header.iter().position(|h| h.ends_with(".a")).unwrap();
    let field = header[col].to_string();
    cells[col] = "1.5".into();
    lines[5] = cells.join(",");
    fs::write(&victim, lines.join("\n") + "\n").unwrap();
    let o = run(&["validate", "--dataset", p(&data)]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("S02_v1.3_i+8"), "{err}");
    assert!(err.contains(field.trim_end_matches(".a")), "{err}");

    fs::remove_file(&victim).unwrap();
    assert_eq!(code(&run(&["validate", "--dataset", p(&data)])), 2);
    assert_eq!(code(&run(&["validate", "--dataset", p(&dir.path().join("absent"))])), 2);
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    assert_eq!(code(&run(&["evaluate", "--dataset", p(&data), "--model", "NOPE"])), 1);
    assert_eq!(code(&run(&["evaluate", "--frobnicate"])), 1);
    assert_eq!(code(&run(&["sense", "--dataset", p(&data), "--samples", "10", "--behavioural", "20"])), 1);
    assert_eq!(code(&run(&["sense", "--dataset", p(&data), "--model", "MARG68", "--range", "nope=0:1"])), 1);
    assert_eq!(code(&run(&["--help"])), 0);
}

#[test]
fn evaluate_reproduces_generator_and_echoes_config() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let out = dir.path().join("out");
    let o = run(&["evaluate", "--dataset", p(&data), "--model", "MARG68", "--curves", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&out.join("evaluate.json"));
    assert_eq!(v["config"]["model"], "MARG68");
    let rmse = v["result"]["models"][0]["score"]["rmse"].as_f64().unwrap();
    assert!(rmse < 1e-9, "{rmse}");
    assert!(fs::read_to_string(out.join("evaluate_costs.csv")).unwrap().starts_with("# config:"));
    let curves = fs::read_to_string(out.join("curves_MARG68.csv")).unwrap();
    assert_eq!(curves.lines().nth(1).unwrap(), "trial,subject,channel,cycle_pct,rate_w_per_kg");
}

#[test]
fn sense_is_deterministic_and_writes_heatmaps() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for (out, jobs) in [(&a, "1"), (&b, "2")] {
        let o = run(&["sense", "--dataset", p(&data), "--model", "MARG68", "--samples", "2000", "--behavioural", "20", "--jobs", jobs, "--out", p(out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["sense_MARG68_best.csv", "heatmap_MARG68.csv", "heatmap_MARG68_grid.csv"] {
        assert_eq!(csv_body(&a.join(f)), csv_body(&b.join(f)), "{f}");
    }
    let grid = csv_body(&a.join("heatmap_MARG68_grid.csv"));
    let centres: Vec<f64> = grid.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(centres.len(), 2500);
    let (lo, hi) = centres.iter().fold((f64::MAX, f64::MIN), |(l, h), &c| (l.min(c), h.max(c)));
    assert!((lo + 4.9).abs() < 1e-9 && (hi - 4.9).abs() < 1e-9, "{lo} {hi}");
    let v = json(&a.join("sense_MARG68.json"));
    assert_eq!(v["result"]["n_samples"], 2000);
    assert_eq!(v["result"]["best"].as_array().unwrap().len(), 20);
}

#[test]
fn config_file_precedence() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let out = dir.path().join("from-file");
    let cfg = dir.path().join("run.cfg");
    fs::write(
        &cfg,
        format!("# sense settings\ndataset = {}\nmodel = MARG68\nsamples = 300\nbehavioural = 7\nout = {}\nrange.eta_s = 0:1\n", p(&data), p(&out)),
    )
    .unwrap();
    let o = run(&["sense", "--config", p(&cfg), "--behavioural", "9"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&out.join("sense_MARG68.json"));
    assert_eq!(v["config"]["samples"], 300);
    assert_eq!(v["config"]["behavioural"], 9);
    assert_eq!(v["result"]["ranges"][0]["lo"], 0.0);
    assert_eq!(v["result"]["ranges"][0]["hi"], 1.0);

    fs::write(&cfg, "sampels = 3\n").unwrap();
    assert_eq!(code(&run(&["sense", "--config", p(&cfg)])), 1);
}

#[test]
fn output_directory_defaults_to_environment() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let env_out = dir.path().join("env-out");
    let o = bin().args(["evaluate", "--dataset", p(&data), "--model", "MINE97"]).env("METACOST_OUT", &env_out).output().unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(env_out.join("evaluate.json").exists());

    let flag_out = dir.path().join("flag-out");
    let o = bin()
        .args(["evaluate", "--dataset", p(&data), "--model", "MINE97", "--out", p(&flag_out)])
        .env("METACOST_OUT", dir.path().join("unused"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(flag_out.join("evaluate.json").exists());
    assert!(!dir.path().join("unused").exists());
}

#[test]
fn quasiopt_writes_table_and_folds() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let out = dir.path().join("q");
    let o = run(&["quasiopt", "--dataset", p(&data), "--model", "MARG68", "--samples", "500", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(!stdout.contains("inf"), "{stdout}");
    let v = json(&out.join("quasiopt.json"));
    assert_eq!(v["result"]["reports"][0]["folds"].as_array().unwrap().len(), 4);
    assert!(out.join("quasiopt_table.txt").exists());
    assert_eq!(csv_body(&out.join("quasiopt_folds.csv")).lines().count(), 5);
}

#[test]
fn joint_sweep_fills_every_pair() {
    let dir = TempDir::new().unwrap();
    let data = synth(&dir);
    let out = dir.path().join("s");
    let o = run(&["sweep", "--dataset", p(&data), "--space", "joint", "--budget", "desk", "--epochs", "3", "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let body = csv_body(&out.join("sweep_joint_pairs.csv"));
    let rows: Vec<Vec<&str>> = body.lines().skip(1).map(|l| l.split(',').skip(1).collect()).collect();
    assert_eq!(rows.len(), 4);
    let off: usize = (0..4).map(|i| (i + 1..4).filter(|&j| !rows[i][j].is_empty()).count()).sum();
    let below: usize = (0..4).map(|i| (0..i).filter(|&j| !rows[i][j].is_empty()).count()).sum();
    assert_eq!((off, below), (6, 0));
    assert_eq!(csv_body(&out.join("sweep_joint.csv")).lines().count(), 16);
}
