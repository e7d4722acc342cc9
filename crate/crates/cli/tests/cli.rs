use std::path::PathBuf;
use std::process::{Command, Output};

fn stopflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stopflow")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn temp_path(name: &str) -> PathBuf {
    std::env::temp_dir().join(format!("stopflow-cli-{}-{name}", std::process::id()))
}

/// Data rows after the version line and header.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(2).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn classify_case_e_period_four() {
    let v = json(&stopflow(&["classify", "--lambda", "-0.666667", "--beta", "2"]));
    assert_eq!(v["schema"], 1);
    assert_eq!(v["data"]["case"], "e");
    assert_eq!(v["data"]["predicted_period"], 4);
}

#[test]
fn classify_case_a() {
    let v = json(&stopflow(&["classify", "--lambda", "0.5", "--beta", "0.5"]));
    assert_eq!(v["data"]["case"], "a");
}

#[test]
fn classify_rejects_lambda_out_of_range() {
    let o = stopflow(&["classify", "--lambda", "1.5", "--beta", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lambda"));
}

#[test]
fn beta_and_a_conflict() {
    let o = stopflow(&["classify", "--lambda", "0.5", "--beta", "0.5", "--a", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_case_c_ends_on_two_cycle() {
    let o = stopflow(&["simulate", "--lambda", "0.3", "--beta", "-1.8", "--x0", "0.1", "--s0", "0", "--n", "4000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("# stopflow v1\nn,x,s,p\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 4001);
    let q = 2.1 / 1.3;
    let last: Vec<(f64, f64)> = r[r.len() - 4..]
        .iter()
        .map(|row| (row[1].parse().unwrap(), row[2].parse().unwrap()))
        .collect();
    for w in last.windows(2) {
        assert!((w[0].0 + w[1].0).abs() < 1e-9 && (w[0].1 + w[1].1).abs() < 1e-9);
    }
    assert!(last.iter().all(|(x, s)| (x.abs() - q).abs() < 1e-9 && (s.abs() - 1.0).abs() < 1e-12));
}

#[test]
fn simulate_json_reports_attractor() {
    let v = json(&stopflow(&["simulate", "--lambda", "0.3", "--beta", "-1.8", "--n", "10", "--format", "json"]));
    assert_eq!(v["kind"], "trajectory");
    assert_eq!(v["data"]["attractor"]["kind"], "cycle");
    assert_eq!(v["data"]["attractor"]["period"], 2);
    assert_eq!(v["data"]["trajectory"].as_array().unwrap().len(), 11);
}

#[test]
fn hitting_map_first_breakpoints() {
    let o = stopflow(&["hitting-map", "--lambda", "-0.5", "--a", "2", "--kmax", "10"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 10);
    let r1: f64 = r[0][1].parse().unwrap();
    let q1: f64 = r[0][2].parse().unwrap();
    assert!((r1 - 8.0 / 3.0).abs() < 1e-12);
    assert!((q1 - 20.0 / 3.0).abs() < 1e-12);
}

#[test]
fn hitting_map_json_has_stable_fixed_point() {
    let v = json(&stopflow(&["hitting-map", "--lambda", "-0.666667", "--beta", "2", "--format", "json"]));
    let fps = v["data"]["fixed_points"].as_array().unwrap();
    let stable: Vec<_> = fps.iter().filter(|f| f["stable"] == true).collect();
    assert_eq!(stable.len(), 1);
    assert_eq!(stable[0]["system_period"], 4);
    assert!(!v["data"]["pieces"].as_array().unwrap().is_empty());
}

#[test]
fn orbits_find_period_four_points() {
    let o = stopflow(&["orbits", "--lambda", "-0.666667", "--beta", "2", "--period", "4", "--x-min", "-10", "--x-max", "10"]);
    assert!(o.status.success());
    assert!(!rows(&stdout(&o)).is_empty());
}

#[test]
fn omega_map_small_grid() {
    let o = stopflow(&["omega-map", "--resolution", "4"]);
    assert!(o.status.success());
    assert_eq!(rows(&stdout(&o)).len(), 16);
}

#[test]
fn sweep_small_grid_agrees() {
    let o = stopflow(&[
        "sweep", "--lambda-range=-0.9,0.9", "--beta-range=-1.9,1.9", "--resolution", "3", "--starts", "5",
    ]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap().starts_with("lambda,beta,case,predicted_period,observed_period,agreement"));
    let r = rows(&text);
    assert_eq!(r.len(), 9);
    assert!(r.iter().all(|row| row[5] != "0"), "{text}");
}

#[test]
fn dsge_preset_trajectory() {
    let o = stopflow(&["dsge", "--preset", "fig7a", "--n", "2000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().nth(1).unwrap() == "n,y,u,v,s,sigma");
    let r = rows(&text);
    assert_eq!(r.len(), 2001);
    assert!(r.iter().all(|row| row[4].parse::<f64>().unwrap().abs() <= 1.0));
}

#[test]
fn dsge_unknown_preset_is_domain_error() {
    assert_eq!(stopflow(&["dsge", "--preset", "fig9"]).status.code(), Some(2));
}

#[test]
fn dsge_shock_file() {
    let path = temp_path("shocks.json");
    std::fs::write(&path, r#"{"eps": [1.0, 0.0], "eta": [0.0, 0.5], "xi": [0.0, 0.0]}"#).unwrap();
    let o = stopflow(&["dsge", "--preset", "fig7b", "--n", "2", "--start", "0,0,0,0", "--shocks", path.to_str().unwrap()]);
    std::fs::remove_file(&path).ok();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    let y1: f64 = r[1][1].parse().unwrap();
    assert!(y1 != 0.0);
}

#[test]
fn output_is_deterministic() {
    let args = ["sweep", "--resolution", "2", "--starts", "4", "--seed", "7", "--format", "json"];
    assert_eq!(stopflow(&args).stdout, stopflow(&args).stdout);
    let d = ["dsge", "--preset", "fig7e", "--n", "300", "--seed", "3"];
    assert_eq!(stopflow(&d).stdout, stopflow(&d).stdout);
}

#[test]
fn unwritable_output_exits_three() {
    let o = stopflow(&["classify", "--lambda", "0.5", "--beta", "0.5", "--out", "/nonexistent-dir/x.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn missing_config_exits_three() {
    let o = stopflow(&["--config", "/nonexistent-dir/c.json", "classify", "--lambda", "0.5", "--beta", "0.5"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn out_file_written() {
    let path = temp_path("out.csv");
    let o = stopflow(&["simulate", "--lambda", "0.5", "--beta", "0.5", "--n", "3", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(rows(&text).len(), 4);
}

#[test]
fn flags_override_config() {
    let path = temp_path("config.json");
    std::fs::write(&path, r#"{"lambda": 0.5, "beta": 0.5, "format": "csv"}"#).unwrap();
    let cfg = path.to_str().unwrap();
    let from_file = stopflow(&["--config", cfg, "classify"]);
    let overridden = stopflow(&["--config", cfg, "classify", "--beta", "2"]);
    std::fs::remove_file(&path).ok();
    assert!(from_file.status.success() && overridden.status.success());
    assert_eq!(rows(&stdout(&from_file))[0][3], "a");
    assert_eq!(rows(&stdout(&overridden))[0][3], "b");
}

#[test]
fn bad_config_value_is_domain_error() {
    let path = temp_path("bad.json");
    std::fs::write(&path, r#"{"lambda": "half", "beta": 0.5}"#).unwrap();
    let o = stopflow(&["--config", path.to_str().unwrap(), "classify"]);
    std::fs::remove_file(&path).ok();
    assert_eq!(o.status.code(), Some(2));
}
