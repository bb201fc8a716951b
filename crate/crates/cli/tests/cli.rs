use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn filtsps(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_filtsps")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("filtsps-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn data_rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn point_quantum_yield_short_pulse() {
    let o = filtsps(&[
        "point", "--gamma-pump", "5", "--gamma-deph", "10", "--gamma-f", "1", "--pulse", "0.01", "--metrics", "qy",
    ]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let qy = v["record"]["qy_ratio"]["value"].as_f64().unwrap();
    assert!((qy - 2.0 / 13.0).abs() / (2.0 / 13.0) < 1e-3, "{qy}");
    assert!(v["record"]["indistinguishability"].is_null());
    assert_eq!(v["status"], "ok");
}

#[test]
fn point_with_no_metrics_succeeds() {
    let o = filtsps(&["point", "--metrics", ""]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    for k in ["indistinguishability", "g2_at_t", "g2_infinity", "qy_ratio"] {
        assert!(v["record"][k].is_null());
    }
}

#[test]
fn point_csv_echoes_parameters_and_tolerances() {
    let o = filtsps(&["point", "--format", "csv", "--pulse", "0.5", "--gamma-f", "2", "--rel-tol", "1e-7"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("# rates"));
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].len(), 18);
    assert_eq!(rows[0][2], "2e0");
    assert_eq!(rows[0][3], "5e-1");
    assert_eq!(rows[0][13], "ok");
    assert_eq!(rows[0][15], "1e-7");
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["point", "--metrics", "nope"],
        vec!["point", "--pulse", "-1"],
        vec!["point", "--path", "sideways"],
        vec!["figure", "fig9"],
        vec!["limits", "--name", "bogus"],
        vec!["sweep"],
        vec!["sweep", "--axis", "gamma_F:1:2"],
        vec!["frobnicate"],
    ] {
        let o = filtsps(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn point_accuracy_budget_exit_4() {
    let o = filtsps(&["point", "--metrics", "ind", "--path", "both", "--rel-tol", "1e-17", "--abs-tol", "1e-30"]);
    assert_eq!(code(&o), 4);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["record"]["indistinguishability"]["status"], "accuracy");
    assert!(v["record"]["indistinguishability"]["estimate"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_rows_follow_axis_order() {
    let o = filtsps(&[
        "sweep", "--axis", "pulse_T:0.1:10:3:log", "--axis", "gamma_F=0.5,1,2", "--metrics", "qy", "--gamma-deph", "10",
    ]);
    assert_eq!(code(&o), 0);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 9);
    let t: Vec<&str> = rows.iter().map(|r| r[3].as_str()).collect();
    let f: Vec<&str> = rows.iter().map(|r| r[2].as_str()).collect();
    assert_eq!(t, ["1e-1", "1e-1", "1e-1", "1e0", "1e0", "1e0", "1e1", "1e1", "1e1"]);
    assert_eq!(f, ["5e-1", "1e0", "2e0", "5e-1", "1e0", "2e0", "5e-1", "1e0", "2e0"]);
    assert!(rows.iter().all(|r| r[1] == "1e1" && r[13] == "ok"));
}

#[test]
fn sweep_is_worker_independent_and_rerunnable_from_manifest() {
    let dir = scratch("manifest");
    let one = dir.join("one.csv");
    let eight = dir.join("eight.csv");
    let base = ["sweep", "--axis", "pulse_T:0.05:5:3:log", "--axis", "gamma_pump:0.1:10:3:log", "--gamma-deph", "2"];
    let run = |out: &PathBuf, workers: &str| {
        let mut a = base.to_vec();
        a.extend(["--workers", workers, "--out", out.to_str().unwrap()]);
        filtsps(&a)
    };
    assert_eq!(code(&run(&one, "1")), 0);
    assert_eq!(code(&run(&eight, "8")), 0);
    let a = fs::read(&one).unwrap();
    assert_eq!(a, fs::read(&eight).unwrap());

    let manifest = dir.join("one.csv.manifest.json");
    let m: Value = serde_json::from_str(&fs::read_to_string(&manifest).unwrap()).unwrap();
    assert_eq!(m["points"], 9);
    assert_eq!(m["failed_points"], 0);
    assert_eq!(m["workers"], 1);
    assert_eq!(m["point_status"].as_array().unwrap().len(), 9);

    let grid = dir.join("grid.json");
    fs::write(&grid, serde_json::to_string(&m["grid"]).unwrap()).unwrap();
    let again = dir.join("again.csv");
    let o = filtsps(&["sweep", "--config", grid.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(a, fs::read(&again).unwrap());
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn sweep_json_config_with_overrides() {
    let dir = scratch("config");
    let cfg = dir.join("grid.json");
    fs::write(
        &cfg,
        r#"{
  "axes": [{"param": "gamma_F", "min": 0.1, "max": 10, "points": 2, "scale": "log"}],
  "fixed": {"gamma_pump": 5, "gamma_deph": 10, "gamma_F": 1, "pulse_T": 0.01},
  "metrics": ["qy"],
  "config": {"rel_tol": 1e-8}
}"#,
    )
    .unwrap();
    let o = filtsps(&["sweep", "--config", cfg.to_str().unwrap(), "--format", "json", "--pulse", "50"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["params"]["pulse_T"], 50.0);
    assert_eq!(v["manifest"]["grid"]["config"]["rel_tol"], 1e-8);
    let bad = dir.join("bad.json");
    fs::write(&bad, "{\"axes\": 3}").unwrap();
    assert_eq!(code(&filtsps(&["sweep", "--config", bad.to_str().unwrap()])), 2);
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn sweep_where_every_point_fails_exits_3() {
    let o = filtsps(&["sweep", "--axis", "gamma_deph=-1,-2", "--metrics", "qy"]);
    assert_eq!(code(&o), 3);
    let rows = data_rows(&stdout(&o));
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[11] == "nan" && r[13] == "qy:failed"));
}

#[test]
fn figure_writes_csv_svg_and_manifest() {
    let dir = scratch("figure");
    let o = filtsps(&["figure", "fig4a", "--points", "3", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.join("fig4a.csv")).unwrap();
    let rows = data_rows(&csv);
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r[1] == "0e0" && !r[9].is_empty()));
    let svg = fs::read_to_string(dir.join("fig4a.svg")).unwrap();
    assert!(svg.starts_with("<svg") || svg.starts_with("<?xml"));
    assert!(svg.matches("<rect").count() >= 9);
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.join("fig4a.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["grid"]["metrics"][0], "g2inf");
    let _ = fs::remove_dir_all(&dir);
}

#[test]
fn limits_table_and_json() {
    let o = filtsps(&["limits", "--gamma-deph", "10", "--gamma-pump", "5", "--pulse", "0.01"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.starts_with("name,value\n"));
    assert_eq!(text.lines().count(), 9);

    let o = filtsps(&["limits", "--name", "qy_long", "--gamma-deph", "10", "--gamma-pump", "5", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["limits"]["qy_long"].as_f64().unwrap() - 1.0 / 9.0).abs() < 1e-15);

    let o = filtsps(&["limits", "--name", "I0", "--gamma-deph", "10", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!((v["limits"]["I0"].as_f64().unwrap() - 1.0 / 11.0).abs() < 1e-15);
}

#[test]
fn selftest_summary_is_consistent() {
    let o = filtsps(&["selftest", "--quick", "--format", "json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let reports: Vec<&Value> =
        v["sections"].as_array().unwrap().iter().flat_map(|s| s["reports"].as_array().unwrap()).collect();
    let failed = reports.iter().filter(|r| r["passed"] == false).count();
    assert_eq!(v["failed"].as_u64().unwrap() as usize, failed);
    assert_eq!(v["total"].as_u64().unwrap() as usize, reports.len());
    assert_eq!(code(&o), if failed == 0 { 0 } else { 1 });
    let ode = &v["sections"][0];
    assert_eq!(ode["name"], "ode");
    assert!(ode["reports"].as_array().unwrap().iter().all(|r| r["passed"] == true));
    let report = String::from_utf8(o.stderr).unwrap();
    assert!(report.contains("[limits]"));
    assert!(report.contains("checks passed"));
}

#[test]
fn config_axis_with_explicit_values() {
    let dir = scratch("explicit");
    let cfg = dir.join("grid.json");
    fs::write(&cfg, r#"{"axes": [{"param": "gamma_F", "values": [0.1, 1, 10]}], "metrics": ["qy"]}"#).unwrap();
    let o = filtsps(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let f: Vec<String> = data_rows(&stdout(&o)).into_iter().map(|r| r[2].clone()).collect();
    assert_eq!(f, ["1e-1", "1e0", "1e1"]);
    fs::write(&cfg, r#"{"axes": [{"param": "gamma_F", "max": 3}], "metrics": ["qy"]}"#).unwrap();
    assert_eq!(code(&filtsps(&["sweep", "--config", cfg.to_str().unwrap()])), 2);
    let _ = fs::remove_dir_all(&dir);
}
