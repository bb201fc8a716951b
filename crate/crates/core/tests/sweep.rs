use filtsps::metrics::{IntegrationConfig, Metric};
use filtsps::presets::figure_preset;
use filtsps::sweep::{csv_string, run_point, run_sweep, Axis, CsvOptions, Param, PointParams, SweepGrid, SweepTable, CSV_COLUMNS};

fn small_grid() -> SweepGrid {
    SweepGrid {
        axes: vec![
            Axis::log(Param::GammaF, 0.1, 10.0, 3),
            Axis::linear(Param::PulseT, 0.5, 1.5, 3),
        ],
        fixed: PointParams { gamma_pump: 1.0, gamma_deph: 2.0, gamma_f: 1.0, pulse_t: 1.0, detuning: 0.0 },
        metrics: Metric::ALL.to_vec(),
        config: IntegrationConfig::default(),
    }
}

#[test]
fn rows_follow_lexicographic_axis_order() {
    let t = run_sweep(&small_grid(), 2).unwrap();
    assert_eq!(t.rows.len(), 9);
    let keys: Vec<(f64, f64)> = t.rows.iter().map(|r| (r.params.gamma_f, r.params.pulse_t)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    assert_eq!(keys, sorted);
    assert!(t.rows.iter().all(|r| r.status() == "ok"));
    assert_eq!(t.manifest.points, 9);
    assert_eq!(t.manifest.failed_points, 0);
}

#[test]
fn csv_is_identical_across_worker_counts() {
    let g = small_grid();
    let a = csv_string(&run_sweep(&g, 1).unwrap().rows, &g.config, CsvOptions::default()).unwrap();
    let b = csv_string(&run_sweep(&g, 8).unwrap().rows, &g.config, CsvOptions::default()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn csv_layout() {
    let g = small_grid();
    let t = run_sweep(&g, 1).unwrap();
    let s = csv_string(&t.rows, &g.config, CsvOptions::default()).unwrap();
    let mut lines = s.lines();
    let comment = lines.next().unwrap();
    assert!(comment.starts_with('#') && comment.contains("gamma_diss") && comment.contains("rel_tol"));
    assert_eq!(lines.next().unwrap(), CSV_COLUMNS.join(","));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(first.len(), CSV_COLUMNS.len());
    assert_eq!(first[13], "ok");
    assert_eq!(first[14], "");
    assert_eq!(first[15].parse::<f64>().unwrap(), 1e-6);
    let timed = csv_string(&t.rows, &g.config, CsvOptions { timing: true }).unwrap();
    assert!(!timed.lines().nth(2).unwrap().split(',').nth(14).unwrap().is_empty());
}

#[test]
fn run_point_examples() {
    let cfg = IntegrationConfig::default();
    let p = PointParams { gamma_pump: 5.0, gamma_deph: 10.0, gamma_f: 1.0, pulse_t: 0.01, detuning: 0.0 };
    let rec = run_point(&p, &[Metric::QyRatio], &cfg).unwrap();
    let qy = rec.qy_ratio.unwrap().value().unwrap();
    assert!((qy / (2.0 / 13.0) - 1.0).abs() < 0.01);
    assert!(rec.indistinguishability.is_none());

    let empty = run_point(&p, &[], &cfg).unwrap();
    assert_eq!(empty.outcomes().count(), 0);

    let tiny = PointParams { pulse_t: 1e-14, ..p };
    let rec = run_point(&tiny, &Metric::ALL, &cfg).unwrap();
    assert_eq!(rec.g2_at_t.as_ref().unwrap().status(), "degenerate");
    assert_eq!(rec.g2_infinity.as_ref().unwrap().status(), "degenerate");
}

#[test]
fn invalid_points_fail_without_aborting() {
    let mut g = small_grid();
    g.axes = vec![Axis::explicit(Param::GammaPump, vec![-1.0, 1.0])];
    let t = run_sweep(&g, 1).unwrap();
    assert!(t.rows[0].all_failed());
    assert!(!t.rows[1].all_failed());
    assert!(!t.all_failed());
    g.axes = vec![Axis::explicit(Param::GammaPump, vec![-1.0, -2.0])];
    assert!(run_sweep(&g, 1).unwrap().all_failed());
}

#[test]
fn table_round_trips_through_json() {
    let t = run_sweep(&small_grid(), 1).unwrap();
    let s = serde_json::to_string(&t).unwrap();
    let back: SweepTable = serde_json::from_str(&s).unwrap();
    assert_eq!(back.rows, t.rows);
    assert_eq!(back.manifest.grid, t.manifest.grid);
}

#[test]
fn grid_from_json() {
    let json = r#"{
        "axes": [{"param": "gamma_F", "min": 0.01, "max": 100, "points": 5, "scale": "log"}],
        "fixed": {"gamma_pump": 0.01, "gamma_deph": 10, "gamma_F": 1, "pulse_T": 0.1},
        "metrics": ["ind", "qy"]
    }"#;
    let g: SweepGrid = serde_json::from_str(json).unwrap();
    assert_eq!(g.len(), 5);
    assert_eq!(g.fixed.detuning, 0.0);
    assert_eq!(g.config, IntegrationConfig::default());
    assert_eq!(g.metrics, vec![Metric::Indistinguishability, Metric::QyRatio]);
}

#[test]
fn fig1a_increases_toward_narrow_filters() {
    let (g, p) = figure_preset("fig1a", 6).unwrap();
    let t = run_sweep(&g, 0).unwrap();
    let nx = p.x.values.len();
    for row in t.rows.chunks(nx) {
        let v: Vec<f64> = row.iter().map(|r| r.record.indistinguishability.as_ref().unwrap().value().unwrap()).collect();
        assert!(v.windows(2).all(|w| w[0] >= w[1]), "{v:?}");
    }
}
