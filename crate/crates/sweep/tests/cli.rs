use lzs_core::unitary::{resonance_regions, Rect};
use lzs_sweep::config::{validate_config, SweepConfig};
use lzs_sweep::io::{self, Format};
use lzs_sweep::plot::{self, Palette, PlotError};
use lzs_sweep::run::{self, RunMeta, SweepResult};
use lzs_sweep::{cut_1d, emit_overlay, CutAxis};
use serde_json::json;
use std::process::{Command, Stdio};

fn cfg(v: serde_json::Value) -> SweepConfig {
    validate_config(&v).unwrap()
}

fn small_grid() -> serde_json::Value {
    json!({ "a_min_over_omega": 0.0, "a_max_over_omega": 6.0, "a_steps": 4,
            "eps0_min_over_omega": -28.0, "eps0_max_over_omega": 2.0, "eps0_steps": 7 })
}

fn synthetic(na: usize, ne: usize, f: impl Fn(f64, f64) -> f64) -> SweepResult {
    let a_axis: Vec<f64> = (0..na).map(|i| i as f64 * 0.5).collect();
    let eps0_axis: Vec<f64> = (0..ne).map(|j| -3.0 + j as f64 * 0.25).collect();
    let values = a_axis.iter().flat_map(|&a| eps0_axis.iter().map(move |&e| (a, e))).map(|(a, e)| f(a, e)).collect();
    SweepResult {
        a_axis,
        eps0_axis,
        values,
        diagnostics: Vec::new(),
        meta: RunMeta {
            config_hash: String::new(),
            code_version: String::new(),
            wall_time_s: 0.0,
            workers: 1,
            points: na * ne,
            failed: 0,
            resumed: 0,
        },
    }
}

#[test]
fn undriven_uncoupled_point_stays_down() {
    let c = cfg(json!({
        "params": { "delta_over_omega_r": 0.0, "g_over_omega_r": 0.0 },
        "grid": { "a_min_over_omega": 0.0, "a_max_over_omega": 0.0, "a_steps": 1,
                  "eps0_min_over_omega": -3.0, "eps0_max_over_omega": -3.0, "eps0_steps": 1 },
    }));
    let r = run::run_sweep(&c).unwrap();
    assert_eq!(r.values.len(), 1);
    assert!(r.values[0].abs() < 1e-12, "{}", r.values[0]);
}

#[test]
fn values_are_probabilities_in_grid_order() {
    let c = cfg(json!({ "grid": small_grid() }));
    let r = run::run_sweep(&c).unwrap();
    assert_eq!(r.values.len(), 4 * 7);
    assert!(r.values.iter().all(|v| (-1e-6..=1.0 + 1e-6).contains(v)));
    let csv = io::to_csv(&r);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("A_over_omega,eps0_over_omega,value"));
    assert!(lines.next().unwrap().starts_with("0,-28,"));
    assert!(lines.nth(6).unwrap().starts_with("2,-28,"));
    assert_eq!(r.diagnostics[8].a_over_omega, 2.0);
    assert_eq!(r.diagnostics[8].eps0_over_omega, -23.0);
}

#[test]
fn worker_count_does_not_change_bytes() {
    let base = json!({ "grid": small_grid(), "workers": 1 });
    let mut eight = base.clone();
    eight["workers"] = json!(8);
    let a = run::run_sweep(&cfg(base)).unwrap();
    let b = run::run_sweep(&cfg(eight)).unwrap();
    assert_eq!(io::to_csv(&a), io::to_csv(&b));
    assert_eq!(io::to_binary(&a), io::to_binary(&b));
}

#[test]
fn resume_recomputes_only_missing_points() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(json!({ "grid": small_grid() }));
    let full = run::run_sweep(&c).unwrap();

    assert!(run::run_sweep_partial(&c, dir.path(), false, 10).unwrap().is_none());
    assert!(dir.path().join("checkpoint.jsonl").exists());
    let resumed = run::run_sweep_checkpointed(&c, dir.path(), true).unwrap();
    assert_eq!(resumed.meta.resumed, 10);
    assert_eq!(io::to_csv(&resumed), io::to_csv(&full));
    assert!(!dir.path().join("checkpoint.jsonl").exists());

    // a checkpoint from another config is refused
    assert!(run::run_sweep_partial(&c, dir.path(), false, 3).unwrap().is_none());
    let other = cfg(json!({ "grid": small_grid(), "params": { "n_max": 2 } }));
    let err = run::run_sweep_checkpointed(&other, dir.path(), true).unwrap_err();
    assert!(matches!(err, run::RunError::HashMismatch { .. }), "{err}");
}

#[test]
fn failing_points_become_nan_with_diagnostics() {
    let mut c = cfg(json!({ "grid": small_grid() }));
    c.numerics.ode_tol = 1.0;
    let r = run::run_sweep(&c).unwrap();
    assert!(r.values.iter().all(|v| v.is_nan()));
    assert!(r.diagnostics.iter().all(|d| d.error.is_some()));
    assert_eq!(r.failure_fraction(), 1.0);
    let summary = io::diagnostics_summary(&r);
    assert_eq!(summary["failed_points"], 28);
}

#[test]
fn csv_and_binary_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let c = cfg(json!({ "grid": small_grid() }));
    let r = run::run_sweep(&c).unwrap();
    io::write_result(dir.path(), &c, &r, Format::Csv).unwrap();
    let back = io::load_result(dir.path()).unwrap();
    assert_eq!(back.values, r.values);
    assert_eq!(back.a_axis, r.a_axis);
    assert_eq!(back.eps0_axis, r.eps0_axis);
    assert_eq!(back.diagnostics, r.diagnostics);
    assert_eq!(back.meta.config_hash, c.hash());
    let stored = io::load_config(dir.path()).unwrap().unwrap();
    assert_eq!(validate_config(&stored).unwrap(), c);

    let bin = tempfile::tempdir().unwrap();
    let mut r2 = r.clone();
    r2.values[3] = f64::NAN;
    io::write_result(bin.path(), &c, &r2, Format::Binary).unwrap();
    let back = io::load_result(bin.path()).unwrap();
    assert!(back.values[3].is_nan());
    assert_eq!(back.values[4].to_bits(), r.values[4].to_bits());
}

#[test]
fn minimal_config_gets_sc_defaults() {
    let c = cfg(json!({ "bath": {}, "observable": "dissipative_steady" }));
    assert_eq!(c.params.delta, 0.0038);
    assert_eq!(c.params.omega, 0.0375);
    assert_eq!(c.params.n_max, 3);
    let b = c.bath.unwrap();
    assert_eq!(b.temperature, 0.0175);
    assert_eq!(b, lzs_core::bath::BathSpec::ohmic(0.001, 12.5, 0.0175));
}

#[test]
fn rejected_configs() {
    let neg = validate_config(&json!({ "grid": { "a_steps": -5 } })).unwrap_err();
    assert!(neg.errors.iter().any(|e| e.contains("a_steps")));
    let no_bath = validate_config(&json!({ "observable": "dissipative_steady" })).unwrap_err();
    assert!(no_bath.errors.iter().any(|e| e.contains("requires a bath")));
    let bath_unitary = validate_config(&json!({ "bath": {} })).unwrap_err();
    assert!(bath_unitary.errors[0].contains("unitary_avg"));
    let neg_t = validate_config(&json!({ "bath": {}, "observable": { "kind": "dissipative_at_time", "t_over_tau": -1.0 } }));
    assert!(neg_t.is_err());
    let inf = validate_config(&json!({ "grid": { "a_max_over_omega": "inf" } }));
    assert!(inf.is_err());
}

#[test]
fn cut_reports_grid_coordinate() {
    let r = synthetic(5, 9, |a, e| 0.1 * a + 0.01 * e + 0.5);
    let c = cut_1d(&r, CutAxis::A, 1.2).unwrap();
    assert_eq!(c.selected, 1.0);
    assert_eq!(c.requested, 1.2);
    assert_eq!(c.coords, r.eps0_axis);
    assert_eq!(c.values[0], r.value(2, 0));
    let c = cut_1d(&r, CutAxis::Eps0, -2.2).unwrap();
    assert_eq!(c.selected, -2.25);
    assert_eq!(c.values.len(), 5);
    assert!(cut_1d(&r, CutAxis::A, 2.5).is_err());
    assert!(cut_1d(&r, CutAxis::Eps0, -3.5).is_err());
}

#[test]
fn cut_of_constant_grid_is_constant() {
    let r = synthetic(4, 6, |_, _| 0.37);
    let c = cut_1d(&r, CutAxis::Eps0, -2.0).unwrap();
    assert!(c.values.iter().all(|&v| v == 0.37));
}

#[test]
fn overlay_inside_region_three() {
    let w = 0.0375;
    let r = synthetic(3, 3, |_, _| 0.0);
    let (a0, a1) = (r.a_axis[0], r.a_axis[2]);
    let (e0, e1) = (r.eps0_axis[0], r.eps0_axis[2]);
    // shift the sweep so the whole rectangle sits at A > |ε₀| + margin
    let mut r = r;
    for a in &mut r.a_axis {
        *a += 5.0;
    }
    let rect = Rect { a_min: (a0 + 5.0) * w, a_max: (a1 + 5.0) * w, eps_min: e0 * w, eps_max: e1 * w };
    let regions = resonance_regions(1.0, rect).unwrap();
    let ov = emit_overlay(&regions, &r, w).unwrap();
    assert_eq!(ov.region_labels(), vec!["III"]);
    assert_eq!(ov.rect, [5.0, 6.0, -3.0, -2.5]);
}

#[test]
fn overlay_full_scale_has_six_regions() {
    let w = 0.0375;
    let mut r = synthetic(3, 3, |_, _| 0.0);
    r.a_axis = vec![0.0, 25.0, 50.0];
    r.eps0_axis = vec![-50.0, 0.0, 50.0];
    let rect = Rect { a_min: 0.0, a_max: 50.0 * w, eps_min: -50.0 * w, eps_max: 50.0 * w };
    let ov = emit_overlay(&resonance_regions(1.0, rect).unwrap(), &r, w).unwrap();
    let mut labels = ov.region_labels();
    labels.sort();
    assert_eq!(labels, vec!["I", "II", "III", "IV", "V", "VI"]);
    assert_eq!(ov.lines.len(), 6);
    for l in &ov.lines {
        for p in &l.points {
            assert!((0.0..=50.0).contains(&p[0]) && (-50.0..=50.0).contains(&p[1]));
        }
    }
}

#[test]
fn overlay_errors() {
    let w = 0.0375;
    let mut empty = synthetic(0, 0, |_, _| 0.0);
    empty.values.clear();
    let rect = Rect { a_min: 0.0, a_max: 1.0, eps_min: -1.0, eps_max: 1.0 };
    let regions = resonance_regions(1.0, rect).unwrap();
    assert!(matches!(emit_overlay(&regions, &empty, w), Err(lzs_sweep::overlay::OverlayError::EmptyGrid)));
    let r = synthetic(3, 3, |_, _| 0.0);
    assert!(matches!(emit_overlay(&regions, &r, w), Err(lzs_sweep::overlay::OverlayError::RectMismatch { .. })));
}

#[test]
fn constant_grid_plots_uniform_mid_palette() {
    let r = synthetic(10, 12, |_, _| 0.5);
    let img = plot::render(&r, Palette::Viridis).unwrap();
    let mid = Palette::Viridis.color(0.5);
    // heat-map interior, away from frame and labels
    let (x0, y0) = (70, 20);
    for dy in 0..50 {
        for dx in 0..50 {
            assert_eq!(*img.get_pixel(x0 + dx, y0 + dy), mid);
        }
    }
    let a = plot::encode_png(&img).unwrap();
    let b = plot::encode_png(&plot::render(&r, Palette::Viridis).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn single_cell_and_nan_plots() {
    let mut r = synthetic(1, 1, |_, _| f64::NAN);
    let img = plot::render(&r, Palette::Gray).unwrap();
    assert_eq!(*img.get_pixel(100, 100), plot::NAN_COLOR);
    r.values[0] = 1.0;
    let img = plot::render(&r, Palette::Gray).unwrap();
    assert_eq!(*img.get_pixel(100, 100), image::Rgb([255, 255, 255]));
}

#[test]
fn plot_io_errors_surface() {
    let r = synthetic(2, 2, |_, _| 0.2);
    let err = plot::emit_plot(&r, Palette::Viridis, std::path::Path::new("/nonexistent-dir/x.png")).unwrap_err();
    match err {
        PlotError::Io(e) => assert_eq!(e.kind(), std::io::ErrorKind::NotFound),
        other => panic!("{other}"),
    }
}

fn lzs() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lzs"));
    c.env("RUST_LOG", "error").stdout(Stdio::null());
    c
}

#[test]
fn binary_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("c.json");
    std::fs::write(&cfg_path, json!({ "grid": small_grid() }).to_string()).unwrap();
    let out = dir.path().join("out");
    let st = lzs().args(["sweep", "--config"]).arg(&cfg_path).arg("--out").arg(&out).args(["--workers", "2", "--plot"]).status().unwrap();
    assert!(st.success());
    for f in ["result.csv", "meta.json", "diagnostics.jsonl", "heatmap.png"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let meta: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["params"]["n_max"], 3);
    assert!(meta["timings"]["wall_time_s"].as_f64().unwrap() >= 0.0);

    let cut = dir.path().join("cut");
    let st = lzs().args(["trace", "--from"]).arg(&out).args(["--axis", "a", "--value", "2.1", "--out"]).arg(&cut).status().unwrap();
    assert!(st.success());
    let sel: serde_json::Value = serde_json::from_slice(&std::fs::read(cut.join("cut.json")).unwrap()).unwrap();
    assert_eq!(sel["selected"], 2.0);

    let ov = dir.path().join("ov");
    let st = lzs().args(["regions", "--config"]).arg(&cfg_path).arg("--result").arg(&out).arg("--out").arg(&ov).status().unwrap();
    assert!(st.success());

    let png = dir.path().join("g.png");
    let st = lzs().args(["plot", "--result"]).arg(&out).arg("--out").arg(&png).args(["--palette", "gray"]).status().unwrap();
    assert!(st.success());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"grid": {"a_steps": -1}, "mystery": 1}"#).unwrap();
    let o = lzs().args(["sweep", "--config"]).arg(&bad).arg("--out").arg(dir.path().join("o")).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("mystery") && err.contains("a_steps"), "{err}");

    let o = lzs().args(["trace", "--from"]).arg(dir.path()).args(["--axis", "a", "--value", "1", "--out"]).arg(dir.path().join("c")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
