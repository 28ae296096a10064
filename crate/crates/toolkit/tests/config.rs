mod common;

use common::{shipped_config_path, shipped_json, write_config};
use pairsource::commands::{run, Command, Context};
use pairsource::config::TemperatureMode;
use pairsource::{load_config, ToolkitError};
use serde_json::json;

fn validation_paths(e: ToolkitError) -> Vec<String> {
    match e {
        ToolkitError::Validation { errors, .. } => errors.into_iter().map(|f| f.path).collect(),
        other => panic!("expected a validation error, got {other}"),
    }
}

#[test]
fn shipped_config_loads_without_warnings() {
    let cfg = load_config(&shipped_config_path()).unwrap();
    assert!(cfg.warnings.is_empty(), "{:?}", cfg.warnings);
    assert_eq!(cfg.temperature_mode, TemperatureMode::Degenerate);
    assert_eq!(cfg.layout.elements.len(), 4);
    assert_eq!(cfg.layout.compensator_lengths().unwrap(), (0.92, 1.04));
    assert_eq!(cfg.hash.len(), 64);
}

#[test]
fn degenerate_mode_tunes_the_crystal() {
    let cfg = load_config(&shipped_config_path()).unwrap();
    let t = cfg.crystal().temperature_c;
    let crystal = cfg.crystal();
    let dk = crystal.delta_k(405.0, 810.0).unwrap();
    assert!(dk.abs() < 1e-6, "Δk = {dk} at {t} °C");
}

#[test]
fn negative_length_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = shipped_json();
    v["layout"][1]["length_mm"] = json!(-0.5);
    let err = load_config(&write_config(dir.path(), &v)).unwrap_err();
    assert_eq!(err.exit_code(), 1);
    let text = err.to_string();
    assert!(text.contains("layout[1].length_mm"), "{text}");
    assert_eq!(validation_paths(err), vec!["layout[1].length_mm"]);
}

#[test]
fn all_errors_are_reported_together() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = shipped_json();
    v["crystal"]["length_mm"] = json!(0.0);
    v["counting"]["eta_signal"] = json!(1.5);
    v["polarization"]["hv_visibility"] = json!(-0.1);
    v["layout"][0]["ordinary"] = json!("unobtainium");
    let paths = validation_paths(load_config(&write_config(dir.path(), &v)).unwrap_err());
    for expected in [
        "crystal.length_mm",
        "counting.eta_signal",
        "polarization.hv_visibility",
        "layout[0].ordinary",
    ] {
        assert!(
            paths.iter().any(|p| p == expected),
            "{expected} missing from {paths:?}"
        );
    }
}

#[test]
fn parse_error_carries_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{\n  \"materials\": \"x\",\n  \"crystal\": ,\n}\n").unwrap();
    match load_config(&path).unwrap_err() {
        ToolkitError::Parse { line, .. } => assert_eq!(line, 3),
        other => panic!("expected a parse error, got {other}"),
    }
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = shipped_json();
    v["crystal"]["lenght_mm"] = json!(10.0);
    let err = load_config(&write_config(dir.path(), &v)).unwrap_err();
    assert!(matches!(err, ToolkitError::Parse { .. }), "{err}");
    assert!(err.to_string().contains("lenght_mm"));
}

#[test]
fn missing_config_is_an_io_error() {
    let err = load_config(std::path::Path::new("/nonexistent/source.json")).unwrap_err();
    assert!(matches!(err, ToolkitError::Io { .. }));
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn omitted_compensator_lengths_load_and_optimize_proposes_lengths() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = shipped_json();
    v["layout"][1].as_object_mut().unwrap().remove("length_mm");
    v["layout"][3].as_object_mut().unwrap().remove("length_mm");
    v["grid"]["points"] = json!(192);
    let cfg = load_config(&write_config(dir.path(), &v)).unwrap();
    assert_eq!(cfg.warnings.len(), 2, "{:?}", cfg.warnings);
    assert_eq!(cfg.layout.compensator_lengths().unwrap(), (0.0, 0.0));
    let ctx = Context::new(&cfg, dir.path().join("out")).unwrap();
    let report = run(&ctx, Command::Optimize).unwrap();
    let pre = report["pre_compensator_mm"].as_f64().unwrap();
    let post = report["post_compensator_mm"].as_f64().unwrap();
    assert!((pre - 0.78).abs() < 0.15, "{pre}");
    assert!((post - 0.97).abs() < 0.15, "{post}");
}

#[test]
fn missing_compensator_disables_optimize() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = shipped_json();
    v["layout"].as_array_mut().unwrap().remove(3);
    v["grid"]["points"] = json!(96);
    let cfg = load_config(&write_config(dir.path(), &v)).unwrap();
    assert!(
        cfg.warnings.iter().any(|w| w.contains("optimize")),
        "{:?}",
        cfg.warnings
    );
    let ctx = Context::new(&cfg, dir.path().join("out")).unwrap();
    let err = run(&ctx, Command::Optimize).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn pump_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("pump.csv"),
        "wavelength_nm,weight\n404.9,0.5\n405.0,1.0\n405.1,0.5\n",
    )
    .unwrap();
    let mut v = shipped_json();
    v["pump"] = json!({"power_mw": 2.0, "csv": "pump.csv"});
    let cfg = load_config(&write_config(dir.path(), &v)).unwrap();
    let samples = cfg.pump().samples();
    assert_eq!(samples.len(), 3);
    let total: f64 = samples.iter().map(|s| s.weight).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert_eq!(cfg.pump().total_power_mw(), 2.0);
}

#[test]
fn comb_and_csv_together_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = shipped_json();
    v["pump"]["csv"] = json!("pump.csv");
    let paths = validation_paths(load_config(&write_config(dir.path(), &v)).unwrap_err());
    assert!(paths.contains(&"pump".to_string()), "{paths:?}");
}

#[test]
fn fixed_temperature_is_used_as_given() {
    let dir = tempfile::tempdir().unwrap();
    let mut v = shipped_json();
    v["crystal"]["temperature_c"] = json!(26.0);
    let cfg = load_config(&write_config(dir.path(), &v)).unwrap();
    assert_eq!(cfg.crystal().temperature_c, 26.0);
    assert_eq!(cfg.temperature_mode, TemperatureMode::Fixed);
}
