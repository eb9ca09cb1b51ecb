use std::fs;

use rashomon_core::config::{validate_config, validate_config_with, validate_value, DataSource};
use rashomon_core::dataset::TargetMode;
use rashomon_core::discrepancy::ViodMode;
use serde_json::json;

fn write(v: &serde_json::Value) -> tempfile::NamedTempFile {
    let f = tempfile::NamedTempFile::new().unwrap();
    fs::write(f.path(), v.to_string()).unwrap();
    f
}

#[test]
fn defaults_are_materialised() {
    let cfg = validate_config(write(&json!({ "master_seed": 1 })).path()).unwrap();
    assert_eq!(cfg.epsilon, 0.05);
    assert_eq!(cfg.split_ratio, 0.25);
    assert_eq!(cfg.target_modes, [TargetMode::Binary, TargetMode::Multiclass]);
    assert_eq!(cfg.search.total(4), 424);
    assert_eq!(cfg.viod_mode, ViodMode::Min);
    assert!(matches!(&cfg.data, DataSource::Oulad { courses, .. } if courses.len() == 4));
}

#[test]
fn errors_name_their_fields() {
    let err = validate_value(&json!({ "master_seed": 1, "epsilon": -0.1, "epsillon": 0.05 })).unwrap_err();
    assert!(err.iter().any(|e| e.starts_with("epsilon")), "{err:?}");
    assert!(err.iter().any(|e| e.contains("epsillon")), "{err:?}");

    let err = validate_value(&json!({ "epsilon": 0.05 })).unwrap_err();
    assert!(err.iter().any(|e| e.contains("master_seed")), "{err:?}");

    let err = validate_value(&json!({ "master_seed": 1, "data": { "source": "oulad", "courses": [] } })).unwrap_err();
    assert!(err.iter().any(|e| e.contains("data.courses")), "{err:?}");
}

#[test]
fn seed_override_and_resolved_round_trip() {
    let f = write(&json!({ "master_seed": 1 }));
    let cfg = validate_config_with(f.path(), Some(77)).unwrap();
    assert_eq!(cfg.master_seed, 77);
    let again = validate_value(&serde_json::to_value(&cfg).unwrap()).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn shipped_configs_validate() {
    let root = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    for name in ["oulad.json", "synthetic_smoke.json"] {
        validate_config(&std::path::Path::new(root).join(name)).unwrap();
    }
}

#[test]
fn missing_file_is_an_error() {
    assert!(validate_config(std::path::Path::new("/nonexistent/config.json")).is_err());
}
