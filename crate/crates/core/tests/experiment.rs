//! Scenario files, presets and run outputs.

use std::fs;
use std::path::{Path, PathBuf};

use orbitauth::ccm::Ccm;
use orbitauth::experiment::{
    emit_trajectory, load_config, preset_config, run_scenario, run_scenario_preset, ConfigFile,
    PresetName, RunManifest, RunRequest,
};
use serde_json::Value;

fn golden_path(name: PresetName, km: u32) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(format!("{name}-{km}km.json"))
}

/// Structural equality with a relative tolerance on numbers, so that the
/// golden files do not depend on the last bit of libm.
fn assert_close(actual: &Value, expected: &Value, path: &str) {
    match (actual, expected) {
        (Value::Number(a), Value::Number(e)) => {
            let (a, e) = (a.as_f64().unwrap(), e.as_f64().unwrap());
            assert!(
                (a - e).abs() <= 1e-9 * e.abs().max(1.0),
                "{path}: {a} vs {e}"
            );
        }
        (Value::Object(a), Value::Object(e)) => {
            let mut keys: Vec<_> = a.keys().collect();
            keys.sort();
            let mut expected_keys: Vec<_> = e.keys().collect();
            expected_keys.sort();
            assert_eq!(keys, expected_keys, "{path}");
            for k in a.keys() {
                assert_close(&a[k], &e[k], &format!("{path}.{k}"));
            }
        }
        _ => assert_eq!(actual, expected, "{path}"),
    }
}

#[test]
fn presets_match_golden_files() {
    let update = std::env::var_os("UPDATE_GOLDEN").is_some();
    for name in PresetName::ALL {
        for km in [500, 1200] {
            let json = preset_config(name, km as f64 * 1e3)
                .unwrap()
                .to_json()
                .unwrap();
            let path = golden_path(name, km);
            if update {
                fs::create_dir_all(path.parent().unwrap()).unwrap();
                fs::write(&path, &json).unwrap();
            }
            let golden: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
            assert_close(
                &serde_json::from_str(&json).unwrap(),
                &golden,
                &format!("{name}-{km}km"),
            );
        }
    }
}

#[test]
fn golden_files_load_as_scenarios() {
    let path = golden_path(PresetName::Scenario2, 1200);
    let loaded = load_config(&path).unwrap();
    let preset = preset_config(PresetName::Scenario2, 1200e3).unwrap();
    assert_eq!(loaded.policy, preset.policy);
    assert_eq!(loaded.features, preset.features);
    assert!((loaded.adversary.alignment_time - preset.adversary.alignment_time).abs() < 1e-9);
    assert!((loaded.window.start - preset.window.start).abs() < 1e-6);
}

#[test]
fn minimal_file_uses_documented_defaults() {
    let minimal: ConfigFile = ConfigFile::from_json("{}").unwrap();
    assert_eq!(minimal, ConfigFile::default());
    let resolved = minimal.resolve().unwrap();
    assert!((resolved.alice.altitude() - 600e3).abs() < 1e-6);
    assert!((resolved.adversary.altitude - 1200e3).abs() < 1e-6);
    assert!(resolved.window.contains(resolved.adversary.alignment_time));
}

#[test]
fn schema_errors_are_configuration_errors() {
    for text in [
        r#"{"alice": {"altitude_km": 600}}"#,
        r#"{"slot_duration_s": -1}"#,
        r#"{"noise": {"sigma_elevation_deg": 0}, "features": {"elevation": true}}"#,
        r#"{"adversary": {"alignment_time_s": 1e7}}"#,
        r#"{"alice": {"raan_deg": 10}}"#,
        "not json",
    ] {
        let err = ConfigFile::from_json(text)
            .and_then(|f| f.resolve())
            .unwrap_err();
        assert!(err.is_config_error(), "{text}: {err}");
    }
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn collinear_trajectory_meets_alice_at_t1() {
    let config = preset_config(PresetName::Scenario2, 1200e3).unwrap();
    let scenario = config.materialize().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trajectory.csv");
    emit_trajectory(&scenario.ccm, &scenario.adversary, &out).unwrap();
    let rows = read_csv(&out);
    assert_eq!(rows.len(), scenario.ccm.len());
    assert_eq!(rows[0][0], config.window.start);
    let t1 = scenario
        .ccm
        .slot_at(config.adversary.alignment_time)
        .unwrap();
    assert!((rows[t1][1] - rows[t1][2]).abs() < 1e-9);
    // kinematic Doppler is reported, so the higher spoofer is visibly slower
    assert!((rows[t1][3] - rows[t1][4]).abs() > 200.0);
    // and farther away over the fixed challenge that starts at t1
    assert!(rows[t1..t1 + 50].iter().all(|r| r[6] > r[5]));
}

#[test]
fn blind_trajectory_is_far_from_alice() {
    let scenario = preset_config(PresetName::Scenario1, 1200e3)
        .unwrap()
        .materialize()
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trajectory.csv");
    emit_trajectory(&scenario.ccm, &scenario.adversary, &out).unwrap();
    let rows = read_csv(&out);
    let sigma = scenario.noise.sigma_elevation;
    let far = rows.iter().filter(|r| (r[1] - r[2]).abs() > sigma).count();
    assert!(far * 2 > rows.len(), "{far} of {}", rows.len());
}

fn read_all(dir: &Path, skip: &str) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.file_name().unwrap() != skip)
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn run_outputs_are_complete_and_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let n = [1, 3];
    let manifest = run_scenario_preset(PresetName::Scenario1, 900e3, &n, 200, 5, a.path()).unwrap();
    run_scenario_preset(PresetName::Scenario1, 900e3, &n, 200, 5, b.path()).unwrap();

    let expected = [
        "config.json",
        "trajectory.csv",
        "dep_1.csv",
        "dep_3.csv",
        "summary.csv",
    ];
    assert_eq!(manifest.outputs.len(), expected.len());
    for (path, name) in manifest.outputs.iter().zip(expected) {
        assert_eq!(path.file_name().unwrap(), name);
        assert!(fs::metadata(path).unwrap().len() > 0);
    }
    let on_disk: RunManifest =
        serde_json::from_str(&fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(on_disk, manifest);
    assert_eq!(manifest.preset.as_deref(), Some("scenario-1"));
    assert_eq!(manifest.config_hash.len(), 64);
    assert_eq!(
        read_all(a.path(), "manifest.json"),
        read_all(b.path(), "manifest.json")
    );

    let summary = fs::read_to_string(a.path().join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next(), Some("n,min_dep"));
    assert_eq!(summary.lines().count(), 3);
    let dep = fs::read_to_string(a.path().join("dep_3.csv")).unwrap();
    assert_eq!(dep.lines().next(), Some("n,threshold,p_fa,p_md"));
    assert!(dep.lines().skip(1).all(|l| l.starts_with("3,")));
}

#[test]
fn saved_config_reproduces_the_run() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = run_scenario_preset(PresetName::Scenario3, 1200e3, &[2], 150, 9, a.path()).unwrap();
    let reloaded = load_config(&a.path().join("config.json")).unwrap();
    let request = RunRequest {
        n_values: &[2],
        trials: 150,
        seed: 9,
        out_dir: b.path(),
        preset: None,
    };
    let second = run_scenario(&reloaded, &request).unwrap();
    assert_eq!(first.config_hash, second.config_hash);
    assert_eq!(first.min_dep, second.min_dep);
    assert_eq!(
        read_all(a.path(), "manifest.json"),
        read_all(b.path(), "manifest.json")
    );
}

#[test]
fn ccm_file_round_trip() {
    let scenario = preset_config(PresetName::Scenario1, 1200e3)
        .unwrap()
        .materialize()
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ccm.json");
    scenario.ccm.write_json(&path).unwrap();
    let back = Ccm::read_json(&path).unwrap();
    assert_eq!(back.reference(), scenario.ccm.reference());
    assert_eq!(back.slot_times(), scenario.ccm.slot_times());
    assert!(Ccm::read_json(&dir.path().join("missing.json")).is_err());
}
