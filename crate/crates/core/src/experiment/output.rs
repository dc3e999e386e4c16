use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::adversary::AdversaryState;
use crate::ccm::Ccm;
use crate::error::{Error, Result};
use crate::observables::feature_vector;
use crate::orbital::{eci_to_ecef, propagate, topocentric};
use crate::protocol::{dep_versus_n, DepResult};

use super::config::ScenarioConfig;

/// Seventeen significant digits in scientific notation, independent of locale.
pub fn format_float(value: f64) -> String {
    format!("{value:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Writes the legitimate and spoofer trajectories over the CCM grid.
///
/// The spoofer's Doppler column is her kinematic Doppler, before any
/// pre-compensation, so the file shows the physical mismatch.
pub fn emit_trajectory(ccm: &Ccm, trudy: &AdversaryState, out: &Path) -> Result<()> {
    let mut csv = String::from(
        "time_s,alice_elevation_rad,trudy_elevation_rad,alice_doppler_hz,trudy_doppler_hz,alice_rtt_s,trudy_rtt_s\n",
    );
    for alice in ccm.reference() {
        let ecef = eci_to_ecef(&propagate(&trudy.elements, alice.time_s)?);
        let spoofer = feature_vector(&ecef, ccm.station(), ccm.link())?;
        let fields = [
            alice.time_s,
            alice.elevation_rad,
            spoofer.elevation_rad,
            alice.doppler_hz,
            spoofer.doppler_hz,
            alice.rtt_s,
            spoofer.rtt_s,
        ];
        let row: Vec<String> = fields.iter().map(|&v| format_float(v)).collect();
        writeln!(csv, "{}", row.join(",")).expect("writing to a String cannot fail");
    }
    write_file(out, &csv)
}

/// Legitimate ECI state and topocentric geometry at every slot of the
/// scenario's visibility window, as CSV text.
pub fn propagation_csv(config: &ScenarioConfig) -> Result<String> {
    let mut csv = String::from(
        "time_s,x_eci_m,y_eci_m,z_eci_m,vx_eci_mps,vy_eci_mps,vz_eci_mps,range_m,range_rate_mps,elevation_rad,azimuth_rad\n",
    );
    let slots = (config.window.duration() / config.slot_duration).floor() as usize + 1;
    for k in 0..slots {
        let t = config.window.start + k as f64 * config.slot_duration;
        let eci = propagate(&config.alice, t)?;
        let obs = topocentric(&eci_to_ecef(&eci), &config.station)?;
        let fields = [
            t,
            eci.position.x,
            eci.position.y,
            eci.position.z,
            eci.velocity.x,
            eci.velocity.y,
            eci.velocity.z,
            obs.range,
            obs.range_rate,
            obs.elevation,
            obs.azimuth,
        ];
        let row: Vec<String> = fields.iter().map(|&v| format_float(v)).collect();
        writeln!(csv, "{}", row.join(",")).expect("writing to a String cannot fail");
    }
    Ok(csv)
}

/// `n,threshold,p_fa,p_md` for one challenge size.
pub fn write_dep_csv(result: &DepResult, out: &Path) -> Result<()> {
    let mut csv = String::from("n,threshold,p_fa,p_md\n");
    for ((threshold, fa), md) in result.thresholds.iter().zip(&result.p_fa).zip(&result.p_md) {
        writeln!(
            csv,
            "{},{},{},{}",
            result.n_challenges,
            format_float(*threshold),
            format_float(*fa),
            format_float(*md)
        )
        .expect("writing to a String cannot fail");
    }
    write_file(out, &csv)
}

/// `n,min_dep` with one row per challenge size.
pub fn write_summary_csv(results: &[DepResult], out: &Path) -> Result<()> {
    let mut csv = String::from("n,min_dep\n");
    for result in results {
        writeln!(
            csv,
            "{},{}",
            result.n_challenges,
            format_float(result.min_dep)
        )
        .expect("writing to a String cannot fail");
    }
    write_file(out, &csv)
}

/// Record of one run. Every file the run wrote is listed in `outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    /// SHA-256 of the serialized scenario (`config.json`).
    pub config_hash: String,
    pub master_seed: u64,
    pub tool_version: String,
    pub started_at: String,
    pub finished_at: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub trials: usize,
    pub n_values: Vec<usize>,
    pub min_dep: Vec<f64>,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RunRequest<'a> {
    pub n_values: &'a [usize],
    pub trials: usize,
    pub seed: u64,
    pub out_dir: &'a Path,
    pub preset: Option<&'a str>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").expect("writing to a String cannot fail");
            s
        })
}

/// Runs the Monte Carlo sweep for a scenario and writes `config.json`,
/// `trajectory.csv`, `dep_<N>.csv`, `summary.csv` and `manifest.json` into
/// `out_dir`.
pub fn run_scenario(config: &ScenarioConfig, request: &RunRequest<'_>) -> Result<RunManifest> {
    let started_at = chrono::Utc::now().to_rfc3339();
    let out_dir = request.out_dir;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let scenario = config.materialize()?;
    let results = dep_versus_n(&scenario, request.n_values, request.trials, request.seed)?;

    let mut outputs = Vec::new();
    let config_json = config.to_json()?;
    let config_path = out_dir.join("config.json");
    write_file(&config_path, &config_json)?;
    outputs.push(config_path);

    let trajectory_path = out_dir.join("trajectory.csv");
    emit_trajectory(&scenario.ccm, &scenario.adversary, &trajectory_path)?;
    outputs.push(trajectory_path);

    for result in &results {
        let path = out_dir.join(format!("dep_{}.csv", result.n_challenges));
        write_dep_csv(result, &path)?;
        outputs.push(path);
    }
    let summary_path = out_dir.join("summary.csv");
    write_summary_csv(&results, &summary_path)?;
    outputs.push(summary_path);

    let manifest = RunManifest {
        config_hash: sha256_hex(config_json.as_bytes()),
        master_seed: request.seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        started_at,
        finished_at: chrono::Utc::now().to_rfc3339(),
        preset: request.preset.map(str::to_string),
        trials: request.trials,
        n_values: request.n_values.to_vec(),
        min_dep: results.iter().map(|r| r.min_dep).collect(),
        outputs,
    };
    let manifest_path = out_dir.join("manifest.json");
    write_file(&manifest_path, &serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_have_seventeen_significant_digits() {
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        assert_eq!(format_float(-0.1), "-1.0000000000000001e-1");
        let x = 12345.678901234567_f64;
        assert_eq!(format_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn sha256_matches_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
