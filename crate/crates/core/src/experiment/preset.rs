use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::adversary::{Knowledge, Placement};
use crate::error::{Error, Result};
use crate::protocol::{FeatureSet, SamplingKind};

use super::config::{AdversaryFile, ConfigFile, FeaturesFile, PolicyFile, ScenarioConfig};
use super::output::{run_scenario, RunManifest, RunRequest};

/// The three case-study scenarios.
///
/// - `scenario-1`: blind spoofer in the legitimate plane at her own altitude,
///   elevation + Doppler checked at consecutive slots.
/// - `scenario-2`: informed spoofer aligned on the line of sight at t1 with
///   perfect Doppler pre-compensation, elevation checked at consecutive slots.
/// - `scenario-3`: as `scenario-2` with slots drawn uniformly over the window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetName {
    Scenario1,
    Scenario2,
    Scenario3,
}

impl PresetName {
    pub const ALL: [PresetName; 3] = [
        PresetName::Scenario1,
        PresetName::Scenario2,
        PresetName::Scenario3,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PresetName::Scenario1 => "scenario-1",
            PresetName::Scenario2 => "scenario-2",
            PresetName::Scenario3 => "scenario-3",
        }
    }
}

impl fmt::Display for PresetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PresetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PresetName::ALL
            .into_iter()
            .find(|p| p.as_str() == s)
            .ok_or_else(|| {
                Error::config(
                    "preset",
                    format!("unknown preset `{s}` (expected scenario-1, scenario-2 or scenario-3)"),
                )
            })
    }
}

/// Scenario file for a preset at the given spoofer altitude; every other
/// value is the documented default.
pub fn preset_file(name: PresetName, trudy_altitude: f64) -> ConfigFile {
    let informed = AdversaryFile {
        altitude_m: trudy_altitude,
        knowledge: Knowledge::Informed,
        placement: Placement::CollinearAtT1,
        doppler_precompensation: true,
        ..AdversaryFile::default()
    };
    let (adversary, features, kind) = match name {
        PresetName::Scenario1 => (
            AdversaryFile {
                altitude_m: trudy_altitude,
                ..AdversaryFile::default()
            },
            FeatureSet::AOA_DOPPLER,
            SamplingKind::FixedConsecutive,
        ),
        PresetName::Scenario2 => (
            informed,
            FeatureSet::AOA_ONLY,
            SamplingKind::FixedConsecutive,
        ),
        PresetName::Scenario3 => (informed, FeatureSet::AOA_ONLY, SamplingKind::UniformRandom),
    };
    ConfigFile {
        adversary,
        features: FeaturesFile::from(features),
        policy: PolicyFile {
            kind,
            start_slot: None,
        },
        ..ConfigFile::default()
    }
}

/// Validated preset scenario.
pub fn preset_config(name: PresetName, trudy_altitude: f64) -> Result<ScenarioConfig> {
    if !(trudy_altitude > 0.0 && trudy_altitude.is_finite()) {
        return Err(Error::config(
            "trudy_altitude",
            format!("must be positive, got {trudy_altitude}"),
        ));
    }
    preset_file(name, trudy_altitude).resolve()
}

/// Materializes a preset, runs the DEP sweep over `n_values` and writes
/// the run outputs into `out_dir`.
pub fn run_scenario_preset(
    name: PresetName,
    trudy_altitude: f64,
    n_values: &[usize],
    trials: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<RunManifest> {
    let config = preset_config(name, trudy_altitude)?;
    run_scenario(
        &config,
        &RunRequest {
            n_values,
            trials,
            seed,
            out_dir,
            preset: Some(name.as_str()),
        },
    )
}
