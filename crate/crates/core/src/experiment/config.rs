//! Scenario configuration: the JSON file schema (degrees, optional keys with
//! documented defaults) and the validated in-memory form (radians).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adversary::{AdversaryConfig, AdversaryState, Knowledge, Placement};
use crate::ccm::{build_ccm, visibility_window, VisibilityWindow};
use crate::error::{Error, Result};
use crate::observables::{LinkParams, NoiseModel};
use crate::orbital::{zenith_pass_orientation, GroundStation, KeplerianElements, EARTH_RADIUS};
use crate::protocol::{FeatureSet, SamplingKind, SamplingPolicy, Scenario};

/// How far past the epoch the first visibility window is searched for, s.
pub const WINDOW_SEARCH_SPAN_S: f64 = 86_400.0;
/// Default culmination time of the legitimate pass, relative to its epoch, s.
pub const DEFAULT_PASS_PEAK_OFFSET_S: f64 = 600.0;
/// Default alignment instant as a fraction of the visibility window.
pub const DEFAULT_ALIGNMENT_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AliceFile {
    pub altitude_m: f64,
    pub eccentricity: f64,
    pub inclination_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub raan_deg: Option<f64>,
    pub arg_perigee_deg: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub true_anomaly_deg: Option<f64>,
    pub epoch_s: f64,
    /// Used only when `raan_deg` and `true_anomaly_deg` are omitted.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass_peak_time_s: Option<f64>,
}

impl Default for AliceFile {
    fn default() -> Self {
        AliceFile {
            altitude_m: 600e3,
            eccentricity: 0.0,
            inclination_deg: 53.0,
            raan_deg: None,
            arg_perigee_deg: 0.0,
            true_anomaly_deg: None,
            epoch_s: 0.0,
            pass_peak_time_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StationFile {
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    pub altitude_m: f64,
}

impl Default for StationFile {
    fn default() -> Self {
        StationFile {
            latitude_deg: 35.0,
            longitude_deg: 129.0,
            altitude_m: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkFile {
    pub carrier_hz: f64,
    pub tx_power_w: f64,
    pub gain: f64,
}

impl Default for LinkFile {
    fn default() -> Self {
        let link = LinkParams::default();
        LinkFile {
            carrier_hz: link.carrier_hz,
            tx_power_w: link.tx_power_w,
            gain: link.gain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseFile {
    pub sigma_elevation_deg: f64,
    pub sigma_azimuth_deg: f64,
    pub sigma_doppler_hz: f64,
    pub sigma_rtt_s: f64,
    pub sigma_rsp_db: f64,
}

impl Default for NoiseFile {
    fn default() -> Self {
        NoiseFile {
            sigma_elevation_deg: 1.0,
            sigma_azimuth_deg: 1.0,
            sigma_doppler_hz: 200.0,
            sigma_rtt_s: 100e-9,
            sigma_rsp_db: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdversaryFile {
    pub altitude_m: f64,
    pub knowledge: Knowledge,
    pub placement: Placement,
    pub doppler_precompensation: bool,
    /// Defaults to the slot 30% of the way through the visibility window.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alignment_time_s: Option<f64>,
    pub along_track_offset_deg: f64,
}

impl Default for AdversaryFile {
    fn default() -> Self {
        AdversaryFile {
            altitude_m: 1200e3,
            knowledge: Knowledge::Blind,
            placement: Placement::CoplanarOffset,
            doppler_precompensation: false,
            alignment_time_s: None,
            along_track_offset_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeaturesFile {
    pub doppler: bool,
    pub elevation: bool,
    pub azimuth: bool,
    pub rsp: bool,
    pub rtt: bool,
}

impl Default for FeaturesFile {
    fn default() -> Self {
        FeaturesFile::from(FeatureSet::AOA_DOPPLER)
    }
}

impl From<FeatureSet> for FeaturesFile {
    fn from(f: FeatureSet) -> Self {
        FeaturesFile {
            doppler: f.use_doppler,
            elevation: f.use_elevation,
            azimuth: f.use_azimuth,
            rsp: f.use_rsp,
            rtt: f.use_rtt,
        }
    }
}

impl From<&FeaturesFile> for FeatureSet {
    fn from(f: &FeaturesFile) -> Self {
        FeatureSet {
            use_doppler: f.doppler,
            use_elevation: f.elevation,
            use_azimuth: f.azimuth,
            use_rsp: f.rsp,
            use_rtt: f.rtt,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicyFile {
    pub kind: SamplingKind,
    /// Defaults to the slot of the alignment time.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub start_slot: Option<usize>,
}

impl Default for PolicyFile {
    fn default() -> Self {
        PolicyFile {
            kind: SamplingKind::FixedConsecutive,
            start_slot: None,
        }
    }
}

/// The scenario document exactly as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub alice: AliceFile,
    pub station: StationFile,
    pub link: LinkFile,
    pub noise: NoiseFile,
    pub adversary: AdversaryFile,
    pub features: FeaturesFile,
    pub policy: PolicyFile,
    pub slot_duration_s: f64,
    pub mask_elevation_deg: f64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        ConfigFile {
            alice: AliceFile::default(),
            station: StationFile::default(),
            link: LinkFile::default(),
            noise: NoiseFile::default(),
            adversary: AdversaryFile::default(),
            features: FeaturesFile::default(),
            policy: PolicyFile::default(),
            slot_duration_s: 1.0,
            mask_elevation_deg: 10.0,
        }
    }
}

/// A validated scenario in internal units.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub alice: KeplerianElements,
    pub station: GroundStation,
    pub link: LinkParams,
    pub noise: NoiseModel,
    pub adversary: AdversaryConfig,
    pub features: FeatureSet,
    pub policy: SamplingPolicy,
    pub slot_duration: f64,
    pub mask_elevation: f64,
    /// First visibility window after the legitimate epoch (derived).
    pub window: VisibilityWindow,
}

fn field_error(field: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Config { .. } => e,
        other => Error::config(field, other.to_string()),
    }
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<ConfigFile> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Converts to internal units, fills derived defaults and cross-validates.
    pub fn resolve(&self) -> Result<ScenarioConfig> {
        let station = GroundStation::new(
            self.station.latitude_deg.to_radians(),
            self.station.longitude_deg.to_radians(),
            self.station.altitude_m,
        )
        .map_err(field_error("station"))?;

        let alice = self.resolve_alice(&station)?;

        let link = LinkParams {
            carrier_hz: self.link.carrier_hz,
            tx_power_w: self.link.tx_power_w,
            gain: self.link.gain,
        };
        link.validate()?;

        let noise = NoiseModel {
            sigma_elevation: self.noise.sigma_elevation_deg.to_radians(),
            sigma_azimuth: self.noise.sigma_azimuth_deg.to_radians(),
            sigma_doppler: self.noise.sigma_doppler_hz,
            sigma_rtt: self.noise.sigma_rtt_s,
            sigma_rsp_db: self.noise.sigma_rsp_db,
        };
        noise.validate()?;

        let features = FeatureSet::from(&self.features);
        features.validate(&noise)?;

        if !(self.slot_duration_s > 0.0 && self.slot_duration_s.is_finite()) {
            return Err(Error::config("slot_duration_s", "must be positive"));
        }
        let mask_elevation = self.mask_elevation_deg.to_radians();
        if !(0.0..90.0).contains(&self.mask_elevation_deg) {
            return Err(Error::config("mask_elevation_deg", "must lie in [0, 90)"));
        }

        let window = visibility_window(
            &alice,
            &station,
            alice.epoch,
            alice.epoch + WINDOW_SEARCH_SPAN_S,
            mask_elevation,
        )?
        .into_iter()
        .next()
        .ok_or_else(|| {
            Error::config(
                "alice",
                "the satellite never rises above the mask within a day of its epoch",
            )
        })?;
        if window.duration() < self.slot_duration_s {
            return Err(Error::config(
                "slot_duration_s",
                format!(
                    "longer than the {:.3} s visibility window",
                    window.duration()
                ),
            ));
        }
        let slots = (window.duration() / self.slot_duration_s).floor() as usize + 1;

        let alignment_time = match self.adversary.alignment_time_s {
            Some(t) => t,
            None => {
                let slot = (DEFAULT_ALIGNMENT_FRACTION * (slots - 1) as f64).round();
                window.start + slot * self.slot_duration_s
            }
        };
        if !window.contains(alignment_time) {
            return Err(Error::config(
                "adversary.alignment_time_s",
                format!(
                    "{alignment_time} s lies outside the visibility window [{}, {}]",
                    window.start, window.end
                ),
            ));
        }
        let adversary = AdversaryConfig {
            altitude: self.adversary.altitude_m,
            knowledge: self.adversary.knowledge,
            placement: self.adversary.placement,
            doppler_precompensation: self.adversary.doppler_precompensation,
            alignment_time,
            along_track_offset: self.adversary.along_track_offset_deg.to_radians(),
        };
        adversary.validate()?;

        let start_slot = match self.policy.start_slot {
            Some(slot) => slot,
            None => ((alignment_time - window.start) / self.slot_duration_s).round() as usize,
        };
        if start_slot >= slots {
            return Err(Error::config(
                "policy.start_slot",
                format!("slot {start_slot} is outside the grid of {slots} slots"),
            ));
        }
        let policy = SamplingPolicy {
            kind: self.policy.kind,
            start_slot,
        };

        Ok(ScenarioConfig {
            alice,
            station,
            link,
            noise,
            adversary,
            features,
            policy,
            slot_duration: self.slot_duration_s,
            mask_elevation,
            window,
        })
    }

    fn resolve_alice(&self, station: &GroundStation) -> Result<KeplerianElements> {
        let file = &self.alice;
        if !(file.altitude_m > 0.0) {
            return Err(Error::config("alice.altitude_m", "must be positive"));
        }
        let inclination = file.inclination_deg.to_radians();
        let (raan, nu0) = match (file.raan_deg, file.true_anomaly_deg) {
            (Some(raan), Some(nu)) => (raan.to_radians(), nu.to_radians()),
            (None, None) => {
                let peak = file
                    .pass_peak_time_s
                    .unwrap_or(file.epoch_s + DEFAULT_PASS_PEAK_OFFSET_S);
                zenith_pass_orientation(file.altitude_m, inclination, station, peak, file.epoch_s)
                    .map_err(field_error("alice.inclination_deg"))?
            }
            (Some(_), None) => {
                return Err(Error::config(
                    "alice.true_anomaly_deg",
                    "must be given together with raan_deg",
                ))
            }
            (None, Some(_)) => {
                return Err(Error::config(
                    "alice.raan_deg",
                    "must be given together with true_anomaly_deg",
                ))
            }
        };
        KeplerianElements::new(
            EARTH_RADIUS + file.altitude_m,
            file.eccentricity,
            inclination,
            raan,
            file.arg_perigee_deg.to_radians(),
            nu0,
            file.epoch_s,
        )
        .map_err(field_error("alice"))
    }
}

impl ScenarioConfig {
    /// Fully explicit file form of this scenario (every derived value written out).
    pub fn to_file(&self) -> ConfigFile {
        ConfigFile {
            alice: AliceFile {
                altitude_m: self.alice.altitude(),
                eccentricity: self.alice.e,
                inclination_deg: self.alice.i.to_degrees(),
                raan_deg: Some(self.alice.raan.to_degrees()),
                arg_perigee_deg: self.alice.argp.to_degrees(),
                true_anomaly_deg: Some(self.alice.nu0.to_degrees()),
                epoch_s: self.alice.epoch,
                pass_peak_time_s: None,
            },
            station: StationFile {
                latitude_deg: self.station.latitude.to_degrees(),
                longitude_deg: self.station.longitude.to_degrees(),
                altitude_m: self.station.altitude,
            },
            link: LinkFile {
                carrier_hz: self.link.carrier_hz,
                tx_power_w: self.link.tx_power_w,
                gain: self.link.gain,
            },
            noise: NoiseFile {
                sigma_elevation_deg: self.noise.sigma_elevation.to_degrees(),
                sigma_azimuth_deg: self.noise.sigma_azimuth.to_degrees(),
                sigma_doppler_hz: self.noise.sigma_doppler,
                sigma_rtt_s: self.noise.sigma_rtt,
                sigma_rsp_db: self.noise.sigma_rsp_db,
            },
            adversary: AdversaryFile {
                altitude_m: self.adversary.altitude,
                knowledge: self.adversary.knowledge,
                placement: self.adversary.placement,
                doppler_precompensation: self.adversary.doppler_precompensation,
                alignment_time_s: Some(self.adversary.alignment_time),
                along_track_offset_deg: self.adversary.along_track_offset.to_degrees(),
            },
            features: FeaturesFile::from(self.features),
            policy: PolicyFile {
                kind: self.policy.kind,
                start_slot: Some(self.policy.start_slot),
            },
            slot_duration_s: self.slot_duration,
            mask_elevation_deg: self.mask_elevation.to_degrees(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        self.to_file().to_json()
    }

    /// Builds the CCM and spoofer orbit and returns the runnable scenario.
    pub fn materialize(&self) -> Result<Scenario> {
        let ccm = build_ccm(
            &self.alice,
            &self.station,
            &self.window,
            self.slot_duration,
            &self.link,
        )?;
        let adversary = AdversaryState::from_config(self.adversary, &self.alice, &self.station)?;
        Scenario::new(ccm, adversary, self.noise, self.features, self.policy)
    }
}

/// Reads, parses and validates a scenario file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ConfigFile::from_json(&text)?.resolve()
}
