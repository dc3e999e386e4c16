//! The coupled observables a ground verifier extracts from a satellite signal
//! and the Gaussian measurement noise applied to them.
//!
//! Doppler, RTT and received power are all functions of the slant range `r`
//! and its rate `ṙ`, so along any trajectory `dτ/dt = −2 f_D / f_c`.

use std::f64::consts::PI;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbital::{topocentric, wrap_two_pi, EcefState, GroundStation, SPEED_OF_LIGHT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Carrier frequency, Hz.
    pub carrier_hz: f64,
    /// Transmit power, W.
    pub tx_power_w: f64,
    /// Combined antenna gain (linear).
    pub gain: f64,
}

impl Default for LinkParams {
    /// S-band carrier with unit EIRP.
    fn default() -> Self {
        LinkParams {
            carrier_hz: 2.0e9,
            tx_power_w: 1.0,
            gain: 1.0,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("carrier_hz", self.carrier_hz),
            ("tx_power_w", self.tx_power_w),
            ("gain", self.gain),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::config(
                    format!("link.{name}"),
                    format!("must be strictly positive, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

/// The observable features at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub time_s: f64,
    pub doppler_hz: f64,
    pub elevation_rad: f64,
    pub azimuth_rad: f64,
    pub rsp_w: f64,
    pub rtt_s: f64,
}

/// Standard deviations of the verifier's feature estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma_elevation: f64,
    pub sigma_azimuth: f64,
    pub sigma_doppler: f64,
    pub sigma_rtt: f64,
    pub sigma_rsp_db: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            sigma_elevation: 1f64.to_radians(),
            sigma_azimuth: 1f64.to_radians(),
            sigma_doppler: 200.0,
            sigma_rtt: 100e-9,
            sigma_rsp_db: 1.0,
        }
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        NoiseModel {
            sigma_elevation: 0.0,
            sigma_azimuth: 0.0,
            sigma_doppler: 0.0,
            sigma_rtt: 0.0,
            sigma_rsp_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("sigma_elevation", self.sigma_elevation),
            ("sigma_azimuth", self.sigma_azimuth),
            ("sigma_doppler", self.sigma_doppler),
            ("sigma_rtt", self.sigma_rtt),
            ("sigma_rsp_db", self.sigma_rsp_db),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::config(
                    format!("noise.{name}"),
                    format!("must be finite and non-negative, got {value}"),
                ));
            }
        }
        Ok(())
    }
}

/// A noisy feature estimate together with the seed of the stream that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub features: FeatureVector,
    pub source_seed: u64,
}

/// Seeded random stream used for all measurement noise. The seed travels
/// with every [`Measurement`] drawn from it.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl NoiseStream {
    pub fn from_seed(seed: u64) -> Self {
        NoiseStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }
}

impl RngCore for NoiseStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// f_D = −(f_c / c)·ṙ: positive while the transmitter approaches.
pub fn doppler(range_rate: f64, carrier_hz: f64) -> f64 {
    -(carrier_hz / SPEED_OF_LIGHT) * range_rate
}

/// τ = 2r / c.
pub fn rtt(slant_range: f64) -> f64 {
    2.0 * slant_range / SPEED_OF_LIGHT
}

/// Friis free-space received power P_t·G·c² / (4π f_c r)².
pub fn rsp(slant_range: f64, link: &LinkParams) -> f64 {
    let denom = 4.0 * PI * link.carrier_hz * slant_range;
    link.tx_power_w * link.gain * SPEED_OF_LIGHT * SPEED_OF_LIGHT / (denom * denom)
}

pub fn feature_vector(
    sat: &EcefState,
    gs: &GroundStation,
    link: &LinkParams,
) -> Result<FeatureVector> {
    let obs = topocentric(sat, gs)?;
    Ok(FeatureVector {
        time_s: obs.time,
        doppler_hz: doppler(obs.range_rate, link.carrier_hz),
        elevation_rad: obs.elevation,
        azimuth_rad: obs.azimuth,
        rsp_w: rsp(obs.range, link),
        rtt_s: rtt(obs.range),
    })
}

/// Perturbs every feature with an independent zero-mean Gaussian draw.
///
/// Draw order is fixed (elevation, azimuth, Doppler, RTT, RSP) so that the
/// same stream state always yields the same measurement. Received power is
/// perturbed in dB, which keeps it positive.
pub fn add_noise(fv: &FeatureVector, noise: &NoiseModel, rng: &mut NoiseStream) -> Measurement {
    let z_elevation = rng.standard_normal();
    let z_azimuth = rng.standard_normal();
    let z_doppler = rng.standard_normal();
    let z_rtt = rng.standard_normal();
    let z_rsp = rng.standard_normal();

    let features = FeatureVector {
        time_s: fv.time_s,
        elevation_rad: fv.elevation_rad + noise.sigma_elevation * z_elevation,
        azimuth_rad: wrap_two_pi(fv.azimuth_rad + noise.sigma_azimuth * z_azimuth),
        doppler_hz: fv.doppler_hz + noise.sigma_doppler * z_doppler,
        rtt_s: fv.rtt_s + noise.sigma_rtt * z_rtt,
        rsp_w: fv.rsp_w * 10f64.powf(noise.sigma_rsp_db * z_rsp / 10.0),
    };
    Measurement {
        features,
        source_seed: rng.seed(),
    }
}
