//! Spoofer ("Trudy") orbits and the signals she returns to a challenge.
//!
//! Two placements are modelled. A blind spoofer shadows the legitimate
//! orbital plane at her own altitude ([`construct_coplanar_offset_orbit`]).
//! An informed spoofer puts herself on the station→satellite ray at the
//! alignment instant so both angles of arrival match there
//! ([`construct_collinear_orbit`]), then flies ballistically.

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::ccm::{lookup, Ccm};
use crate::error::{Error, Result};
use crate::observables::{
    add_noise, feature_vector, FeatureVector, Measurement, NoiseModel, NoiseStream,
};
use crate::orbital::{
    circular_speed, ecef_to_eci_position, eci_to_ecef, ground_station_ecef, observe, propagate,
    wrap_two_pi, GroundStation, KeplerianElements, EARTH_RADIUS,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knowledge {
    Blind,
    Informed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Placement {
    CoplanarOffset,
    CollinearAtT1,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversaryConfig {
    /// Altitude of the spoofer's circular orbit, m.
    pub altitude: f64,
    pub knowledge: Knowledge,
    pub placement: Placement,
    pub doppler_precompensation: bool,
    /// Instant t1 at which a collinear spoofer is aligned, s.
    pub alignment_time: f64,
    /// Along-track lead of a coplanar spoofer relative to the legitimate satellite, rad.
    pub along_track_offset: f64,
}

impl AdversaryConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude > 0.0 && self.altitude.is_finite()) {
            return Err(Error::config(
                "adversary.altitude_m",
                format!("must be positive, got {}", self.altitude),
            ));
        }
        if self.doppler_precompensation && self.knowledge != Knowledge::Informed {
            return Err(Error::config(
                "adversary.doppler_precompensation",
                "Doppler pre-compensation requires knowledge = informed",
            ));
        }
        if !self.alignment_time.is_finite() {
            return Err(Error::config("adversary.alignment_time", "must be finite"));
        }
        if !self.along_track_offset.is_finite() {
            return Err(Error::config(
                "adversary.along_track_offset_deg",
                "must be finite",
            ));
        }
        Ok(())
    }
}

/// The spoofer's realised orbit together with the behaviour that produced it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdversaryState {
    pub elements: KeplerianElements,
    pub config: AdversaryConfig,
}

impl AdversaryState {
    /// Builds the spoofer orbit the configured placement implies.
    pub fn from_config(
        config: AdversaryConfig,
        alice: &KeplerianElements,
        gs: &GroundStation,
    ) -> Result<Self> {
        config.validate()?;
        let elements = match config.placement {
            Placement::CoplanarOffset => {
                construct_coplanar_offset_orbit(alice, config.altitude, config.along_track_offset)?
            }
            Placement::CollinearAtT1 => {
                construct_collinear_orbit(alice, gs, config.alignment_time, config.altitude)?
            }
        };
        Ok(AdversaryState { elements, config })
    }
}

/// Circular elements through ECI position `position` with velocity along
/// `velocity` (which must be perpendicular to `position`), at epoch `t`.
fn circular_elements_from_state(
    position: &Vector3<f64>,
    velocity: &Vector3<f64>,
    t: f64,
) -> Result<KeplerianElements> {
    let radius = position.norm();
    let h = position.cross(velocity);
    let h_norm = h.norm();
    if !(h_norm > 0.0) {
        return Err(Error::Geometry(
            "velocity is parallel to the radius vector".into(),
        ));
    }
    let inclination = (h.z / h_norm).clamp(-1.0, 1.0).acos();
    let node = Vector3::z().cross(&h);
    let (raan, arg_lat) = if node.norm() < 1e-9 * h_norm {
        // equatorial: measure from the x axis in the direction of motion
        let angle = position.y.atan2(position.x);
        (0.0, if h.z >= 0.0 { angle } else { -angle })
    } else {
        let node_hat = node.normalize();
        let in_plane = h.normalize().cross(&node_hat);
        (
            node.y.atan2(node.x),
            position.dot(&in_plane).atan2(position.dot(&node_hat)),
        )
    };
    KeplerianElements::new(
        radius,
        0.0,
        inclination,
        wrap_two_pi(raan),
        0.0,
        wrap_two_pi(arg_lat),
        t,
    )
}

/// Circular orbit at `EARTH_RADIUS + trudy_altitude` whose position at `t1`
/// lies on the ray from `gs` through the legitimate satellite.
///
/// The velocity at `t1` is the legitimate velocity projected onto the
/// spoofer's local horizontal and rescaled to circular speed, so the
/// trajectory mimics the legitimate one as closely as a circular orbit can.
pub fn construct_collinear_orbit(
    alice: &KeplerianElements,
    gs: &GroundStation,
    t1: f64,
    trudy_altitude: f64,
) -> Result<KeplerianElements> {
    let seen = observe(alice, gs, t1)?;
    if seen.elevation < 0.0 {
        return Err(Error::Geometry(format!(
            "legitimate satellite is below the horizon at t1 = {t1} s"
        )));
    }
    let alice_state = propagate(alice, t1)?;
    let station = ecef_to_eci_position(&ground_station_ecef(gs), t1);
    let ray = (alice_state.position - station).normalize();

    // |station + s·ray| = target radius, take the forward root
    let target_radius = EARTH_RADIUS + trudy_altitude;
    let b = station.dot(&ray);
    let c = station.norm_squared() - target_radius * target_radius;
    let discriminant = b * b - c;
    if discriminant < 0.0 {
        return Err(Error::Geometry(format!(
            "the line of sight never reaches radius {target_radius:.1} m"
        )));
    }
    let s = -b + discriminant.sqrt();
    if !(s > 0.0) {
        return Err(Error::Geometry(format!(
            "radius {target_radius:.1} m lies behind the station along the line of sight"
        )));
    }
    let position = station + ray * s;

    let radial = position.normalize();
    let horizontal = alice_state.velocity - radial * alice_state.velocity.dot(&radial);
    if horizontal.norm() < 1e-9 {
        return Err(Error::Geometry(
            "legitimate velocity is purely radial".into(),
        ));
    }
    let velocity = horizontal.normalize() * circular_speed(target_radius)?;
    circular_elements_from_state(&position, &velocity, t1)
}

/// Circular orbit sharing the legitimate orbital plane at a different altitude.
pub fn construct_coplanar_offset_orbit(
    alice: &KeplerianElements,
    trudy_altitude: f64,
    along_track_offset: f64,
) -> Result<KeplerianElements> {
    KeplerianElements::new(
        EARTH_RADIUS + trudy_altitude,
        0.0,
        alice.i,
        alice.raan,
        alice.argp,
        alice.nu0 + along_track_offset,
        alice.epoch,
    )
}

/// Features the spoofer presents at `slot_index` before measurement noise.
///
/// Angles, RTT and power are her physical values. With pre-compensation
/// the Doppler is replaced by the reference value.
pub fn trudy_features(
    state: &AdversaryState,
    ccm: &Ccm,
    slot_index: usize,
) -> Result<FeatureVector> {
    let reference = lookup(ccm, slot_index)?;
    let ecef = eci_to_ecef(&propagate(&state.elements, reference.time_s)?);
    let mut features = feature_vector(&ecef, ccm.station(), ccm.link())?;
    if state.config.doppler_precompensation {
        features.doppler_hz = reference.doppler_hz;
    }
    Ok(features)
}

/// The spoofer's noisy response to a challenge at `slot_index`.
pub fn trudy_response(
    state: &AdversaryState,
    ccm: &Ccm,
    slot_index: usize,
    noise: &NoiseModel,
    rng: &mut NoiseStream,
) -> Result<Measurement> {
    Ok(add_noise(
        &trudy_features(state, ccm, slot_index)?,
        noise,
        rng,
    ))
}

/// True when the spoofer's physical round trip is longer than the reference,
/// i.e. she cannot answer a fresh challenge in time.
pub fn causality_violation(trudy_rtt: f64, reference_rtt: f64) -> bool {
    trudy_rtt > reference_rtt
}
