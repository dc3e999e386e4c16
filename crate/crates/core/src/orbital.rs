//! Two-body Keplerian propagation and the frame chain from the perifocal
//! plane down to a ground station's East-North-Up horizon.
//!
//! Times are seconds since the J2000 epoch. Angles are radians. Distances are
//! metres. The Earth is a sphere of radius [`EARTH_RADIUS`] rotating at
//! [`EARTH_ROTATION_RATE`] about the inertial z axis.

use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Earth's standard gravitational parameter, m³/s².
pub const MU: f64 = 3.986e14;
/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Mean equatorial radius used for the spherical Earth, m.
pub const EARTH_RADIUS: f64 = 6_378_137.0;
/// Sidereal rotation rate, rad/s.
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_9e-5;

const SECONDS_PER_DAY: f64 = 86_400.0;
const GMST_AT_J2000_DEG: f64 = 280.4606;
const GMST_RATE_DEG_PER_DAY: f64 = 360.985_647_3;

const KEPLER_TOLERANCE: f64 = 1e-12;
const KEPLER_MAX_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub mu: f64,
    pub c: f64,
    pub earth_radius: f64,
    pub earth_rotation_rate: f64,
}

impl PhysicalConstants {
    pub const STANDARD: PhysicalConstants = PhysicalConstants {
        mu: MU,
        c: SPEED_OF_LIGHT,
        earth_radius: EARTH_RADIUS,
        earth_rotation_rate: EARTH_ROTATION_RATE,
    };
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::STANDARD
    }
}

/// Classical orbital elements plus the epoch at which `nu0` holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeplerianElements {
    /// Semi-major axis, m.
    pub a: f64,
    /// Eccentricity.
    pub e: f64,
    /// Inclination, rad.
    pub i: f64,
    /// Right ascension of the ascending node, rad.
    pub raan: f64,
    /// Argument of perigee, rad.
    pub argp: f64,
    /// True anomaly at `epoch`, rad.
    pub nu0: f64,
    /// Reference time, s since J2000.
    pub epoch: f64,
}

impl KeplerianElements {
    /// Builds validated elements, wrapping the three angles into [0, 2π).
    pub fn new(a: f64, e: f64, i: f64, raan: f64, argp: f64, nu0: f64, epoch: f64) -> Result<Self> {
        let elements = KeplerianElements {
            a,
            e,
            i,
            raan: wrap_two_pi(raan),
            argp: wrap_two_pi(argp),
            nu0: wrap_two_pi(nu0),
            epoch,
        };
        elements.validate()?;
        Ok(elements)
    }

    /// Circular orbit at `altitude` above the spherical Earth.
    pub fn circular(altitude: f64, i: f64, raan: f64, nu0: f64, epoch: f64) -> Result<Self> {
        Self::new(EARTH_RADIUS + altitude, 0.0, i, raan, 0.0, nu0, epoch)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.a, self.e, self.i, self.raan, self.argp, self.nu0, self.epoch,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("orbital elements must be finite".into()));
        }
        if !(0.0..1.0).contains(&self.e) {
            return Err(Error::Domain(format!(
                "eccentricity {} outside [0, 1)",
                self.e
            )));
        }
        if self.a * (1.0 - self.e) <= EARTH_RADIUS {
            return Err(Error::Domain(format!(
                "perigee radius {:.1} m is not above the Earth's surface",
                self.a * (1.0 - self.e)
            )));
        }
        if !(0.0..=PI).contains(&self.i) {
            return Err(Error::Domain(format!(
                "inclination {} outside [0, π]",
                self.i
            )));
        }
        for (name, angle) in [("raan", self.raan), ("argp", self.argp), ("nu0", self.nu0)] {
            if !(0.0..TAU).contains(&angle) {
                return Err(Error::Domain(format!("{name} {angle} outside [0, 2π)")));
            }
        }
        Ok(())
    }

    pub fn altitude(&self) -> f64 {
        self.a - EARTH_RADIUS
    }

    /// Mean motion n = √(μ/a³), rad/s.
    pub fn mean_motion(&self) -> f64 {
        (MU / self.a.powi(3)).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EciState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub time: f64,
}

/// Earth-fixed state. `velocity` is relative to the rotating frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcefState {
    pub position: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    /// Geocentric latitude λ, rad.
    pub latitude: f64,
    /// Longitude ψ, rad, east positive.
    pub longitude: f64,
    /// Height above the spherical Earth, m.
    pub altitude: f64,
}

impl GroundStation {
    /// Validates latitude and wraps longitude into (−π, π].
    pub fn new(latitude: f64, longitude: f64, altitude: f64) -> Result<Self> {
        let station = GroundStation {
            latitude,
            longitude: wrap_pi(longitude),
            altitude,
        };
        station.validate()?;
        Ok(station)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.latitude.is_finite() || !self.longitude.is_finite() || !self.altitude.is_finite() {
            return Err(Error::Domain(
                "ground station coordinates must be finite".into(),
            ));
        }
        if !(-PI / 2.0..=PI / 2.0).contains(&self.latitude) {
            return Err(Error::Domain(format!(
                "latitude {} outside [−π/2, π/2]",
                self.latitude
            )));
        }
        if !(self.longitude > -PI && self.longitude <= PI) {
            return Err(Error::Domain(format!(
                "longitude {} outside (−π, π]",
                self.longitude
            )));
        }
        if EARTH_RADIUS + self.altitude <= 0.0 {
            return Err(Error::Domain("station below the Earth's centre".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopocentricObservation {
    /// Slant range, m.
    pub range: f64,
    /// Range rate, m/s, positive when receding.
    pub range_rate: f64,
    /// Elevation above the horizon plane, rad.
    pub elevation: f64,
    /// Azimuth clockwise from North, rad in [0, 2π).
    pub azimuth: f64,
    pub time: f64,
}

/// Wraps an angle into [0, 2π).
pub fn wrap_two_pi(angle: f64) -> f64 {
    let wrapped = angle.rem_euclid(TAU);
    // rem_euclid can round up to exactly TAU for tiny negative inputs
    if wrapped >= TAU {
        0.0
    } else {
        wrapped
    }
}

/// Wraps an angle into (−π, π].
pub fn wrap_pi(angle: f64) -> f64 {
    let wrapped = wrap_two_pi(angle);
    if wrapped > PI {
        wrapped - TAU
    } else {
        wrapped
    }
}

fn check_semi_major_axis(a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "semi-major axis must be positive, got {a}"
        )))
    }
}

/// Circular orbital speed √(μ/a).
pub fn circular_speed(a: f64) -> Result<f64> {
    check_semi_major_axis(a)?;
    Ok((MU / a).sqrt())
}

/// Orbital period 2π√(a³/μ).
pub fn orbital_period(a: f64) -> Result<f64> {
    check_semi_major_axis(a)?;
    Ok(TAU * (a.powi(3) / MU).sqrt())
}

fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

fn rot_z(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0)
}

/// Rotation taking perifocal coordinates to ECI: R_z(Ω)·R_x(i)·R_z(ω).
pub fn perifocal_to_eci(elements: &KeplerianElements) -> Matrix3<f64> {
    rot_z(elements.raan) * rot_x(elements.i) * rot_z(elements.argp)
}

/// Solves M = E − e·sin E for E by Newton iteration starting at E = M.
fn solve_kepler(mean_anomaly: f64, e: f64) -> Result<f64> {
    if e == 0.0 {
        return Ok(mean_anomaly);
    }
    let mut ecc = mean_anomaly;
    for _ in 0..KEPLER_MAX_ITERATIONS {
        let step = (ecc - e * ecc.sin() - mean_anomaly) / (1.0 - e * ecc.cos());
        ecc -= step;
        if step.abs() < KEPLER_TOLERANCE {
            return Ok(ecc);
        }
    }
    Err(Error::Numerical(format!(
        "Kepler's equation did not converge in {KEPLER_MAX_ITERATIONS} iterations (M = {mean_anomaly}, e = {e})"
    )))
}

/// Propagates the elements to time `t` (either side of the epoch).
pub fn propagate(elements: &KeplerianElements, t: f64) -> Result<EciState> {
    elements.validate()?;
    let KeplerianElements { a, e, nu0, .. } = *elements;
    let n = elements.mean_motion();
    let root = (1.0 - e * e).sqrt();

    let ecc0 = if e == 0.0 {
        nu0
    } else {
        (root * nu0.sin()).atan2(e + nu0.cos())
    };
    let mean0 = ecc0 - e * ecc0.sin();
    let mean = wrap_pi(mean0 + n * (t - elements.epoch));
    let ecc = solve_kepler(mean, e)?;

    let (sin_e, cos_e) = ecc.sin_cos();
    let denom = 1.0 - e * cos_e;
    let pos_pf = Vector3::new(a * (cos_e - e), a * root * sin_e, 0.0);
    let vel_pf = Vector3::new(-sin_e, root * cos_e, 0.0) * (n * a / denom);

    let rotation = perifocal_to_eci(elements);
    Ok(EciState {
        position: rotation * pos_pf,
        velocity: rotation * vel_pf,
        time: t,
    })
}

/// Greenwich mean sidereal angle in [0, 2π) from the linear sidereal model.
pub fn gmst(t: f64) -> f64 {
    let days = t / SECONDS_PER_DAY;
    let degrees = (GMST_AT_J2000_DEG + GMST_RATE_DEG_PER_DAY * days).rem_euclid(360.0);
    wrap_two_pi(degrees.to_radians())
}

/// Rotates an ECI state into the Earth-fixed frame, including the transport
/// term −ω_E ẑ × r in the velocity.
pub fn eci_to_ecef(state: &EciState) -> EcefState {
    let to_ecef = rot_z(-gmst(state.time));
    let position = to_ecef * state.position;
    let spin = Vector3::new(0.0, 0.0, EARTH_ROTATION_RATE);
    let velocity = to_ecef * state.velocity - spin.cross(&position);
    EcefState {
        position,
        velocity,
        time: state.time,
    }
}

/// Position of an Earth-fixed point expressed in ECI at time `t`.
pub fn ecef_to_eci_position(position: &Vector3<f64>, t: f64) -> Vector3<f64> {
    rot_z(gmst(t)) * position
}

pub fn ground_station_ecef(gs: &GroundStation) -> Vector3<f64> {
    let radius = EARTH_RADIUS + gs.altitude;
    let (sin_lat, cos_lat) = gs.latitude.sin_cos();
    let (sin_lon, cos_lon) = gs.longitude.sin_cos();
    Vector3::new(
        radius * cos_lat * cos_lon,
        radius * cos_lat * sin_lon,
        radius * sin_lat,
    )
}

/// Rows are the East, North and Up unit vectors of the station's horizon frame.
pub fn enu_basis(gs: &GroundStation) -> Matrix3<f64> {
    let (sin_lat, cos_lat) = gs.latitude.sin_cos();
    let (sin_lon, cos_lon) = gs.longitude.sin_cos();
    Matrix3::new(
        -sin_lon,
        cos_lon,
        0.0,
        -sin_lat * cos_lon,
        -sin_lat * sin_lon,
        cos_lat,
        cos_lat * cos_lon,
        cos_lat * sin_lon,
        sin_lat,
    )
}

/// Range, range rate, elevation and azimuth of the satellite seen from `gs`.
pub fn topocentric(sat: &EcefState, gs: &GroundStation) -> Result<TopocentricObservation> {
    let line_of_sight = sat.position - ground_station_ecef(gs);
    let range = line_of_sight.norm();
    if !(range > 0.0) {
        return Err(Error::Domain(
            "satellite and station positions coincide".into(),
        ));
    }
    let enu = enu_basis(gs) * line_of_sight;
    let elevation = (enu.z / range).clamp(-1.0, 1.0).asin();
    let azimuth = wrap_two_pi(enu.x.atan2(enu.y));
    let range_rate = line_of_sight.dot(&sat.velocity) / range;
    Ok(TopocentricObservation {
        range,
        range_rate,
        elevation,
        azimuth,
        time: sat.time,
    })
}

/// Convenience: propagate, rotate to ECEF and observe from `gs`.
pub fn observe(
    elements: &KeplerianElements,
    gs: &GroundStation,
    t: f64,
) -> Result<TopocentricObservation> {
    let ecef = eci_to_ecef(&propagate(elements, t)?);
    topocentric(&ecef, gs)
}

/// Circular orbit through the zenith of `gs` at time `t_peak`, on the
/// ascending half of the track. Returns the RAAN and true anomaly at `epoch`
/// (argument of perigee is zero).
///
/// Requires |latitude| ≤ inclination ≤ π − |latitude| so the ground track can
/// reach the station.
pub fn zenith_pass_orientation(
    altitude: f64,
    inclination: f64,
    gs: &GroundStation,
    t_peak: f64,
    epoch: f64,
) -> Result<(f64, f64)> {
    let a = EARTH_RADIUS + altitude;
    check_semi_major_axis(a)?;
    let target = ecef_to_eci_position(&ground_station_ecef(gs), t_peak);
    let declination = (target.z / target.norm()).asin();
    let sin_i = inclination.sin();
    if sin_i.abs() < 1e-12 || declination.sin().abs() > sin_i + 1e-12 {
        return Err(Error::Geometry(format!(
            "an orbit inclined {:.3}° never passes over latitude {:.3}°",
            inclination.to_degrees(),
            declination.to_degrees()
        )));
    }
    // argument of latitude at the pass and the right ascension it implies
    let arg_lat = (declination.sin() / sin_i).clamp(-1.0, 1.0).asin();
    let right_ascension = target.y.atan2(target.x);
    let node_offset = (inclination.cos() * arg_lat.sin()).atan2(arg_lat.cos());
    let raan = wrap_two_pi(right_ascension - node_offset);
    let n = (MU / a.powi(3)).sqrt();
    let nu0 = wrap_two_pi(arg_lat - n * (t_peak - epoch));
    Ok((raan, nu0))
}
