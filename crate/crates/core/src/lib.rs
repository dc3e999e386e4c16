//! Trajectory-based physical-layer authentication of LEO satellites.
//!
//! A ground verifier predicts the coupled observables of a satellite pass
//! (Doppler shift, angle of arrival, received power and round-trip time) from
//! the claimed Keplerian elements, challenges the transmitter at verifier-chosen
//! time slots, and scores the returned measurements against that prediction.
//!
//! The crate is organised bottom-up:
//!
//! - [`orbital`]: two-body propagation and the perifocal → ECI → ECEF → ENU chain
//! - [`observables`]: Doppler, RTT, Friis power, feature vectors and noise
//! - [`ccm`]: visibility windows and the channel characteristic map (reference table)
//! - [`adversary`]: spoofer orbits (coplanar shadow, collinear alignment) and responses
//! - [`protocol`]: challenges, the consistency statistic, decisions and Monte Carlo DEP
//! - [`experiment`]: scenario configuration, presets and CSV/JSON outputs

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adversary;
pub mod ccm;
pub mod error;
pub mod experiment;
pub mod observables;
pub mod orbital;
pub mod protocol;

pub use error::{Error, Result};
