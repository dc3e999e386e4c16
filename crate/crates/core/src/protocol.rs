//! The active challenge-response verifier.
//!
//! Bob picks N slots from the CCM grid, the prover answers at those slots,
//! and the answers are scored by a noise-normalised squared error against
//! the reference. A legitimate answer therefore scores χ² with
//! N·|features| degrees of freedom. Monte Carlo over legitimate and attack
//! episodes yields the false-alarm/missed-detection trade-off and the
//! minimum detection error probability (DEP).

use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{causality_violation, trudy_features, AdversaryState};
use crate::ccm::{lookup, Ccm};
use crate::error::{Error, Result};
use crate::observables::{add_noise, FeatureVector, Measurement, NoiseModel, NoiseStream};

pub const MIN_TRIALS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingKind {
    FixedConsecutive,
    UniformRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplingPolicy {
    pub kind: SamplingKind,
    /// First slot of a fixed policy; ignored by the random policy.
    pub start_slot: usize,
}

impl SamplingPolicy {
    pub fn fixed(start_slot: usize) -> Self {
        SamplingPolicy {
            kind: SamplingKind::FixedConsecutive,
            start_slot,
        }
    }

    pub fn random() -> Self {
        SamplingPolicy {
            kind: SamplingKind::UniformRandom,
            start_slot: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge {
    /// Strictly increasing slot indices.
    pub slot_indices: Vec<usize>,
    pub nonce: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSet {
    pub use_doppler: bool,
    pub use_elevation: bool,
    pub use_azimuth: bool,
    pub use_rsp: bool,
    pub use_rtt: bool,
}

impl FeatureSet {
    pub const AOA_ONLY: FeatureSet = FeatureSet {
        use_doppler: false,
        use_elevation: true,
        use_azimuth: false,
        use_rsp: false,
        use_rtt: false,
    };

    pub const AOA_DOPPLER: FeatureSet = FeatureSet {
        use_doppler: true,
        ..FeatureSet::AOA_ONLY
    };

    pub const DOPPLER_ONLY: FeatureSet = FeatureSet {
        use_doppler: true,
        use_elevation: false,
        use_azimuth: false,
        use_rsp: false,
        use_rtt: false,
    };

    pub fn count(&self) -> usize {
        [
            self.use_doppler,
            self.use_elevation,
            self.use_azimuth,
            self.use_rsp,
            self.use_rtt,
        ]
        .iter()
        .filter(|&&f| f)
        .count()
    }

    /// Checks that at least one feature is on and that each enabled
    /// feature has a positive noise sigma.
    pub fn validate(&self, noise: &NoiseModel) -> Result<()> {
        if self.count() == 0 {
            return Err(Error::config(
                "features",
                "at least one feature must be enabled",
            ));
        }
        for (enabled, sigma, name) in [
            (
                self.use_doppler,
                noise.sigma_doppler,
                "noise.sigma_doppler_hz",
            ),
            (
                self.use_elevation,
                noise.sigma_elevation,
                "noise.sigma_elevation_deg",
            ),
            (
                self.use_azimuth,
                noise.sigma_azimuth,
                "noise.sigma_azimuth_deg",
            ),
            (self.use_rsp, noise.sigma_rsp_db, "noise.sigma_rsp_db"),
            (self.use_rtt, noise.sigma_rtt, "noise.sigma_rtt_s"),
        ] {
            if enabled && !(sigma > 0.0) {
                return Err(Error::config(
                    name,
                    "must be positive for an enabled feature",
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// Threshold sweep for one challenge size.
#[derive(Debug, Clone, PartialEq)]
pub struct DepResult {
    pub n_challenges: usize,
    pub thresholds: Vec<f64>,
    /// Fraction of legitimate episodes rejected at each threshold.
    pub p_fa: Vec<f64>,
    /// Fraction of attack episodes accepted at each threshold.
    pub p_md: Vec<f64>,
    pub min_dep: f64,
    /// Fraction of attack episodes in which the spoofer's RTT exceeded the
    /// reference at some challenged slot.
    pub causality_violation_rate: f64,
}

/// Draws a challenge of `n` slots from a grid of `grid_size`.
pub fn select_timestamps(
    policy: &SamplingPolicy,
    grid_size: usize,
    n: usize,
    rng: &mut impl RngCore,
) -> Result<Challenge> {
    if n == 0 {
        return Err(Error::config("n", "a challenge needs at least one slot"));
    }
    if n > grid_size {
        return Err(Error::config(
            "n",
            format!("{n} challenge slots requested but the grid has only {grid_size}"),
        ));
    }
    let slot_indices = match policy.kind {
        SamplingKind::FixedConsecutive => {
            if policy.start_slot + n > grid_size {
                return Err(Error::config(
                    "policy.start_slot",
                    format!(
                        "start slot {} + {n} slots exceeds the grid of {grid_size}",
                        policy.start_slot
                    ),
                ));
            }
            (policy.start_slot..policy.start_slot + n).collect()
        }
        SamplingKind::UniformRandom => {
            let mut picked = sample(rng, grid_size, n).into_vec();
            picked.sort_unstable();
            picked
        }
    };
    Ok(Challenge {
        slot_indices,
        nonce: rng.next_u64(),
    })
}

/// Angle difference wrapped into (−π, π].
fn angle_difference(measured: f64, reference: f64) -> f64 {
    let d = (measured - reference).rem_euclid(2.0 * PI);
    if d > PI {
        d - 2.0 * PI
    } else {
        d
    }
}

fn slot_statistic(
    m: &FeatureVector,
    r: &FeatureVector,
    features: &FeatureSet,
    noise: &NoiseModel,
) -> f64 {
    let mut total = 0.0;
    let mut add = |residual: f64| total += residual * residual;
    if features.use_doppler {
        add((m.doppler_hz - r.doppler_hz) / noise.sigma_doppler);
    }
    if features.use_elevation {
        add(angle_difference(m.elevation_rad, r.elevation_rad) / noise.sigma_elevation);
    }
    if features.use_azimuth {
        add(angle_difference(m.azimuth_rad, r.azimuth_rad) / noise.sigma_azimuth);
    }
    if features.use_rsp {
        add(10.0 * (m.rsp_w / r.rsp_w).log10() / noise.sigma_rsp_db);
    }
    if features.use_rtt {
        add((m.rtt_s - r.rtt_s) / noise.sigma_rtt);
    }
    total
}

/// Cumulative noise-normalised squared deviation of the measurements from
/// the reference over the challenged slots and enabled features.
pub fn test_statistic(
    measurements: &[Measurement],
    ccm: &Ccm,
    challenge: &Challenge,
    features: &FeatureSet,
    noise: &NoiseModel,
) -> Result<f64> {
    features.validate(noise)?;
    if measurements.len() != challenge.slot_indices.len() {
        return Err(Error::config(
            "measurements",
            format!(
                "{} measurements for {} challenged slots",
                measurements.len(),
                challenge.slot_indices.len()
            ),
        ));
    }
    measurements
        .iter()
        .zip(&challenge.slot_indices)
        .map(|(m, &k)| {
            Ok(slot_statistic(
                &m.features,
                &lookup(ccm, k)?,
                features,
                noise,
            ))
        })
        .sum()
}

/// Accept iff `statistic ≤ threshold`.
pub fn decide(statistic: f64, threshold: f64) -> Decision {
    if statistic <= threshold {
        Decision::Accept
    } else {
        Decision::Reject
    }
}

/// Sweeps the threshold over every distinct pooled statistic and returns
/// `(thresholds, p_fa, p_md, min_dep)`.
pub fn threshold_sweep(legitimate: &[f64], attack: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    let mut legit = legitimate.to_vec();
    let mut adv = attack.to_vec();
    legit.sort_by(f64::total_cmp);
    adv.sort_by(f64::total_cmp);
    let mut pooled: Vec<f64> = legit.iter().chain(&adv).copied().collect();
    pooled.sort_by(f64::total_cmp);
    pooled.dedup();

    let (n_legit, n_adv) = (legit.len().max(1) as f64, adv.len().max(1) as f64);
    let (mut i, mut j) = (0, 0);
    let mut p_fa = Vec::with_capacity(pooled.len());
    let mut p_md = Vec::with_capacity(pooled.len());
    let mut min_dep = 0.5;
    for &threshold in &pooled {
        while i < legit.len() && legit[i] <= threshold {
            i += 1;
        }
        while j < adv.len() && adv[j] <= threshold {
            j += 1;
        }
        let fa = (legit.len() - i) as f64 / n_legit;
        let md = j as f64 / n_adv;
        min_dep = f64::min(min_dep, 0.5 * (fa + md));
        p_fa.push(fa);
        p_md.push(md);
    }
    (pooled, p_fa, p_md, min_dep)
}

/// SplitMix64 finaliser.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives an independent seed from a parent seed and a path of labels.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(parent), |acc, &label| mix64(acc ^ mix64(label)))
}

const STREAM_LEGITIMATE: u64 = 1;
const STREAM_ATTACK: u64 = 2;
const STREAM_CHALLENGE: u64 = 10;
const STREAM_NOISE: u64 = 11;
const STREAM_PER_N: u64 = 20;

/// A fully materialised experiment: the verifier's CCM, the spoofer, and the
/// protocol settings. The spoofer's noiseless features are tabulated once.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub ccm: Ccm,
    pub adversary: AdversaryState,
    pub noise: NoiseModel,
    pub features: FeatureSet,
    pub policy: SamplingPolicy,
    adversary_track: Vec<FeatureVector>,
}

impl Scenario {
    pub fn new(
        ccm: Ccm,
        adversary: AdversaryState,
        noise: NoiseModel,
        features: FeatureSet,
        policy: SamplingPolicy,
    ) -> Result<Self> {
        features.validate(&noise)?;
        noise.validate()?;
        let adversary_track = (0..ccm.len())
            .map(|k| trudy_features(&adversary, &ccm, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario {
            ccm,
            adversary,
            noise,
            features,
            policy,
            adversary_track,
        })
    }

    /// The spoofer's noiseless features on the CCM grid.
    pub fn adversary_track(&self) -> &[FeatureVector] {
        &self.adversary_track
    }

    /// Same scenario with a different sampling policy.
    pub fn with_policy(&self, policy: SamplingPolicy) -> Scenario {
        Scenario {
            policy,
            ..self.clone()
        }
    }

    /// Same scenario with a different feature set.
    pub fn with_features(&self, features: FeatureSet) -> Result<Scenario> {
        features.validate(&self.noise)?;
        Ok(Scenario {
            features,
            ..self.clone()
        })
    }

    /// One episode: draw a challenge, collect noisy answers from either the
    /// legitimate satellite or the spoofer, and score them. Returns the
    /// statistic and whether the spoofer's RTT violated causality at any
    /// challenged slot (always false for legitimate episodes).
    pub fn run_episode(&self, n: usize, attack: bool, seed: u64) -> Result<(f64, bool)> {
        let mut challenge_rng = NoiseStream::from_seed(derive_seed(seed, &[STREAM_CHALLENGE]));
        let mut noise_rng = NoiseStream::from_seed(derive_seed(seed, &[STREAM_NOISE]));
        let challenge = select_timestamps(&self.policy, self.ccm.len(), n, &mut challenge_rng)?;
        let reference = self.ccm.reference();
        let source = if attack {
            &self.adversary_track
        } else {
            reference
        };
        let measurements: Vec<Measurement> = challenge
            .slot_indices
            .iter()
            .map(|&k| add_noise(&source[k], &self.noise, &mut noise_rng))
            .collect();
        let statistic = test_statistic(
            &measurements,
            &self.ccm,
            &challenge,
            &self.features,
            &self.noise,
        )?;
        let violated = attack
            && challenge
                .slot_indices
                .iter()
                .any(|&k| causality_violation(self.adversary_track[k].rtt_s, reference[k].rtt_s));
        Ok((statistic, violated))
    }
}

/// Monte Carlo estimate of the false-alarm/missed-detection trade-off at
/// challenge size `n`.
///
/// Each episode draws from its own stream derived from
/// `(master_seed, hypothesis, trial)`, and results are gathered in trial
/// order, so the output does not depend on the number of worker threads.
pub fn estimate_dep(
    scenario: &Scenario,
    n: usize,
    trials: usize,
    master_seed: u64,
) -> Result<DepResult> {
    if trials < MIN_TRIALS {
        return Err(Error::config(
            "trials",
            format!("at least {MIN_TRIALS} trials are required, got {trials}"),
        ));
    }
    // surface grid/policy errors once instead of per trial
    select_timestamps(
        &scenario.policy,
        scenario.ccm.len(),
        n,
        &mut NoiseStream::from_seed(0),
    )?;

    let run = |stream: u64| -> Result<Vec<(f64, bool)>> {
        (0..trials as u64)
            .into_par_iter()
            .map(|trial| {
                let seed = derive_seed(master_seed, &[stream, trial]);
                scenario.run_episode(n, stream == STREAM_ATTACK, seed)
            })
            .collect()
    };
    let legitimate: Vec<f64> = run(STREAM_LEGITIMATE)?
        .into_iter()
        .map(|(s, _)| s)
        .collect();
    let attack_runs = run(STREAM_ATTACK)?;
    let violations = attack_runs.iter().filter(|(_, v)| *v).count();
    let attack: Vec<f64> = attack_runs.into_iter().map(|(s, _)| s).collect();

    let (thresholds, p_fa, p_md, min_dep) = threshold_sweep(&legitimate, &attack);
    Ok(DepResult {
        n_challenges: n,
        thresholds,
        p_fa,
        p_md,
        min_dep,
        causality_violation_rate: violations as f64 / trials as f64,
    })
}

/// [`estimate_dep`] for each challenge size, seeding each from
/// `(master_seed, n)` so a given N gets the same streams in any list.
pub fn dep_versus_n(
    scenario: &Scenario,
    n_values: &[usize],
    trials: usize,
    master_seed: u64,
) -> Result<Vec<DepResult>> {
    if n_values.is_empty() {
        return Err(Error::config(
            "n",
            "at least one challenge size is required",
        ));
    }
    n_values
        .iter()
        .map(|&n| {
            estimate_dep(
                scenario,
                n,
                trials,
                derive_seed(master_seed, &[STREAM_PER_N, n as u64]),
            )
        })
        .collect()
}
