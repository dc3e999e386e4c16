//! Acceptance suite. Runs every criterion at its stated tolerance and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.
//!
//! Run alone with `cargo test -p orbitauth-core --test acceptance`.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use orbitauth::ccm::{build_ccm, VisibilityWindow};
use orbitauth::experiment::{preset_config, run_scenario_preset, PresetName, ScenarioConfig};
use orbitauth::observables::{doppler, rtt, LinkParams};
use orbitauth::orbital::{
    eci_to_ecef, ground_station_ecef, observe, orbital_period, propagate, GroundStation,
    KeplerianElements, MU,
};
use orbitauth::protocol::{dep_versus_n, derive_seed, estimate_dep, FeatureSet, Scenario};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const TRIALS: usize = 10_000;
const SEED: u64 = 0x5EED_2024;

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(ok: bool, message: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(message())
    }
}

fn slack(factor: f64) -> f64 {
    factor / (TRIALS as f64).sqrt()
}

fn preset(name: PresetName, trudy_altitude: f64) -> Result<(ScenarioConfig, Scenario), String> {
    let config = preset_config(name, trudy_altitude).map_err(|e| e.to_string())?;
    let scenario = config.materialize().map_err(|e| e.to_string())?;
    Ok((config, scenario))
}

fn pass_slots(window: &VisibilityWindow) -> Vec<f64> {
    let slots = window.duration().floor() as usize + 1;
    (0..slots).map(|k| window.start + k as f64).collect()
}

fn slant_range(elements: &KeplerianElements, gs: &GroundStation, t: f64) -> f64 {
    let position = eci_to_ecef(&propagate(elements, t).unwrap()).position;
    (position - ground_station_ecef(gs)).norm()
}

fn physics_coupling() -> Check {
    let (config, _) = preset(PresetName::Scenario1, 1200e3)?;
    let (alice, gs, link) = (config.alice, config.station, LinkParams::default());
    let times = pass_slots(&config.window);

    // (a) finite-difference RTT rate against the Doppler of the same slot
    let taus: Vec<f64> = times
        .iter()
        .map(|&t| rtt(slant_range(&alice, &gs, t)))
        .collect();
    let mut worst_a: f64 = 0.0;
    for k in 1..times.len() - 1 {
        let tau_dot = (taus[k + 1] - taus[k - 1]) / (times[k + 1] - times[k - 1]);
        let fd = doppler(
            observe(&alice, &gs, times[k]).unwrap().range_rate,
            link.carrier_hz,
        );
        let predicted = -2.0 * fd / link.carrier_hz;
        // near closest approach both sides vanish; compare on the scale of the pass
        let scale = predicted.abs().max(1e-6 * 2.0 / 299_792_458.0);
        worst_a = worst_a.max((tau_dot - predicted).abs() / scale);
    }
    ensure(worst_a <= 1e-3, || {
        format!("(a) tau-dot relative error {worst_a:.2e}")
    })?;

    // (b) Doppler sign change within one slot of minimum slant range
    let ccm = build_ccm(&alice, &gs, &config.window, 1.0, &link).map_err(|e| e.to_string())?;
    let refs = ccm.reference();
    let closest = (0..refs.len())
        .min_by(|&a, &b| refs[a].rtt_s.total_cmp(&refs[b].rtt_s))
        .unwrap();
    let crossing = (0..refs.len() - 1)
        .find(|&k| refs[k].doppler_hz > 0.0 && refs[k + 1].doppler_hz <= 0.0)
        .ok_or("(b) no Doppler zero crossing")?;
    ensure(
        closest.abs_diff(crossing) <= 1 || closest.abs_diff(crossing + 1) <= 1,
        || format!("(b) zero crossing at slot {crossing}, minimum range at slot {closest}"),
    )?;

    // (c) analytic range rate against a central difference of positions
    let h = 0.1;
    let mut worst_c: f64 = 0.0;
    for &t in &times {
        let analytic = observe(&alice, &gs, t).unwrap().range_rate;
        let fd = (slant_range(&alice, &gs, t + h) - slant_range(&alice, &gs, t - h)) / (2.0 * h);
        worst_c = worst_c.max((analytic - fd).abs() / fd.abs().max(1e-6));
    }
    ensure(worst_c <= 1e-3, || {
        format!("(c) range-rate relative error {worst_c:.2e}")
    })?;
    Ok(format!(
        "{} slots; tau-dot err {worst_a:.1e}, crossing slot {crossing} vs min range {closest}, r-dot err {worst_c:.1e}",
        times.len()
    ))
}

fn propagator() -> Check {
    let (config, _) = preset(PresetName::Scenario1, 1200e3)?;
    let eccentric = KeplerianElements::new(8_000e3, 0.15, 1.1, 0.4, 2.0, 0.3, 1_000.0)
        .map_err(|e| e.to_string())?;
    let mut drift: f64 = 0.0;
    let mut periodic: f64 = 0.0;
    let mut vis_viva: f64 = 0.0;
    for (elements, circular) in [(config.alice, true), (eccentric, false)] {
        let period = orbital_period(elements.a).unwrap();
        let start = propagate(&elements, elements.epoch).unwrap().position;
        let mut dt = 0.0;
        while dt <= period {
            let state = propagate(&elements, elements.epoch + dt).unwrap();
            let r = state.position.norm();
            if circular {
                drift = drift.max((r - elements.a).abs() / elements.a);
            }
            let expected = MU * (2.0 / r - 1.0 / elements.a);
            vis_viva = vis_viva.max((state.velocity.norm_squared() - expected).abs() / expected);
            dt += 1.0;
        }
        for k in 1..=3 {
            let back = propagate(&elements, elements.epoch + k as f64 * period)
                .unwrap()
                .position;
            periodic = periodic.max((back - start).norm() / start.norm());
        }
    }
    ensure(drift < 1e-9, || format!("radius drift {drift:.2e}"))?;
    ensure(periodic < 1e-6, || {
        format!("period return error {periodic:.2e}")
    })?;
    ensure(vis_viva < 1e-9, || {
        format!("vis-viva residual {vis_viva:.2e}")
    })?;
    Ok(format!(
        "drift {drift:.1e}, return {periodic:.1e}, vis-viva {vis_viva:.1e}"
    ))
}

fn null_distribution() -> Check {
    let (_, scenario) = preset(PresetName::Scenario1, 1200e3)?;
    let n = 5;
    let dof = (n * scenario.features.count()) as f64;
    ensure(dof == 10.0, || {
        format!("expected two features, got {}", scenario.features.count())
    })?;
    let stats: Vec<f64> = (0..TRIALS as u64)
        .map(|trial| {
            scenario
                .run_episode(n, false, derive_seed(SEED, &[trial]))
                .map(|(s, _)| s)
        })
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mean = stats.iter().sum::<f64>() / stats.len() as f64;
    ensure((mean - dof).abs() <= 0.05 * dof, || {
        format!("mean {mean:.3} vs {dof}")
    })?;

    // Pearson goodness of fit on 50 equiprobable bins of chi^2(dof)
    let reference = ChiSquared::new(dof).unwrap();
    let bins = 50;
    let mut counts = vec![0usize; bins];
    for &s in &stats {
        let bin = ((reference.cdf(s) * bins as f64) as usize).min(bins - 1);
        counts[bin] += 1;
    }
    let expected = stats.len() as f64 / bins as f64;
    let pearson: f64 = counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new((bins - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    ensure(pearson <= critical, || {
        format!("Pearson {pearson:.1} > critical {critical:.1}")
    })?;
    Ok(format!(
        "mean {mean:.3} (target {dof}), Pearson {pearson:.1} <= {critical:.1} on {bins} bins"
    ))
}

fn scenario_one() -> Check {
    let (_, scenario) = preset(PresetName::Scenario1, 1200e3)?;
    let dep = estimate_dep(&scenario, 1, TRIALS, SEED)
        .map_err(|e| e.to_string())?
        .min_dep;
    ensure(dep <= 0.05, || format!("min DEP {dep:.4} at N = 1"))?;
    Ok(format!("min DEP {dep:.4} at N = 1"))
}

fn scenario_two() -> Check {
    let (_, scenario) = preset(PresetName::Scenario2, 1200e3)?;
    let n_values = [1, 5, 10, 20, 50];
    let deps: Vec<f64> = dep_versus_n(&scenario, &n_values, TRIALS, SEED)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|r| r.min_dep)
        .collect();
    ensure(deps[0] >= 0.4, || {
        format!("min DEP {:.4} at N = 1", deps[0])
    })?;
    for w in deps.windows(2) {
        ensure(w[1] <= w[0] + slack(2.0), || {
            format!("increase {:.4} -> {:.4}", w[0], w[1])
        })?;
    }
    let last = *deps.last().unwrap();
    ensure(last <= 0.1, || format!("min DEP {last:.4} at N = 50"))?;
    Ok(format!(
        "min DEP over N = {n_values:?}: {}",
        fmt_list(&deps)
    ))
}

fn scenario_three() -> Check {
    let (_, random) = preset(PresetName::Scenario3, 1200e3)?;
    let (config, fixed) = preset(PresetName::Scenario2, 1200e3)?;
    ensure(config.policy == fixed.policy, || {
        "fixed policy mismatch".into()
    })?;
    let n_values = [2, 5, 10, 20];
    let deps = |s: &Scenario| -> Result<Vec<f64>, String> {
        Ok(dep_versus_n(s, &n_values, TRIALS, SEED)
            .map_err(|e| e.to_string())?
            .iter()
            .map(|r| r.min_dep)
            .collect())
    };
    let (r, f) = (deps(&random)?, deps(&fixed)?);
    for ((n, r), f) in n_values.iter().zip(&r).zip(&f) {
        ensure(r <= f, || format!("N = {n}: random {r:.4} > fixed {f:.4}"))?;
    }
    ensure(f[1] - r[1] > slack(2.0), || {
        format!(
            "N = 5: margin {:.4} within slack {:.4}",
            f[1] - r[1],
            slack(2.0)
        )
    })?;
    Ok(format!(
        "random {} vs fixed {} at N = {n_values:?}",
        fmt_list(&r),
        fmt_list(&f)
    ))
}

fn precompensation() -> Check {
    let (_, scenario) = preset(PresetName::Scenario2, 1200e3)?;
    let scenario = scenario
        .with_features(FeatureSet::DOPPLER_ONLY)
        .map_err(|e| e.to_string())?;
    let n_values = [1, 10, 50];
    let deps: Vec<f64> = dep_versus_n(&scenario, &n_values, TRIALS, SEED)
        .map_err(|e| e.to_string())?
        .iter()
        .map(|r| r.min_dep)
        .collect();
    for (n, d) in n_values.iter().zip(&deps) {
        ensure((d - 0.5).abs() <= slack(3.0), || {
            format!("N = {n}: min DEP {d:.4}")
        })?;
    }
    Ok(format!(
        "min DEP {} at N = {n_values:?} (tolerance {:.3})",
        fmt_list(&deps),
        slack(3.0)
    ))
}

fn causality() -> Check {
    let (config, high) = preset(PresetName::Scenario2, 1200e3)?;
    let start = config.policy.start_slot;
    let challenged = start..start + 50;
    let reference = high.ccm.reference();
    let track = high.adversary_track();
    let flagged = challenged
        .clone()
        .filter(|&k| orbitauth::adversary::causality_violation(track[k].rtt_s, reference[k].rtt_s))
        .count();
    ensure(flagged == challenged.len(), || {
        format!("1200 km: {flagged}/50 slots flagged")
    })?;

    let (low_config, low) = preset(PresetName::Scenario2, 500e3)?;
    let t1 = low
        .ccm
        .slot_at(low_config.adversary.alignment_time)
        .ok_or("t1 outside grid")?;
    let violated = orbitauth::adversary::causality_violation(
        low.adversary_track()[t1].rtt_s,
        low.ccm.reference()[t1].rtt_s,
    );
    ensure(!violated, || "500 km: flagged at t1".into())?;
    Ok(format!(
        "1200 km: {flagged}/50 challenged slots flagged; 500 km: clear at slot {t1}"
    ))
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
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

fn determinism() -> Check {
    let n_values = [1, 2, 5, 10, 20, 50];
    let run = |threads: usize| -> Result<Vec<(String, Vec<u8>)>, String> {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?;
        pool.install(|| {
            run_scenario_preset(
                PresetName::Scenario3,
                1200e3,
                &n_values,
                TRIALS,
                SEED,
                dir.path(),
            )
        })
        .map_err(|e| e.to_string())?;
        Ok(csv_files(dir.path()))
    };
    let (one, four) = (run(1)?, run(4)?);
    ensure(!one.is_empty() && one.len() == four.len(), || {
        "different file sets".into()
    })?;
    for ((name, a), (_, b)) in one.iter().zip(&four) {
        ensure(a == b, || format!("{name} differs between 1 and 4 threads"))?;
    }
    Ok(format!(
        "{} CSV files identical with 1 and 4 worker threads",
        one.len()
    ))
}

fn fmt_list(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.4}")).collect();
    format!("[{}]", parts.join(", "))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("physics coupling", Duration::from_secs(5), physics_coupling),
        ("propagator", Duration::from_secs(5), propagator),
        (
            "null distribution",
            Duration::from_secs(30),
            null_distribution,
        ),
        ("scenario I bound", Duration::from_secs(60), scenario_one),
        ("scenario II shape", Duration::from_secs(300), scenario_two),
        (
            "scenario III dominance",
            Duration::from_secs(300),
            scenario_three,
        ),
        (
            "pre-compensation completeness",
            Duration::from_secs(60),
            precompensation,
        ),
        ("causality flag", Duration::from_secs(1), causality),
        ("determinism", Duration::from_secs(300), determinism),
    ];
    let mut failures = 0;
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = check();
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > budget => Err(format!("{detail}; over budget of {budget:?}")),
            other => other,
        };
        let (status, detail) = match outcome {
            Ok(detail) => ("PASS", detail),
            Err(detail) => {
                failures += 1;
                ("FAIL", detail)
            }
        };
        println!(
            "criterion {}: {status} {name} ({:.2}s): {detail}",
            i + 1,
            elapsed.as_secs_f64()
        );
    }
    if failures == 0 {
        println!("acceptance: all 9 criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failures} of 9 criteria failed");
        ExitCode::FAILURE
    }
}
