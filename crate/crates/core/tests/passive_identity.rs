//! Statements that rest on the no-click evolution acting like a passive
//! filter of the unmeasured one. Tolerances are the contractual ones.

mod common;

use common::{arrival_propagator, standard, Standard, MASS, SCAN_DELTA_T};
use zenoflux::arrival::arrival_series;
use zenoflux::measurement::{
    conditional_state, hazard_rate, passive_equivalence_residual, run_protocol, ProtocolConfig, ValidityWindow,
};
use zenoflux::propagator::{energy_decomposition, DEFAULT_EPSILONS};
use zenoflux::zeno_lab::{roulette_curve, zeno_scan, ScanPropagator};
use zenoflux::{gaussian_packet, truncated_state, HamiltonianSpec, Projector, Region, SpatialGrid, WaveFunction};

/// Standard packet clipped to x < 0 at its density half-maximum, moving right.
fn clipped(s: &Standard) -> WaveFunction {
    let x0 = -2.0 * (2.0 * 2f64.ln()).sqrt();
    truncated_state(&s.region, &gaussian_packet(&s.grid, x0, 2.0, 2.0).unwrap()).unwrap()
}

fn gamma_of(psi: &WaveFunction, region: &Region) -> f64 {
    energy_decomposition(psi, region, MASS, &DEFAULT_EPSILONS)
        .unwrap()
        .gamma
}

fn equivalence_residual(n: usize, delta_t: f64, t: f64) -> f64 {
    let grid = SpatialGrid::new(-60.0, 30.0, n).unwrap();
    let h = HamiltonianSpec::free(&grid, MASS).unwrap();
    let region = Region::left_of(&grid, 0.0).unwrap();
    let psi0 = gaussian_packet(&grid, -20.0, 2.0, 2.0).unwrap();
    let pi = Projector::Spatial(region.clone());
    let k = (t / delta_t).round() as usize;
    let cfg = ProtocolConfig::with_max_step(pi.clone(), delta_t, k, "spectral", delta_t).storing_states();
    let rec = run_protocol(&psi0, &h, &cfg).unwrap();
    passive_equivalence_residual(&rec, k, &psi0, &h, &pi, &arrival_propagator(&region)).unwrap()
}

#[test]
fn conditional_state_matches_projected_unmeasured_state() {
    let s = standard();
    let window = ValidityWindow::new(&s.grid, MASS, 10.0);
    assert!(window.contains(0.1));
    let r = equivalence_residual(4096, 0.1, 10.0);
    assert!(r < 1e-2, "residual {r}");
}

#[test]
fn equivalence_residual_decreases_as_grid_refines() {
    let r: Vec<f64> = [1024, 2048, 4096]
        .iter()
        .map(|&n| equivalence_residual(n, 0.1, 10.0))
        .collect();
    assert!(r.windows(2).all(|w| w[1] < w[0]), "residuals {r:?}");
}

#[test]
fn scan_plateau_matches_unmeasured_probability() {
    let s = standard();
    let scan = zeno_scan(
        &s.psi0,
        &s.h,
        &Projector::Spatial(s.region.clone()),
        10.0,
        &SCAN_DELTA_T,
        &ScanPropagator::new("spectral", 0.5),
    )
    .unwrap();
    let series = arrival_series(&s.psi0, &s.h, &s.region, 10.0, 0.05, &arrival_propagator(&s.region)).unwrap();
    let unmeasured = *series.region_prob.last().unwrap();
    let plateau = scan
        .plateau()
        .unwrap_or_else(|e| panic!("{e}; survival {:?}", scan.survival_at_t));
    assert!((plateau.value / unmeasured - 1.0).abs() < 0.02);
}

#[test]
fn small_step_loss_rate_approaches_gamma() {
    let s = standard();
    let psi = clipped(&s);
    let gamma = gamma_of(&psi, &s.region);
    let window = ValidityWindow::new(&s.grid, MASS, 1.0);
    let pi = Projector::Spatial(s.region.clone());
    let rates: Vec<(f64, f64)> = [0.005, 0.01, 0.02, 0.04]
        .iter()
        .filter(|&&dt| window.contains(dt))
        .map(|&dt| {
            let cfg = ProtocolConfig::with_max_step(pi.clone(), dt, 1, "spectral", dt);
            let rec = run_protocol(&psi, &s.h, &cfg).unwrap();
            (dt, rec.conditional_click[1] / dt)
        })
        .collect();
    let (_, smallest) = rates[0];
    assert!(
        (smallest / gamma - 1.0).abs() < 0.05,
        "gamma {gamma}, (1-p)/dt {rates:?}"
    );
}

#[test]
fn hazard_follows_gamma_of_conditional_state() {
    let s = standard();
    let psi = clipped(&s);
    let dt = ValidityWindow::new(&s.grid, MASS, 1.0).dt_min;
    let cfg =
        ProtocolConfig::with_max_step(Projector::Spatial(s.region.clone()), dt, 5, "spectral", dt).storing_states();
    let rec = run_protocol(&psi, &s.h, &cfg).unwrap();
    let w = hazard_rate(&rec);
    for k in 0..5 {
        let gamma = gamma_of(&conditional_state(&rec, k).unwrap(), &s.region);
        assert!(
            (w.rate[k] / gamma - 1.0).abs() < 0.05,
            "step {k}: w {} vs gamma {gamma}",
            w.rate[k]
        );
    }
}

#[test]
fn resetting_protocol_has_constant_rate_gamma() {
    let s = standard();
    let psi = clipped(&s);
    let gamma = gamma_of(&psi, &s.region);
    let dt = ValidityWindow::new(&s.grid, MASS, 1.0).dt_min;
    let c = roulette_curve(&psi, &s.h, dt, 0.5, &ScanPropagator::new("spectral", dt)).unwrap();
    let worst = c.rate.iter().map(|w| (w / gamma - 1.0).abs()).fold(0.0, f64::max);
    assert!(
        worst < 0.05,
        "gamma {gamma}, rates {:.4}..{:.4}",
        c.rate[0],
        c.rate[c.rate.len() - 1]
    );
}

#[test]
fn protocol_hazard_is_flux_over_survival() {
    let s = standard();
    let dt = 0.05;
    let cfg = ProtocolConfig::with_max_step(Projector::Spatial(s.region.clone()), dt, 300, "spectral", dt);
    let rec = run_protocol(&s.psi0, &s.h, &cfg).unwrap();
    let w = hazard_rate(&rec);
    let series = arrival_series(&s.psi0, &s.h, &s.region, 15.0, dt, &arrival_propagator(&s.region)).unwrap();
    let peak = series
        .hazard
        .iter()
        .filter(|v| v.is_finite())
        .cloned()
        .fold(0.0, f64::max);
    let mut worst = (0.0, 0.0);
    for (i, t) in w.times.iter().enumerate() {
        // the series is sampled on the same lattice of times
        let j = (t / dt).round() as usize;
        let oracle = series.hazard[j];
        if series.region_prob[j] > 0.01 && oracle > 0.01 * peak {
            let rel = (w.rate[i] / oracle - 1.0).abs();
            if rel > worst.0 {
                worst = (rel, *t);
            }
        }
    }
    assert!(
        worst.0 < 0.02,
        "max relative deviation {:.3} at t = {}",
        worst.0,
        worst.1
    );
}
