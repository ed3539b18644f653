use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zenoflux::arrival::{arrival_series, breakdown_probe};
use zenoflux::measurement::{run_protocol, step_v, ProtocolConfig};
use zenoflux::numerics::simpson;
use zenoflux::propagator::{energy_decomposition, LeakGuard, DEFAULT_EPSILONS};
use zenoflux::zeno_lab::{finite_dim_impossibility, random_hermitian};
use zenoflux::{
    evolve, gaussian_packet, polar_decompose, truncated_state, HamiltonianSpec, Projector, PropagatorConfig, Region,
    SpatialGrid, WaveFunction,
};

const N: usize = 64;

fn small_grid() -> SpatialGrid {
    SpatialGrid::new(-10.0, 10.0, N).unwrap()
}

fn amplitudes(n: usize) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), n)
        .prop_map(|v| v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect())
}

fn random_state() -> impl Strategy<Value = WaveFunction> {
    amplitudes(N).prop_map(|a| WaveFunction::new(small_grid(), a).unwrap())
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn unguarded(cfg: PropagatorConfig) -> PropagatorConfig {
    cfg.with_guard(LeakGuard::disabled())
}

proptest! {
    #![proptest_config(config(64))]

    #[test]
    fn projectors_are_idempotent_contractions(psi in random_state(), a in -9.0..0.0f64, w in 1.0..8.0f64,
                                              probe in random_state()) {
        let g = small_grid();
        let spatial = Projector::Spatial(Region::between(&g, a, a + w).unwrap());
        let rank_one = Projector::rank_one(probe.normalized()).unwrap();
        for p in [spatial, rank_one] {
            let once = p.apply(&psi).unwrap();
            let twice = p.apply(&once).unwrap();
            prop_assert!(twice.distance(&once).unwrap() < 1e-12);
            prop_assert!(once.norm() <= psi.norm() * (1.0 + 1e-15));
        }
    }

    #[test]
    fn spatial_projector_and_complement_split_the_norm(psi in random_state(), a in -9.0..0.0f64, w in 1.0..8.0f64) {
        let g = small_grid();
        let p = Projector::Spatial(Region::between(&g, a, a + w).unwrap());
        let inside = p.apply(&psi).unwrap().norm_sqr();
        let outside = p.apply_complement(&psi).unwrap().norm_sqr();
        prop_assert!((inside + outside - psi.norm_sqr()).abs() < 1e-12);
    }

    #[test]
    fn polar_form_reconstructs_the_state(psi in random_state()) {
        let fields = polar_decompose(&psi, None);
        for ((z, r), &d) in psi.amplitudes().iter().zip(fields.recombine()).zip(&fields.phase_defined) {
            if d {
                prop_assert!((z - r).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn step_v_contracts(psi in random_state(), dt in 0.01..1.0f64, a in -8.0..0.0f64) {
        let g = small_grid();
        let h = HamiltonianSpec::build(&g, 1.0, |x| 0.02 * x * x).unwrap();
        let p = Projector::Spatial(Region::between(&g, a, a + 6.0).unwrap());
        let cfg = unguarded(PropagatorConfig::crank_nicolson(dt / 4.0));
        let v = step_v(&psi, &h, &p, dt, &cfg).unwrap();
        prop_assert!(v.norm() <= psi.norm() * (1.0 + 1e-14));
    }

    #[test]
    fn finite_dimension_forbids_the_magic_identity(seed in any::<u64>(), dim in 2usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hermitian(dim, &mut rng);
        let rank = rng.random_range(1..dim);
        let mask: Vec<bool> = (0..dim).map(|i| i < rank).collect();
        let c = finite_dim_impossibility(&h, &mask).unwrap();
        prop_assert!(c.commutator_norm >= 0.0 && c.magic_norm >= 0.0);
        if c.commutator_norm > 1e-6 {
            prop_assert!(c.magic_norm > 1e-8);
        }
    }

    #[test]
    fn finite_dimension_commuting_hamiltonians_vanish(diag in prop::collection::vec(-5.0..5.0f64, 2..=8), cut in 1usize..8) {
        let dim = diag.len();
        let h = DMatrix::from_fn(dim, dim, |i, j| if i == j { Complex64::new(diag[i], 0.0) } else { Complex64::new(0.0, 0.0) });
        let mask: Vec<bool> = (0..dim).map(|i| i < cut.min(dim - 1)).collect();
        let c = finite_dim_impossibility(&h, &mask).unwrap();
        prop_assert!(c.commutator_norm == 0.0 && c.magic_norm == 0.0);
    }
}

proptest! {
    #![proptest_config(config(12))]

    #[test]
    fn both_propagators_are_unitary(psi in random_state(), c in 0.0..0.1f64) {
        let g = small_grid();
        let h = HamiltonianSpec::build(&g, 1.0, |x| c * x * x).unwrap();
        for cfg in [PropagatorConfig::spectral(1e-3), PropagatorConfig::crank_nicolson(1e-3)] {
            let out = evolve(&psi, &h, 10.0, &unguarded(cfg)).unwrap();
            prop_assert!((out.norm_sqr() - psi.norm_sqr()).abs() < 1e-10);
        }
    }

    #[test]
    fn crank_nicolson_is_time_reversible(psi in random_state(), t in 0.1..5.0f64) {
        let g = small_grid();
        let h = HamiltonianSpec::build(&g, 1.0, |x| (0.5 * x).sin()).unwrap();
        let cfg = unguarded(PropagatorConfig::crank_nicolson(0.01));
        let forward = evolve(&psi, &h, t, &cfg).unwrap();
        let back = evolve(&forward, &h, -t, &cfg).unwrap();
        prop_assert!(back.distance(&psi).unwrap() < 1e-8);
    }

    #[test]
    fn unmeasured_energy_is_conserved(psi in random_state(), t in 0.5..5.0f64) {
        let g = small_grid();
        let h = HamiltonianSpec::build(&g, 1.0, |x| 0.05 * x * x).unwrap();
        let cfg = unguarded(PropagatorConfig::crank_nicolson(0.01));
        let out = evolve(&psi, &h, t, &cfg).unwrap();
        let e0 = h.lattice_expectation(&psi).unwrap().re;
        let e1 = h.lattice_expectation(&out).unwrap().re;
        prop_assert!((e1 - e0).abs() <= 1e-8 * e0.abs());
    }

    #[test]
    fn decomposition_matches_direct_quadrature(x0 in 0.2..0.8f64, s in 0.15..0.5f64, k in -4.0..4.0f64) {
        let m = 0.5;
        let g = SpatialGrid::new(-0.5, 1.5, 2048).unwrap();
        let r = Region::between(&g, 0.0, 1.0).unwrap();
        let f = |x: f64| Complex64::from_polar((-(x - x0).powi(2) / (4.0 * s * s)).exp(), k * x);
        let mut psi = WaveFunction::from_fn(g, f);
        r.clip(&mut psi).unwrap();
        let d = energy_decomposition(&psi, &r, m, &DEFAULT_EPSILONS).unwrap();
        prop_assert!(d.bulk_a >= 0.0);
        // oracle: -1/2m int_0^1 psi* psi'' with the analytic second derivative
        let n = 4000;
        let integrand: Vec<Complex64> = (0..=n)
            .map(|i| {
                let x = i as f64 / n as f64;
                let u = Complex64::new(-(x - x0) / (2.0 * s * s), k);
                f(x).conj() * (u * u - 1.0 / (2.0 * s * s)) * f(x)
            })
            .collect();
        let re: Vec<f64> = integrand.iter().map(|z| z.re).collect();
        let im: Vec<f64> = integrand.iter().map(|z| z.im).collect();
        let h = 1.0 / n as f64;
        let direct = Complex64::new(simpson(&re, h), simpson(&im, h)) * (-1.0 / (2.0 * m));
        prop_assert!((d.expectation - direct).norm() < 1e-3 * (1.0 + direct.norm()),
            "decomposition {} vs quadrature {}", d.expectation, direct);
    }

    #[test]
    fn protocol_record_invariants(x0 in -15.0..-6.0f64, sigma in 1.0..2.0f64, k0 in -1.0..3.0f64,
                                  dt_index in 0usize..3) {
        let g = SpatialGrid::new(-30.0, 30.0, 512).unwrap();
        let h = HamiltonianSpec::free(&g, 1.0).unwrap();
        let region = Region::left_of(&g, 0.0).unwrap();
        let psi0 = truncated_state(&region, &gaussian_packet(&g, x0, sigma, k0).unwrap()).unwrap();
        let delta_t = [0.1, 0.2, 0.5][dt_index];
        let pi = Projector::Spatial(region);
        let cfg = ProtocolConfig::with_max_step(pi.clone(), delta_t, 20, "spectral", 0.05).storing_states();
        let rec = run_protocol(&psi0, &h, &cfg).unwrap();

        // V^0 acts as the projector
        let v0 = pi.apply(&psi0).unwrap();
        prop_assert!((rec.survival[0] - v0.norm_sqr()).abs() < 1e-14);
        prop_assert!(rec.states.as_ref().unwrap()[0].distance(&v0.normalized()).unwrap() < 1e-12);

        let mut product = rec.survival[0];
        for k in 1..rec.survival.len() {
            let (p, q) = (rec.conditional_click[k], rec.conditional_no_click[k]);
            prop_assert!((p + q - 1.0).abs() < 1e-15);
            prop_assert!(rec.survival[k] <= rec.survival[k - 1]);
            product *= q;
            prop_assert!((rec.survival[k] - product).abs() < 1e-10);
            prop_assert!(rec.breakdowns.iter().any(|b| b.step == k) == !(0.0..=1.0).contains(&q));
        }
    }

    #[test]
    fn arrival_series_invariants(x0 in -12.0..-4.0f64, k0 in -2.0..3.0f64, probe_dt in 1e-3..1e-1f64) {
        let g = SpatialGrid::new(-30.0, 30.0, 1024).unwrap();
        let h = HamiltonianSpec::free(&g, 1.0).unwrap();
        let region = Region::left_of(&g, 0.0).unwrap();
        let psi0 = gaussian_packet(&g, x0, 1.5, k0).unwrap();
        let cfg = PropagatorConfig::crank_nicolson(0.01).with_guard(LeakGuard::for_region(&region));
        let s = arrival_series(&psi0, &h, &region, 3.0, 0.05, &cfg).unwrap();
        for i in 0..s.times.len() {
            let (a, d) = (s.arrival_density[i], s.departure_density[i]);
            prop_assert!(a >= 0.0 && d >= 0.0 && a * d == 0.0);
            prop_assert!((s.region_prob[i] + s.complement_prob[i] - 1.0).abs() < 1e-10);
            prop_assert!(s.region_prob[i] >= 0.0 && s.region_prob[i] <= 1.0 + 1e-12);
            if s.region_prob[i] > 1e-6 {
                prop_assert!((s.hazard[i] * s.region_prob[i] - s.flux[i]).abs() <= 1e-12 * (1.0 + s.flux[i].abs()));
            }
        }
        for &t in &[0.5, 1.5, 3.0] {
            let state = evolve(&psi0, &h, t, &cfg).unwrap();
            let probe = breakdown_probe(&state, &region, 1.0, probe_dt).unwrap();
            if (probe.flux * probe_dt).abs() > 1e-10 {
                prop_assert_eq!((probe.p_bar_raw - 1.0).signum(), -probe.flux.signum());
            }
        }
    }
}
