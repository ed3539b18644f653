//! Fast built-in checks: the trivial examples plus cheap invariants.

use std::io::Write;
use std::time::Instant;

use num_complex::Complex64;
use zenoflux::arrival::{arrival_integral, arrival_series_with, boundary_flux, breakdown_probe, probability_current};
use zenoflux::measurement::{
    click_time_sampler, hazard_rate, run_protocol, step_v, survival_closed_form, ClickSample, ProtocolConfig,
};
use zenoflux::propagator::{energy_decomposition, evolve_with, magic_residual, LeakGuard, DEFAULT_EPSILONS};
use zenoflux::zeno_lab::{finite_dim_impossibility, zeno_scan, ScanPropagator};
use zenoflux::{
    gaussian_packet, polar_decompose, truncated_state, Error, HamiltonianSpec, Projector, PropagatorConfig,
    PropagatorRegistry, Region, SpatialGrid, WaveFunction,
};

type CheckResult = std::result::Result<(), String>;

pub struct Check {
    pub name: &'static str,
    run: fn(&PropagatorRegistry) -> CheckResult,
}

#[derive(Debug)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub result: CheckResult,
    pub seconds: f64,
}

#[derive(Debug)]
pub struct SelfTestReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.result.is_ok())
    }

    pub fn outcome(&self, name: &str) -> Option<&CheckOutcome> {
        self.outcomes.iter().find(|o| o.name == name)
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> CheckResult {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn num<T>(r: zenoflux::Result<T>) -> std::result::Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn small() -> (SpatialGrid, HamiltonianSpec) {
    let g = SpatialGrid::new(-20.0, 20.0, 256).unwrap();
    (g, HamiltonianSpec::free(&g, 1.0).unwrap())
}

pub const CHECKS: &[Check] = &[
    Check {
        name: "grid_spacing",
        run: grid_spacing,
    },
    Check {
        name: "gaussian_packet",
        run: gaussian,
    },
    Check {
        name: "truncated_state",
        run: truncation,
    },
    Check {
        name: "projectors",
        run: projectors,
    },
    Check {
        name: "polar_form",
        run: polar,
    },
    Check {
        name: "hamiltonian_specs",
        run: hamiltonians,
    },
    Check {
        name: "zero_time_evolution",
        run: zero_time,
    },
    Check {
        name: "unitarity",
        run: unitarity,
    },
    Check {
        name: "crank_nicolson_reversibility",
        run: reversibility,
    },
    Check {
        name: "boundary_term_b2",
        run: boundary_term,
    },
    Check {
        name: "magic_residual",
        run: magic,
    },
    Check {
        name: "no_click_step",
        run: no_click_step,
    },
    Check {
        name: "protocol_records",
        run: protocol_records,
    },
    Check {
        name: "click_sampler",
        run: sampler,
    },
    Check {
        name: "current_and_flux",
        run: current_and_flux,
    },
    Check {
        name: "arrival_series",
        run: arrival,
    },
    Check {
        name: "breakdown_probe",
        run: probe,
    },
    Check {
        name: "zeno_identity_scan",
        run: identity_scan,
    },
    Check {
        name: "finite_dimension",
        run: finite_dim,
    },
];

/// Runs every check with `propagators`, printing one status line per check.
pub fn run_self_test(propagators: &PropagatorRegistry, out: &mut impl Write) -> SelfTestReport {
    let mut outcomes = Vec::new();
    for check in CHECKS {
        let start = Instant::now();
        let result = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| (check.run)(propagators)))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let seconds = start.elapsed().as_secs_f64();
        let status = if result.is_ok() { "PASS" } else { "FAIL" };
        let _ = match &result {
            Ok(()) => writeln!(out, "[{status}] {} ({seconds:.2}s)", check.name),
            Err(e) => writeln!(out, "[{status}] {} ({seconds:.2}s): {e}", check.name),
        };
        outcomes.push(CheckOutcome {
            name: check.name,
            result,
            seconds,
        });
    }
    let report = SelfTestReport { outcomes };
    let failed = report.outcomes.iter().filter(|o| o.result.is_err()).count();
    let _ = writeln!(
        out,
        "self-test: {} passed, {failed} failed",
        report.outcomes.len() - failed
    );
    report
}

fn grid_spacing(_: &PropagatorRegistry) -> CheckResult {
    let a = num(SpatialGrid::new(-50.0, 50.0, 1024))?;
    let b = num(SpatialGrid::new(-50.0, 50.0, 2048))?;
    ensure((a.dx() - 100.0 / 1024.0).abs() < 1e-15, || format!("dx = {}", a.dx()))?;
    ensure(b.dx() == a.dx() / 2.0, || "doubling n_points must halve dx".into())?;
    ensure(
        matches!(SpatialGrid::new(0.0, 1.0, 8), Err(Error::InvalidGrid(_))),
        || "n = 8 accepted".into(),
    )
}

fn gaussian(_: &PropagatorRegistry) -> CheckResult {
    let g = num(SpatialGrid::new(-60.0, 30.0, 4096))?;
    let psi = num(gaussian_packet(&g, -20.0, 2.0, 2.0))?;
    ensure((psi.norm_sqr() - 1.0).abs() < 1e-12, || {
        format!("norm {}", psi.norm_sqr())
    })?;
    let still = num(gaussian_packet(&g, -20.0, 2.0, 0.0))?;
    let jmax = probability_current(&still, 1.0)
        .iter()
        .fold(0.0f64, |m, j| m.max(j.abs()));
    ensure(jmax < 1e-12, || format!("current {jmax} for a real packet"))
}

fn truncation(_: &PropagatorRegistry) -> CheckResult {
    let g = num(SpatialGrid::new(-0.5, 1.5, 256))?;
    let r = num(Region::between(&g, 0.0, 1.0))?;
    let box_state = num(truncated_state(
        &r,
        &WaveFunction::from_fn(g, |_| Complex64::new(1.0, 0.0)),
    ))?;
    let inside: Vec<f64> = (0..g.len())
        .filter(|&i| r.contains(i))
        .map(|i| box_state.amplitudes()[i].norm())
        .collect();
    let spread = inside.iter().cloned().fold(0.0, f64::max) - inside.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(spread < 1e-15 && (box_state.norm_sqr() - 1.0).abs() < 1e-12, || {
        "box state not uniform".into()
    })?;
    let far = num(gaussian_packet(
        &num(SpatialGrid::new(-20.0, 20.0, 256))?,
        10.0,
        1.0,
        0.0,
    ))?;
    let g2 = *far.grid();
    let r2 = num(Region::between(&g2, -15.0, -10.0))?;
    ensure(
        matches!(truncated_state(&r2, &far), Err(Error::EmptyOverlap { .. })),
        || "overlap not rejected".into(),
    )
}

fn projectors(_: &PropagatorRegistry) -> CheckResult {
    let (g, _) = small();
    let region = num(Region::left_of(&g, 0.0))?;
    let inside = num(gaussian_packet(&g, -9.0, 0.6, 1.0))?;
    let pi = Projector::Spatial(region);
    let kept = num(pi.apply(&inside))?;
    ensure(num(kept.distance(&inside))? < 1e-10, || {
        "state inside the region was changed".into()
    })?;
    let rank = num(Projector::rank_one(inside.clone()))?;
    ensure(num(num(rank.apply(&inside))?.distance(&inside))? < 1e-12, || {
        "rank-one projector moved its state".into()
    })?;
    let split = num(gaussian_packet(&g, 0.0, 2.0, 0.0))?;
    let sum = num(pi.apply(&split))?.norm_sqr() + num(pi.apply_complement(&split))?.norm_sqr();
    ensure((sum - 1.0).abs() < 1e-12, || format!("complementarity {sum}"))
}

fn polar(_: &PropagatorRegistry) -> CheckResult {
    let (g, _) = small();
    let real = WaveFunction::from_fn(g, |x| Complex64::new((-x * x / 8.0).exp(), 0.0));
    let f = polar_decompose(&real, None);
    ensure(f.phase.iter().all(|&s| s == 0.0), || {
        "real positive state has phase".into()
    })?;
    let node = WaveFunction::from_fn(g, |x| Complex64::new(x * (-x * x / 8.0).exp(), 0.0));
    let f = polar_decompose(&node, None);
    ensure(!f.phase_defined[g.nearest_index(0.0)], || {
        "phase defined at a node".into()
    })
}

fn hamiltonians(_: &PropagatorRegistry) -> CheckResult {
    let (g, _) = small();
    let h = num(HamiltonianSpec::build(&g, 1.0, |x| 0.5 * x * x))?;
    ensure(h.potential()[g.nearest_index(2.0)] > 1.9, || {
        "harmonic potential".into()
    })?;
    ensure(
        matches!(
            HamiltonianSpec::build(&g, 1.0, |x| if x > 0.0 { f64::INFINITY } else { 0.0 }),
            Err(Error::NonFinitePotential { .. })
        ),
        || "infinite potential accepted".into(),
    )
}

fn zero_time(reg: &PropagatorRegistry) -> CheckResult {
    let (g, h) = small();
    let psi = num(gaussian_packet(&g, -5.0, 1.0, 1.0))?;
    let out = num(evolve_with(reg, &psi, &h, 0.0, &PropagatorConfig::spectral(0.01)))?;
    ensure(out == psi, || "t = 0 changed the state".into())
}

fn unitarity(reg: &PropagatorRegistry) -> CheckResult {
    let (g, h) = small();
    let psi = num(gaussian_packet(&g, -5.0, 1.0, 1.0))?;
    for cfg in [PropagatorConfig::spectral(1e-3), PropagatorConfig::crank_nicolson(1e-3)] {
        // 10^4 steps; the spreading packet reaches the edges, which is fine here
        let cfg = cfg.with_guard(LeakGuard::disabled());
        let out = num(evolve_with(reg, &psi, &h, 10.0, &cfg))?;
        let drift = (out.norm_sqr() - 1.0).abs();
        ensure(drift < 1e-10, || format!("{}: |norm^2 - 1| = {drift:.3e}", cfg.method))?;
    }
    Ok(())
}

fn reversibility(reg: &PropagatorRegistry) -> CheckResult {
    let (g, _) = small();
    let h = num(HamiltonianSpec::build(&g, 1.0, |x| 0.02 * x * x))?;
    let psi = num(gaussian_packet(&g, -3.0, 1.0, 2.0))?;
    let cfg = PropagatorConfig::crank_nicolson(0.01).with_guard(LeakGuard::disabled());
    let back = num(evolve_with(
        reg,
        &num(evolve_with(reg, &psi, &h, 2.0, &cfg))?,
        &h,
        -2.0,
        &cfg,
    ))?;
    let d = num(back.distance(&psi))?;
    ensure(d < 1e-8, || format!("round trip error {d:.3e}"))
}

fn boundary_term(_: &PropagatorRegistry) -> CheckResult {
    let g = num(SpatialGrid::new(-0.5, 1.5, 2048))?;
    let r = num(Region::between(&g, 0.0, 1.0))?;
    let real = num(truncated_state(
        &r,
        &WaveFunction::from_fn(g, |x| Complex64::new(2.0 + x, 0.0)),
    ))?;
    let b2 = num(energy_decomposition(&real, &r, 1.0, &DEFAULT_EPSILONS))?.boundary_b2;
    ensure(b2.abs() < 1e-8, || format!("real state B2 = {b2:.3e}"))?;
    let plane = num(truncated_state(
        &r,
        &WaveFunction::from_fn(g, |x| Complex64::from_polar(1.0, 2.0 * x)),
    ))?;
    let d = num(energy_decomposition(&plane, &r, 1.0, &DEFAULT_EPSILONS))?;
    ensure(d.boundary_b2.abs() < 1e-6, || {
        format!("plane wave B2 = {:.3e}", d.boundary_b2)
    })?;
    ensure(d.bulk_a >= 0.0, || "negative bulk term".into())
}

fn magic(_: &PropagatorRegistry) -> CheckResult {
    let (g, h) = small();
    let pi = Projector::Spatial(num(Region::left_of(&g, 0.0))?);
    let inside = num(gaussian_packet(&g, -9.0, 0.6, 1.0))?;
    let r = num(magic_residual(&h, &pi, &inside))?;
    ensure(r < 1e-8, || format!("residual {r:.3e} for an interior probe"))?;
    let id = num(magic_residual(&h, &Projector::identity(&g), &inside))?;
    ensure(id == 0.0, || format!("identity residual {id}"))
}

fn no_click_step(reg: &PropagatorRegistry) -> CheckResult {
    let (g, h) = small();
    let psi = num(gaussian_packet(&g, -9.0, 0.6, 1.0))?;
    let cfg = PropagatorConfig::spectral(0.01);
    let v = num(step_v(&psi, &h, &Projector::identity(&g), 0.5, &cfg))?;
    let u = num(evolve_with(reg, &psi, &h, 0.5, &cfg))?;
    ensure(num(v.distance(&u))? < 1e-14, || {
        "identity step differs from evolution".into()
    })?;
    let pi = Projector::Spatial(num(Region::left_of(&g, 0.0))?);
    let kept = num(step_v(&psi, &h, &pi, 0.5, &cfg))?;
    ensure((kept.norm() - 1.0).abs() < 1e-10, || {
        format!("interior step lost norm {}", 1.0 - kept.norm())
    })
}

fn protocol_records(_: &PropagatorRegistry) -> CheckResult {
    let (g, h) = small();
    let psi = num(gaussian_packet(&g, -5.0, 1.0, 1.0))?;
    let ident = ProtocolConfig::with_max_step(Projector::identity(&g), 0.5, 6, "spectral", 0.05);
    let rec = num(run_protocol(&psi, &h, &ident))?;
    ensure(rec.survival.iter().all(|&p| (p - 1.0).abs() < 1e-12), || {
        "identity projector lost survival".into()
    })?;
    ensure(hazard_rate(&rec).rate.iter().all(|w| w.abs() < 1e-12), || {
        "identity projector has a hazard".into()
    })?;
    ensure(survival_closed_form(&[0.0, 1.0], &[0.0, 0.0], 1.0) == 1.0, || {
        "w = 0 closed form".into()
    })?;
    let gamma = 0.3;
    let closed = survival_closed_form(&[0.0, 5.0], &[gamma, gamma], 2.0);
    ensure((closed - (-gamma * 2.0f64).exp()).abs() < 1e-12, || {
        format!("constant-rate closed form {closed}")
    })
}

fn sampler(_: &PropagatorRegistry) -> CheckResult {
    let (g, h) = small();
    let psi = num(gaussian_packet(&g, -5.0, 1.0, 1.0))?;
    let ident = ProtocolConfig::with_max_step(Projector::identity(&g), 0.5, 4, "spectral", 0.05);
    let rec = num(run_protocol(&psi, &h, &ident))?;
    let samples = click_time_sampler(&rec, 1000, 1);
    ensure(samples.iter().all(|s| *s == ClickSample::Undetected), || {
        "click without decay".into()
    })?;
    ensure(samples == click_time_sampler(&rec, 1000, 1), || {
        "sampler not reproducible".into()
    })
}

fn current_and_flux(_: &PropagatorRegistry) -> CheckResult {
    let (g, _) = small();
    let region = num(Region::left_of(&g, 0.0))?;
    let far = num(gaussian_packet(&g, -9.0, 0.6, 1.0))?;
    let phi = num(boundary_flux(&far, &region, 1.0))?;
    ensure(phi.abs() < 1e-10, || format!("flux {phi:.3e} from a distant packet"))?;
    let left = num(gaussian_packet(&g, 0.0, 1.0, -2.0))?;
    ensure(num(boundary_flux(&left, &region, 1.0))? < 0.0, || {
        "left mover has positive flux".into()
    })?;
    ensure(num(Region::empty(&g).probability(&far))? == 0.0, || {
        "empty region has probability".into()
    })
}

fn arrival(reg: &PropagatorRegistry) -> CheckResult {
    let (g, h) = small();
    let region = num(Region::left_of(&g, 0.0))?;
    let psi = num(gaussian_packet(&g, -5.0, 1.0, 2.0))?;
    let cfg = PropagatorConfig::crank_nicolson(0.01).with_guard(LeakGuard::for_region(&region));
    let s = num(arrival_series_with(reg, &psi, &h, &region, 2.0, 0.05, &cfg))?;
    for i in 0..s.times.len() {
        let (a, d) = (s.arrival_density[i], s.departure_density[i]);
        ensure(a >= 0.0 && d >= 0.0 && a * d == 0.0, || {
            format!("clamping at t = {}", s.times[i])
        })?;
        let total = s.region_prob[i] + s.complement_prob[i];
        ensure((total - 1.0).abs() < 1e-10, || {
            format!("balance {total} at t = {}", s.times[i])
        })?;
    }
    ensure(num(arrival_integral(&s, 1.0, 1.0))? == 0.0, || {
        "empty window integral".into()
    })
}

fn probe(_: &PropagatorRegistry) -> CheckResult {
    let (g, _) = small();
    let region = num(Region::left_of(&g, 0.0))?;
    let inside = num(gaussian_packet(&g, -9.0, 0.6, 1.0))?;
    let p = num(breakdown_probe(&inside, &region, 1.0, 0.01))?;
    ensure((p.alpha - 1.0).abs() < 1e-8 && (p.p_bar_raw - 1.0).abs() < 1e-8, || {
        format!("{p:?}")
    })?;
    let left = num(gaussian_packet(&g, 0.5, 1.0, -2.0))?;
    let p = num(breakdown_probe(&left, &region, 1.0, 0.01))?;
    ensure(p.breakdown(), || format!("left mover not flagged: {p:?}"))
}

fn identity_scan(_: &PropagatorRegistry) -> CheckResult {
    let (g, h) = small();
    let psi = num(gaussian_packet(&g, -5.0, 1.0, 1.0))?;
    let scan = num(zeno_scan(
        &psi,
        &h,
        &Projector::identity(&g),
        1.0,
        &[0.5, 0.25],
        &ScanPropagator::new("spectral", 0.05),
    ))?;
    ensure(scan.survival_at_t.iter().all(|p| (p - 1.0).abs() < 1e-12), || {
        "identity scan decays".into()
    })
}

fn finite_dim(_: &PropagatorRegistry) -> CheckResult {
    let c = |re: f64| Complex64::new(re, 0.0);
    let x = nalgebra::DMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
    let r = num(finite_dim_impossibility(&x, &[true, false]))?;
    ensure(
        (r.commutator_norm - 2f64.sqrt()).abs() < 1e-12 && (r.magic_norm - 1.0).abs() < 1e-12,
        || format!("{r:?}"),
    )?;
    let id = nalgebra::DMatrix::<Complex64>::identity(3, 3);
    let r = num(finite_dim_impossibility(&id, &[true, false, true]))?;
    ensure(r.commutator_norm == 0.0 && r.magic_norm == 0.0, || format!("{r:?}"))
}
