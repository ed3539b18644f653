//! The self-test must notice a broken propagator registered under a
//! built-in name.

use num_complex::Complex64;
use zenoflux::propagator::{Propagator, SplitStepFourier};
use zenoflux::{PropagatorRegistry, WaveFunction};
use zenoflux_cli::run_self_test;

/// The real split-step method with every step inflating amplitudes slightly.
struct Inflating(SplitStepFourier);

impl Propagator for Inflating {
    fn name(&self) -> &'static str {
        "spectral"
    }

    fn step_size(&self) -> f64 {
        self.0.step_size()
    }

    fn step(&self, psi: &mut [Complex64]) {
        self.0.step(psi);
        psi.iter_mut().for_each(|c| *c *= 1.0 + 1e-9);
    }

    fn energy(&self, psi: &WaveFunction) -> f64 {
        self.0.energy(psi)
    }
}

fn report_for(registry: &PropagatorRegistry) -> (zenoflux_cli::SelfTestReport, String) {
    let mut text = Vec::new();
    let report = run_self_test(registry, &mut text);
    (report, String::from_utf8(text).unwrap())
}

#[test]
fn clean_registry_passes() {
    let (report, text) = report_for(&PropagatorRegistry::with_builtins());
    assert!(report.passed(), "{text}");
}

#[test]
fn corrupted_spectral_propagator_fails_unitarity() {
    let mut registry = PropagatorRegistry::with_builtins();
    registry.register("spectral", |h, step| {
        Ok(Box::new(Inflating(SplitStepFourier::new(h, step)?)) as Box<dyn Propagator>)
    });
    let (report, text) = report_for(&registry);
    assert!(!report.passed());
    let unitarity = report.outcome("unitarity").unwrap();
    let msg = unitarity.result.as_ref().unwrap_err();
    assert!(msg.starts_with("spectral"), "{msg}");
    assert!(text.contains("[FAIL] unitarity"), "{text}");
    // checks that never touch the spectral method are unaffected
    assert!(report.outcome("grid_spacing").unwrap().result.is_ok());
    assert!(report.outcome("crank_nicolson_reversibility").unwrap().result.is_ok());
}

#[test]
fn missing_method_fails_without_panicking() {
    let mut registry = PropagatorRegistry::empty();
    registry.register("spectral", |h, step| {
        Ok(Box::new(SplitStepFourier::new(h, step)?) as Box<dyn Propagator>)
    });
    let (report, text) = report_for(&registry);
    let msg = report
        .outcome("crank_nicolson_reversibility")
        .unwrap()
        .result
        .as_ref()
        .unwrap_err();
    assert!(msg.contains("crank_nicolson"), "{msg}");
    assert!(!text.contains("panicked"), "{text}");
}
