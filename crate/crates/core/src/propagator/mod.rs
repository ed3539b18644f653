//! Unitary time evolution `e^{-iHt}` behind the [`Propagator`] trait, the
//! name-keyed [`PropagatorRegistry`], and the boundary-term diagnostics of
//! `<psi|H|psi>` for truncated states.

mod crank_nicolson;
mod decomposition;
mod spectral;

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

pub use crank_nicolson::CrankNicolson;
pub use decomposition::{energy_decomposition, magic_residual, EnergyDecomposition, DEFAULT_EPSILONS};
pub use spectral::SplitStepFourier;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::region::{Region, Side};
use crate::wavefunction::WaveFunction;

/// One fixed-size step of `e^{-iHh}`. Implementations keep only immutable
/// precomputed data; work buffers are allocated per call, so a propagator
/// can be shared across threads.
pub trait Propagator: Send + Sync {
    fn name(&self) -> &'static str;

    fn step_size(&self) -> f64;

    fn step(&self, psi: &mut [Complex64]);

    /// `Re <psi|H|psi>` with the kinetic operator this method propagates.
    fn energy(&self, psi: &WaveFunction) -> f64;
}

pub type PropagatorFactory = Arc<dyn Fn(&HamiltonianSpec, f64) -> Result<Box<dyn Propagator>> + Send + Sync>;

/// Propagator constructors keyed by method name.
#[derive(Clone)]
pub struct PropagatorRegistry {
    factories: BTreeMap<String, PropagatorFactory>,
}

impl Default for PropagatorRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

impl PropagatorRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    /// `spectral` and `crank_nicolson`.
    pub fn with_builtins() -> Self {
        let mut r = Self::empty();
        r.register(SplitStepFourier::NAME, |h, step| {
            Ok(Box::new(SplitStepFourier::new(h, step)?) as Box<dyn Propagator>)
        });
        r.register(CrankNicolson::NAME, |h, step| {
            Ok(Box::new(CrankNicolson::new(h, step)?) as Box<dyn Propagator>)
        });
        r
    }

    /// Adds or replaces a method.
    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&HamiltonianSpec, f64) -> Result<Box<dyn Propagator>> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Arc::new(factory));
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    pub fn build(&self, name: &str, h: &HamiltonianSpec, step: f64) -> Result<Box<dyn Propagator>> {
        let factory = self
            .factories
            .get(name)
            .ok_or_else(|| Error::UnknownPropagator(name.to_string()))?;
        factory(h, step)
    }
}

/// Rejects evolution once more than `threshold` probability sits in the
/// outer `fraction` of the grid on a guarded edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeakGuard {
    pub threshold: f64,
    pub fraction: f64,
    pub left: bool,
    pub right: bool,
}

impl Default for LeakGuard {
    fn default() -> Self {
        Self::both_edges()
    }
}

impl LeakGuard {
    pub fn both_edges() -> Self {
        Self {
            threshold: 1e-6,
            fraction: 0.05,
            left: true,
            right: true,
        }
    }

    pub fn disabled() -> Self {
        Self {
            left: false,
            right: false,
            ..Self::both_edges()
        }
    }

    /// Guards only the edges behind the region's artificial half-line cuts,
    /// or both edges when the region has none.
    pub fn for_region(region: &Region) -> Self {
        let cuts = region.artificial_cuts();
        if cuts.is_empty() {
            return Self::both_edges();
        }
        Self {
            left: cuts.contains(&Side::Left),
            right: cuts.contains(&Side::Right),
            ..Self::both_edges()
        }
    }

    pub fn check(&self, psi: &WaveFunction, time: f64) -> Result<()> {
        if !(self.left || self.right) {
            return Ok(());
        }
        let (l, r) = psi.edge_probabilities(self.fraction);
        let leaked = if self.left { l } else { 0.0 } + if self.right { r } else { 0.0 };
        if leaked > self.threshold {
            return Err(Error::BoundaryLeak {
                time,
                probability: leaked,
            });
        }
        Ok(())
    }
}

/// Method selection and step size for time evolution.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorConfig {
    pub method: String,
    pub dt: f64,
    pub substeps_per_dt: usize,
    pub leak_guard: LeakGuard,
}

impl PropagatorConfig {
    pub fn new(method: &str, dt: f64) -> Self {
        Self {
            method: method.to_string(),
            dt,
            substeps_per_dt: 1,
            leak_guard: LeakGuard::both_edges(),
        }
    }

    pub fn spectral(dt: f64) -> Self {
        Self::new(SplitStepFourier::NAME, dt)
    }

    pub fn crank_nicolson(dt: f64) -> Self {
        Self::new(CrankNicolson::NAME, dt)
    }

    pub fn with_guard(mut self, guard: LeakGuard) -> Self {
        self.leak_guard = guard;
        self
    }

    pub fn with_substeps(mut self, substeps: usize) -> Self {
        self.substeps_per_dt = substeps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "propagator.dt",
                reason: format!("must be > 0, got {}", self.dt),
            });
        }
        if self.substeps_per_dt == 0 {
            return Err(Error::InvalidParameter {
                name: "propagator.substeps_per_dt",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }

    /// Number of internal steps covering `interval`: the fewest multiples of
    /// `substeps_per_dt` with step size not above `dt / substeps_per_dt`.
    pub fn steps_for(&self, interval: f64) -> usize {
        let blocks = ((interval.abs() / self.dt) - 1e-9).ceil().max(1.0) as usize;
        blocks * self.substeps_per_dt
    }
}

/// A propagator prepared for one fixed interval, reusable across calls.
pub struct Evolution {
    propagator: Box<dyn Propagator>,
    steps: usize,
    interval: f64,
    guard: LeakGuard,
}

impl Evolution {
    pub fn new(
        registry: &PropagatorRegistry,
        h: &HamiltonianSpec,
        config: &PropagatorConfig,
        interval: f64,
    ) -> Result<Self> {
        config.validate()?;
        if !interval.is_finite() {
            return Err(Error::InvalidParameter {
                name: "t",
                reason: format!("must be finite, got {interval}"),
            });
        }
        let steps = if interval == 0.0 { 0 } else { config.steps_for(interval) };
        let step = if steps == 0 { 0.0 } else { interval / steps as f64 };
        Ok(Self {
            propagator: registry.build(&config.method, h, step)?,
            steps,
            interval,
            guard: config.leak_guard,
        })
    }

    pub fn interval(&self) -> f64 {
        self.interval
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn propagator(&self) -> &dyn Propagator {
        self.propagator.as_ref()
    }

    /// Advances `psi` by the prepared interval; `t_start` only labels errors.
    pub fn apply(&self, psi: &mut WaveFunction, t_start: f64) -> Result<()> {
        let h = self.propagator.step_size();
        for s in 0..self.steps {
            self.propagator.step(psi.amplitudes_mut());
            self.guard.check(psi, t_start + (s + 1) as f64 * h)?;
        }
        Ok(())
    }
}

/// `e^{-iHt} psi` with the builtin registry. Negative `t` runs backwards.
pub fn evolve(psi: &WaveFunction, h: &HamiltonianSpec, t: f64, config: &PropagatorConfig) -> Result<WaveFunction> {
    evolve_with(&PropagatorRegistry::with_builtins(), psi, h, t, config)
}

pub fn evolve_with(
    registry: &PropagatorRegistry,
    psi: &WaveFunction,
    h: &HamiltonianSpec,
    t: f64,
    config: &PropagatorConfig,
) -> Result<WaveFunction> {
    if psi.grid() != h.grid() {
        return Err(Error::GridMismatch);
    }
    let evolution = Evolution::new(registry, h, config, t)?;
    let mut out = psi.clone();
    evolution.apply(&mut out, 0.0)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::wavefunction::gaussian_packet;

    fn setup() -> (SpatialGrid, HamiltonianSpec, WaveFunction) {
        let g = SpatialGrid::new(-60.0, 30.0, 4096).unwrap();
        let h = HamiltonianSpec::free(&g, 1.0).unwrap();
        let psi = gaussian_packet(&g, -20.0, 2.0, 2.0).unwrap();
        (g, h, psi)
    }

    #[test]
    fn zero_time_is_identity() {
        let (_, h, psi) = setup();
        for cfg in [PropagatorConfig::spectral(0.01), PropagatorConfig::crank_nicolson(0.01)] {
            let out = evolve(&psi, &h, 0.0, &cfg).unwrap();
            assert_eq!(out, psi);
        }
    }

    #[test]
    fn unknown_method() {
        let (_, h, psi) = setup();
        let cfg = PropagatorConfig::new("leapfrog", 0.01);
        assert!(matches!(evolve(&psi, &h, 1.0, &cfg), Err(Error::UnknownPropagator(_))));
    }

    #[test]
    fn spectral_rejects_non_power_of_two() {
        let g = SpatialGrid::new(-30.0, 30.0, 3000).unwrap();
        let h = HamiltonianSpec::free(&g, 1.0).unwrap();
        let psi = gaussian_packet(&g, 0.0, 2.0, 0.0).unwrap();
        assert!(evolve(&psi, &h, 0.1, &PropagatorConfig::spectral(0.01)).is_err());
        assert!(evolve(&psi, &h, 0.1, &PropagatorConfig::crank_nicolson(0.01)).is_ok());
    }

    #[test]
    fn step_count_covers_interval() {
        let cfg = PropagatorConfig::spectral(0.1).with_substeps(3);
        assert_eq!(cfg.steps_for(1.0), 30);
        assert_eq!(cfg.steps_for(0.25), 9);
    }

    #[test]
    fn leak_into_edge_zone_is_reported() {
        let (_, h, psi) = setup();
        let r = evolve(&psi, &h, 30.0, &PropagatorConfig::spectral(0.5));
        assert!(matches!(r, Err(Error::BoundaryLeak { .. })));
        let unguarded = PropagatorConfig::spectral(0.5).with_guard(LeakGuard::disabled());
        assert!(evolve(&psi, &h, 30.0, &unguarded).is_ok());
    }

    #[test]
    fn registry_accepts_custom_method() {
        let (_, h, psi) = setup();
        let mut reg = PropagatorRegistry::with_builtins();
        reg.register("spectral_alias", |h, step| {
            Ok(Box::new(SplitStepFourier::new(h, step)?) as Box<dyn Propagator>)
        });
        assert!(reg.names().any(|n| n == "spectral_alias"));
        let a = evolve_with(&reg, &psi, &h, 1.0, &PropagatorConfig::new("spectral_alias", 0.1)).unwrap();
        let b = evolve(&psi, &h, 1.0, &PropagatorConfig::spectral(0.1)).unwrap();
        assert_eq!(a, b);
    }
}
