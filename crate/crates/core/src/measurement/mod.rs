//! Repeated no-click projections `V = pi_bar e^{-iH dt}`: survival
//! probabilities, conditional probabilities and states, hazard rates and
//! Monte Carlo click times.

mod hazard;
mod sampler;

pub use hazard::{
    convergence_window, find_plateau, hazard_rate, survival_at, survival_closed_form, ConvergenceReport, Hazard,
    Plateau, ValidityWindow, PLATEAU_MIN_LEN, PLATEAU_TOLERANCE,
};
pub use sampler::{click_time_sampler, detection_cdf, ks_distance, ClickSample};

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::propagator::{evolve_with, Evolution, LeakGuard, PropagatorConfig, PropagatorRegistry};
use std::ops::Range;

use crate::region::{Projector, Side};
use crate::wavefunction::WaveFunction;

/// `pi_bar psi0 = psi0` is required to this accuracy.
pub const INITIAL_SUPPORT_TOLERANCE: f64 = 1e-10;
/// The protocol halts once the survival probability drops below this.
pub const UNDERFLOW_THRESHOLD: f64 = 1e-14;
/// A no-click probability above `1 + BREAKDOWN_EXCESS` is flagged.
pub const BREAKDOWN_EXCESS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub delta_t: f64,
    pub k_max: usize,
    pub projector: Projector,
    pub store_states: bool,
    pub propagator: PropagatorConfig,
}

impl ProtocolConfig {
    /// `propagator.dt` must divide `delta_t`.
    pub fn new(projector: Projector, delta_t: f64, k_max: usize, propagator: PropagatorConfig) -> Self {
        Self {
            delta_t,
            k_max,
            projector,
            store_states: false,
            propagator,
        }
    }

    /// Chooses the largest propagator step not above `max_dt` that divides
    /// `delta_t`.
    pub fn with_max_step(projector: Projector, delta_t: f64, k_max: usize, method: &str, max_dt: f64) -> Self {
        let sub = (delta_t / max_dt - 1e-9).ceil().max(1.0);
        Self::new(projector, delta_t, k_max, PropagatorConfig::new(method, delta_t / sub))
    }

    pub fn storing_states(mut self) -> Self {
        self.store_states = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta_t > 0.0 && self.delta_t.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "protocol.delta_t",
                reason: "must be > 0".into(),
            });
        }
        self.propagator.validate()?;
        let ratio = self.delta_t / self.propagator.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) || ratio.round() < 1.0 {
            return Err(Error::InvalidParameter {
                name: "protocol.delta_t",
                reason: format!("must be an integer multiple of propagator.dt = {}", self.propagator.dt),
            });
        }
        Ok(())
    }
}

/// `p_bar > 1` (or `< 0`) at a measurement step: the no-click formula has
/// left the interval of probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormulaBreakdown {
    pub step: usize,
    pub p_bar: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub delta_t: f64,
    /// `t_k = k delta_t`, `k = 0..=K`.
    pub times: Vec<f64>,
    /// `P_bar_k`; `survival[0] = ||pi_bar psi0||^2`.
    pub survival: Vec<f64>,
    /// `p_bar(t_k | t_{k-1})`; entry 0 is 1 by convention.
    pub conditional_no_click: Vec<f64>,
    /// `p(t_k | t_{k-1}) = 1 - p_bar`; entry 0 is 0.
    pub conditional_click: Vec<f64>,
    /// Normalized conditional states when requested.
    pub states: Option<Vec<WaveFunction>>,
    pub breakdowns: Vec<FormulaBreakdown>,
    /// Step at which the survival probability underflowed, if it did.
    pub underflow: Option<usize>,
    /// Unconditional probability removed beyond artificial half-line cuts.
    /// On a true half-line this probability would have stayed unclicked.
    pub cut_loss: f64,
    current: WaveFunction,
}

impl MeasurementRecord {
    /// Index of the last recorded step.
    pub fn last_step(&self) -> usize {
        self.times.len() - 1
    }

    /// Normalized conditional state after the last recorded step.
    pub fn current_state(&self) -> &WaveFunction {
        &self.current
    }

    pub fn has_breakdown(&self) -> bool {
        !self.breakdowns.is_empty()
    }

    /// Survival probability at time `t`, which must be a recorded `t_k`.
    pub fn survival_at(&self, t: f64) -> Option<f64> {
        let k = (t / self.delta_t).round();
        if k < 0.0 || (k * self.delta_t - t).abs() > 1e-9 * self.delta_t.max(t) {
            return None;
        }
        self.survival.get(k as usize).copied()
    }

    /// Detection probabilities `P_k = P_bar_{k-1} - P_bar_k`, `k >= 1`.
    pub fn detection_probabilities(&self) -> Vec<f64> {
        self.survival.windows(2).map(|w| w[0] - w[1]).collect()
    }
}

/// `pi_bar e^{-iH delta_t} psi`, unnormalized.
pub fn step_v(
    psi: &WaveFunction,
    h: &HamiltonianSpec,
    projector: &Projector,
    delta_t: f64,
    config: &PropagatorConfig,
) -> Result<WaveFunction> {
    let mut out = evolve_with(&PropagatorRegistry::with_builtins(), psi, h, delta_t, config)?;
    projector.apply_in_place(&mut out)?;
    Ok(out)
}

/// A prepared protocol: one propagator for `delta_t` and the projector.
pub struct Protocol {
    evolution: Evolution,
    projector: Projector,
    delta_t: f64,
    store_states: bool,
    cut_ranges: Vec<Range<usize>>,
}

impl Protocol {
    pub fn new(h: &HamiltonianSpec, config: &ProtocolConfig) -> Result<Self> {
        Self::with_registry(&PropagatorRegistry::with_builtins(), h, config)
    }

    pub fn with_registry(registry: &PropagatorRegistry, h: &HamiltonianSpec, config: &ProtocolConfig) -> Result<Self> {
        config.validate()?;
        if config.projector.grid() != h.grid() {
            return Err(Error::GridMismatch);
        }
        // Edge zones outside the region are cleared by every projection, so
        // they need no guard. Probability crossing an artificial cut is
        // removed like a click; it is tallied instead of aborting the run.
        let mut cut_ranges = Vec::new();
        let mut guard = config.propagator.leak_guard;
        if let Some(r) = config.projector.region() {
            let n = r.grid().len();
            let m = r.grid().edge_zone_points(guard.fraction);
            guard.left &= r.mask()[..m].iter().any(|&x| x);
            guard.right &= r.mask()[n - m..].iter().any(|&x| x);
            for side in r.artificial_cuts() {
                cut_ranges.push(match side {
                    Side::Left => 0..r.intervals()[0].start,
                    Side::Right => r.intervals()[r.intervals().len() - 1].end..n,
                });
            }
        }
        let prop = config.propagator.clone().with_guard(guard);
        Ok(Self {
            evolution: Evolution::new(registry, h, &prop, config.delta_t)?,
            projector: config.projector.clone(),
            delta_t: config.delta_t,
            store_states: config.store_states,
            cut_ranges,
        })
    }

    /// Record holding only `k = 0`. Requires `pi_bar psi0 = psi0`.
    pub fn start(&self, psi0: &WaveFunction) -> Result<MeasurementRecord> {
        let mut current = self.projector.apply(psi0)?;
        let residual = current.distance(psi0)?;
        if residual > INITIAL_SUPPORT_TOLERANCE {
            return Err(Error::InitialStateOutsideRegion { residual });
        }
        let p0 = current.norm_sqr();
        if p0 < UNDERFLOW_THRESHOLD {
            return Err(Error::SurvivalUnderflow { step: 0 });
        }
        current.normalize();
        Ok(MeasurementRecord {
            delta_t: self.delta_t,
            times: vec![0.0],
            survival: vec![p0],
            conditional_no_click: vec![1.0],
            conditional_click: vec![0.0],
            states: self.store_states.then(|| vec![current.clone()]),
            breakdowns: Vec::new(),
            underflow: None,
            cut_loss: 0.0,
            current,
        })
    }

    /// Appends up to `steps` measurements. Stops early, recording the step,
    /// if the survival probability underflows.
    pub fn advance(&self, record: &mut MeasurementRecord, steps: usize) -> Result<()> {
        if record.underflow.is_some() {
            return Ok(());
        }
        for _ in 0..steps {
            let k = record.last_step() + 1;
            let t_prev = record.times[k - 1];
            let mut next = record.current.clone();
            self.evolution.apply(&mut next, t_prev)?;
            let crossed: f64 = self
                .cut_ranges
                .iter()
                .map(|r| next.amplitudes()[r.clone()].iter().map(|a| a.norm_sqr()).sum::<f64>())
                .sum();
            record.cut_loss += record.survival[k - 1] * crossed * next.grid().dx();
            self.projector.apply_in_place(&mut next)?;
            let raw = next.norm_sqr();
            // roundoff above one is absorbed; larger excursions are flagged and kept
            let p_bar = if raw > 1.0 && raw <= 1.0 + BREAKDOWN_EXCESS {
                1.0
            } else {
                raw
            };
            if !(0.0..=1.0).contains(&p_bar) {
                record.breakdowns.push(FormulaBreakdown { step: k, p_bar });
            }
            let survival = record.survival[k - 1] * p_bar;
            record.times.push(k as f64 * self.delta_t);
            record.survival.push(survival);
            record.conditional_no_click.push(p_bar);
            record.conditional_click.push(1.0 - p_bar);
            if survival < UNDERFLOW_THRESHOLD || p_bar <= 0.0 {
                record.underflow = Some(k);
                return Ok(());
            }
            next.normalize();
            if let Some(states) = record.states.as_mut() {
                states.push(next.clone());
            }
            record.current = next;
        }
        Ok(())
    }
}

pub fn run_protocol(psi0: &WaveFunction, h: &HamiltonianSpec, config: &ProtocolConfig) -> Result<MeasurementRecord> {
    let protocol = Protocol::new(h, config)?;
    let mut record = protocol.start(psi0)?;
    protocol.advance(&mut record, config.k_max)?;
    Ok(record)
}

/// `V^k psi0 / ||V^k psi0||`.
pub fn conditional_state(record: &MeasurementRecord, k: usize) -> Result<WaveFunction> {
    if k > record.last_step() {
        return Err(Error::StateNotStored(k));
    }
    if record.survival[k] <= 1e-12 || record.underflow == Some(k) {
        return Err(Error::SurvivalUnderflow { step: k });
    }
    record
        .states
        .as_ref()
        .and_then(|s| s.get(k))
        .cloned()
        .ok_or(Error::StateNotStored(k))
}

/// `|| psi_c(t_k) - pi_bar psi(t_k) / ||pi_bar psi(t_k)|| ||` where `psi(t)`
/// is the unmeasured evolution of `psi0`.
pub fn passive_equivalence_residual(
    record: &MeasurementRecord,
    k: usize,
    psi0: &WaveFunction,
    h: &HamiltonianSpec,
    projector: &Projector,
    config: &PropagatorConfig,
) -> Result<f64> {
    let conditional = conditional_state(record, k)?;
    let guard = match projector.region() {
        Some(r) => LeakGuard::for_region(r),
        None => LeakGuard::both_edges(),
    };
    let unmeasured = evolve_with(
        &PropagatorRegistry::with_builtins(),
        psi0,
        h,
        record.times[k],
        &config.clone().with_guard(guard),
    )?;
    let mut projected = projector.apply(&unmeasured)?;
    let n = projected.normalize();
    if n < 1e-12 {
        return Err(Error::EmptyOverlap { norm: n });
    }
    conditional.distance(&projected)
}
