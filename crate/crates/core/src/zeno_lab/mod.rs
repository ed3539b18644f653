//! Experiment drivers: Zeno scans over the measurement interval, the
//! finite-dimensional impossibility check, conditional click-rate curves
//! and the three-way decay-rate cross-check.

mod finite_dim;
mod gamma;

pub use finite_dim::{finite_dim_impossibility, random_hermitian, random_trials, FiniteDimCheck};
pub use gamma::{gamma_crosscheck, GammaCrossCheck};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::measurement::{
    find_plateau, hazard_rate, run_protocol, Plateau, ProtocolConfig, PLATEAU_MIN_LEN, PLATEAU_TOLERANCE,
};
use crate::numerics::fit_line;
use crate::region::{Projector, Region};
use crate::wavefunction::WaveFunction;

/// Propagator choice shared by the scan points.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanPropagator {
    pub method: String,
    /// Upper bound on the propagator step; the step divides each `delta_t`.
    pub max_dt: f64,
}

impl ScanPropagator {
    pub fn new(method: &str, max_dt: f64) -> Self {
        Self {
            method: method.to_string(),
            max_dt,
        }
    }
}

/// Power-law fit `loss = c * delta_t^exponent` in log-log coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub rms: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZenoScanResult {
    pub t_fixed: f64,
    pub delta_t_values: Vec<f64>,
    pub survival_at_t: Vec<f64>,
    /// `1 - p_bar(t_1 | t_0)` at each `delta_t`.
    pub first_step_loss: Vec<f64>,
    pub fitted_small_dt_exponent: Option<ExponentFit>,
    pub plateau: Option<Plateau>,
}

impl ZenoScanResult {
    /// The detected plateau, or [`Error::NoPlateau`].
    pub fn plateau(&self) -> Result<Plateau> {
        self.plateau.ok_or(Error::NoPlateau)
    }

    /// `(delta_t_lo, delta_t_hi)` spanned by the plateau.
    pub fn plateau_window(&self) -> Option<(f64, f64)> {
        self.plateau.map(|p| {
            let a = self.delta_t_values[p.start];
            let b = self.delta_t_values[p.end];
            (a.min(b), a.max(b))
        })
    }
}

/// Fits `log(loss)` against `log(delta_t)` over points with positive loss.
pub fn fit_exponent(delta_t: &[f64], loss: &[f64]) -> Option<ExponentFit> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = delta_t
        .iter()
        .zip(loss)
        .filter(|(_, &l)| l > 1e-15)
        .map(|(d, l)| (d.ln(), l.ln()))
        .unzip();
    if xs.len() < 2 {
        return None;
    }
    let (exponent, log_prefactor, rms) = fit_line(&xs, &ys);
    Some(ExponentFit {
        exponent,
        log_prefactor,
        rms,
        points: xs.len(),
    })
}

/// Survival at `t_fixed` for each measurement interval, in parallel.
/// Every `delta_t` must divide `t_fixed`.
pub fn zeno_scan(
    psi0: &WaveFunction,
    h: &HamiltonianSpec,
    projector: &Projector,
    t_fixed: f64,
    delta_t_list: &[f64],
    propagator: &ScanPropagator,
) -> Result<ZenoScanResult> {
    if delta_t_list.is_empty() {
        return Err(Error::InvalidParameter {
            name: "run.delta_t_list",
            reason: "empty".into(),
        });
    }
    let points = delta_t_list
        .par_iter()
        .map(|&dt| {
            let k = (t_fixed / dt).round();
            if k < 1.0 || (k * dt - t_fixed).abs() > 1e-9 * t_fixed {
                return Err(Error::InvalidParameter {
                    name: "run.delta_t_list",
                    reason: format!("{dt} does not divide t = {t_fixed}"),
                });
            }
            let cfg =
                ProtocolConfig::with_max_step(projector.clone(), dt, k as usize, &propagator.method, propagator.max_dt);
            let r = run_protocol(psi0, h, &cfg)?;
            let survival = if r.underflow.is_some() {
                0.0
            } else {
                r.survival[k as usize]
            };
            let loss = r.conditional_click.get(1).copied().unwrap_or(1.0);
            Ok((survival, loss))
        })
        .collect::<Result<Vec<_>>>()?;
    let (survival_at_t, first_step_loss): (Vec<f64>, Vec<f64>) = points.into_iter().unzip();
    Ok(ZenoScanResult {
        t_fixed,
        delta_t_values: delta_t_list.to_vec(),
        fitted_small_dt_exponent: fit_exponent(delta_t_list, &first_step_loss),
        plateau: find_plateau(&survival_at_t, PLATEAU_TOLERANCE, PLATEAU_MIN_LEN),
        survival_at_t,
        first_step_loss,
    })
}

/// Conditional click rate `p(t_k | t_{k-1}) / delta_t` over time.
#[derive(Debug, Clone, PartialEq)]
pub struct GamblerCurve {
    pub times: Vec<f64>,
    pub rate: Vec<f64>,
    pub survival: Vec<f64>,
}

impl GamblerCurve {
    /// Longest run over which the rate strictly increases, as `(start, end)`
    /// indices, inclusive.
    pub fn longest_increase(&self) -> (usize, usize) {
        let (mut best, mut start) = ((0, 0), 0);
        for i in 1..self.rate.len() {
            if self.rate[i] <= self.rate[i - 1] {
                start = i;
            }
            if i - start > best.1 - best.0 {
                best = (start, i);
            }
        }
        best
    }
}

fn curve(psi0: &WaveFunction, h: &HamiltonianSpec, cfg: &ProtocolConfig) -> Result<GamblerCurve> {
    let record = run_protocol(psi0, h, cfg)?;
    let hazard = hazard_rate(&record);
    Ok(GamblerCurve {
        times: hazard.times,
        rate: hazard.rate,
        survival: record.survival[1..].to_vec(),
    })
}

fn steps_to(t_max: f64, delta_t: f64) -> usize {
    (t_max / delta_t + 1e-9).floor() as usize
}

/// Click-rate curve of the spatial no-click protocol for `region`.
pub fn gambler_curve(
    psi0: &WaveFunction,
    h: &HamiltonianSpec,
    region: &Region,
    delta_t: f64,
    t_max: f64,
    propagator: &ScanPropagator,
) -> Result<GamblerCurve> {
    let cfg = ProtocolConfig::with_max_step(
        Projector::Spatial(region.clone()),
        delta_t,
        steps_to(t_max, delta_t),
        &propagator.method,
        propagator.max_dt,
    );
    curve(psi0, h, &cfg)
}

/// Click-rate curve when every no-click outcome resets the system to
/// `psi0` (rank-one projector onto `psi0`).
pub fn roulette_curve(
    psi0: &WaveFunction,
    h: &HamiltonianSpec,
    delta_t: f64,
    t_max: f64,
    propagator: &ScanPropagator,
) -> Result<GamblerCurve> {
    let cfg = ProtocolConfig::with_max_step(
        Projector::rank_one(psi0.clone())?,
        delta_t,
        steps_to(t_max, delta_t),
        &propagator.method,
        propagator.max_dt,
    );
    curve(&psi0.clone().normalized(), h, &cfg)
}
