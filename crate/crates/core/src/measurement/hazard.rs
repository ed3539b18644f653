use rayon::prelude::*;

use super::{run_protocol, MeasurementRecord, ProtocolConfig};
use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::hamiltonian::HamiltonianSpec;
use crate::numerics::cumulative_trapezoid;
use crate::region::Projector;
use crate::wavefunction::WaveFunction;

pub const PLATEAU_TOLERANCE: f64 = 0.02;
pub const PLATEAU_MIN_LEN: usize = 3;

/// `w(t_k) = p(t_k | t_{k-1}) / delta_t` for `k >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Hazard {
    pub times: Vec<f64>,
    pub rate: Vec<f64>,
    /// Indices into `rate` where the rate is negative.
    pub negative: Vec<usize>,
}

pub fn hazard_rate(record: &MeasurementRecord) -> Hazard {
    let rate: Vec<f64> = record.conditional_click[1..]
        .iter()
        .map(|p| p / record.delta_t)
        .collect();
    let negative = rate
        .iter()
        .enumerate()
        .filter(|(_, &w)| w < 0.0)
        .map(|(i, _)| i)
        .collect();
    Hazard {
        times: record.times[1..].to_vec(),
        rate,
        negative,
    }
}

/// `exp(-int_0^t w)` by the trapezoidal rule; `w` is linearly interpolated
/// when `t` falls between samples. Samples beyond the range are held fixed.
pub fn survival_closed_form(times: &[f64], w: &[f64], t: f64) -> f64 {
    if times.is_empty() || t <= times[0] {
        return 1.0;
    }
    let cum = cumulative_trapezoid(times, w);
    let last = times.len() - 1;
    let integral = if t >= times[last] {
        cum[last] + w[last] * (t - times[last])
    } else {
        let j = times.partition_point(|&s| s <= t) - 1;
        let f = (t - times[j]) / (times[j + 1] - times[j]);
        let wt = w[j] + f * (w[j + 1] - w[j]);
        cum[j] + 0.5 * (t - times[j]) * (w[j] + wt)
    };
    (-integral).exp()
}

/// Measurement intervals for which projections neither resolve grid-scale
/// dynamics nor undersample the horizon: `[10 m dx^2, t / 20]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityWindow {
    pub dt_min: f64,
    pub dt_max: f64,
}

impl ValidityWindow {
    pub fn new(grid: &SpatialGrid, mass: f64, t: f64) -> Self {
        Self {
            dt_min: 10.0 * mass * grid.dx().powi(2),
            dt_max: t / 20.0,
        }
    }

    pub fn contains(&self, delta_t: f64) -> bool {
        delta_t >= self.dt_min && delta_t <= self.dt_max
    }

    pub fn is_empty(&self) -> bool {
        self.dt_min > self.dt_max
    }
}

/// Inclusive index range of consecutive samples agreeing within tolerance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plateau {
    pub start: usize,
    pub end: usize,
    pub value: f64,
    pub spread: f64,
}

/// Longest run of at least `min_len` consecutive values whose relative
/// spread `(max - min) / mean` is within `tolerance`; ties go to the
/// smaller spread.
pub fn find_plateau(values: &[f64], tolerance: f64, min_len: usize) -> Option<Plateau> {
    let mut best: Option<Plateau> = None;
    for start in 0..values.len() {
        let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for (end, &v) in values.iter().enumerate().skip(start) {
            lo = lo.min(v);
            hi = hi.max(v);
            sum += v;
            let mean = sum / (end - start + 1) as f64;
            let spread = if mean != 0.0 { (hi - lo) / mean.abs() } else { hi - lo };
            if !(spread <= tolerance) {
                break;
            }
            let len = end - start + 1;
            if len < min_len {
                continue;
            }
            let better = match best {
                None => true,
                Some(b) => {
                    let blen = b.end - b.start + 1;
                    len > blen || (len == blen && spread < b.spread)
                }
            };
            if better {
                best = Some(Plateau {
                    start,
                    end,
                    value: mean,
                    spread,
                });
            }
        }
    }
    best
}

/// `P_bar(t)` of a protocol with interval `delta_t`; `t / delta_t` must be
/// an integer. The propagator step is the largest divisor of `delta_t` not
/// above `max_dt`.
pub fn survival_at(
    psi0: &WaveFunction,
    h: &HamiltonianSpec,
    projector: &Projector,
    t: f64,
    delta_t: f64,
    method: &str,
    max_dt: f64,
) -> Result<f64> {
    let k = (t / delta_t).round();
    if k < 1.0 || (k * delta_t - t).abs() > 1e-9 * t {
        return Err(Error::InvalidParameter {
            name: "delta_t",
            reason: format!("{delta_t} does not divide t = {t}"),
        });
    }
    let cfg = ProtocolConfig::with_max_step(projector.clone(), delta_t, k as usize, method, max_dt);
    let record = run_protocol(psi0, h, &cfg)?;
    Ok(if record.underflow.is_some() {
        0.0
    } else {
        record.survival[k as usize]
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub window: ValidityWindow,
    /// Decreasing measurement intervals `t / n`.
    pub delta_t: Vec<f64>,
    pub survival: Vec<f64>,
    pub plateau: Option<Plateau>,
}

impl ConvergenceReport {
    pub fn plateau_window(&self) -> Option<(f64, f64)> {
        self.plateau.map(|p| (self.delta_t[p.end], self.delta_t[p.start]))
    }
}

/// Scans up to `points` intervals `t / n` spread geometrically across the
/// validity window and reports where the survival at `t` levels off.
#[allow(clippy::too_many_arguments)]
pub fn convergence_window(
    psi0: &WaveFunction,
    h: &HamiltonianSpec,
    projector: &Projector,
    t: f64,
    points: usize,
    method: &str,
    max_dt: f64,
) -> Result<ConvergenceReport> {
    let window = ValidityWindow::new(h.grid(), h.mass(), t);
    let n_lo = (t / window.dt_max).ceil().max(1.0);
    let n_hi = (t / window.dt_min).floor();
    if window.is_empty() || n_hi < n_lo || points == 0 {
        return Err(Error::InvalidParameter {
            name: "delta_t",
            reason: format!("empty validity window [{}, {}]", window.dt_min, window.dt_max),
        });
    }
    let mut ns: Vec<u64> = (0..points)
        .map(|i| {
            let f = if points > 1 {
                i as f64 / (points - 1) as f64
            } else {
                0.0
            };
            (n_lo * (n_hi / n_lo).powf(f)).round() as u64
        })
        .collect();
    ns.dedup();
    let delta_t: Vec<f64> = ns.iter().map(|&n| t / n as f64).collect();
    let survival = delta_t
        .par_iter()
        .map(|&dt| survival_at(psi0, h, projector, t, dt, method, max_dt))
        .collect::<Result<Vec<f64>>>()?;
    let plateau = find_plateau(&survival, PLATEAU_TOLERANCE, PLATEAU_MIN_LEN);
    Ok(ConvergenceReport {
        window,
        delta_t,
        survival,
        plateau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_constant_rate() {
        let times: Vec<f64> = (0..=100).map(|i| i as f64 * 0.1).collect();
        let w = vec![0.3; times.len()];
        assert!((survival_closed_form(&times, &w, 10.0) - (-3.0f64).exp()).abs() < 1e-12);
        assert!((survival_closed_form(&times, &w, 4.55) - (-0.3f64 * 4.55).exp()).abs() < 1e-12);
        assert_eq!(survival_closed_form(&times, &vec![0.0; 101], 10.0), 1.0);
    }

    #[test]
    fn plateau_detection() {
        let v = [0.5, 0.6, 0.70, 0.705, 0.71, 0.712, 0.8];
        let p = find_plateau(&v, 0.02, 3).unwrap();
        assert_eq!((p.start, p.end), (2, 5));
        assert!(find_plateau(&[1.0, 2.0, 3.0, 4.0], 0.02, 3).is_none());
        assert!(find_plateau(&[1.0, 1.0], 0.02, 3).is_none());
    }

    #[test]
    fn validity_window_bounds() {
        let g = SpatialGrid::new(-60.0, 30.0, 4096).unwrap();
        let w = ValidityWindow::new(&g, 1.0, 10.0);
        assert!((w.dt_min - 10.0 * g.dx() * g.dx()).abs() < 1e-15);
        assert_eq!(w.dt_max, 0.5);
        assert!(w.contains(0.1) && !w.contains(1.0) && !w.contains(1e-4));
    }
}
