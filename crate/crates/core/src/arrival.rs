//! Probability current, boundary flux and flux-based arrival and departure
//! densities of the unmeasured evolution.

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::numerics::trapezoid_xy;
use crate::propagator::{Evolution, PropagatorConfig, PropagatorRegistry};
use crate::region::Region;
use crate::wavefunction::WaveFunction;

/// Flux samples below this count as negative in [`arrival_integral`].
pub const NEGATIVE_FLUX_TOLERANCE: f64 = 1e-10;
/// The hazard is left undefined where the region probability is below this.
pub const HAZARD_FLOOR: f64 = 1e-12;

/// Lattice current on the faces between neighbouring sites,
/// `j_{i+1/2} = Im(psi_i^* psi_{i+1}) / (m dx)`; entry `i` is face `(i, i+1)`.
///
/// With the three-point Hamiltonian the rate of change of the probability
/// on any block of sites equals the difference of the currents on its two
/// outer faces.
pub fn probability_current(psi: &WaveFunction, mass: f64) -> Vec<f64> {
    let c = 1.0 / (mass * psi.grid().dx());
    psi.amplitudes()
        .windows(2)
        .map(|w| (w[0].conj() * w[1]).im * c)
        .collect()
}

fn face_current(psi: &WaveFunction, mass: f64, face: usize) -> f64 {
    let a = psi.amplitudes();
    (a[face].conj() * a[face + 1]).im / (mass * psi.grid().dx())
}

/// Outward flux through all boundary faces of the region; positive when
/// probability leaves it.
pub fn boundary_flux(psi: &WaveFunction, region: &Region, mass: f64) -> Result<f64> {
    if psi.grid() != region.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(region
        .boundary_faces()
        .iter()
        .map(|f| f.outward * face_current(psi, mass, f.face))
        .sum())
}

pub fn region_probability(psi: &WaveFunction, region: &Region) -> Result<f64> {
    region.probability(psi)
}

/// Time series of the unmeasured evolution relative to a region.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrivalSeries {
    pub times: Vec<f64>,
    pub region_prob: Vec<f64>,
    /// Probability outside the region (boundary sites included).
    pub complement_prob: Vec<f64>,
    pub flux: Vec<f64>,
    pub arrival_density: Vec<f64>,
    pub departure_density: Vec<f64>,
    /// `flux / region_prob`, NaN where the region probability is below
    /// [`HAZARD_FLOOR`].
    pub hazard: Vec<f64>,
    /// `dP_bar/dt + flux` with centered differences, one-sided at the ends.
    pub continuity_residual: Vec<f64>,
}

impl ArrivalSeries {
    pub fn max_continuity_residual(&self) -> f64 {
        self.continuity_residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    /// `-dP_bar/dt` by the same finite differences as the residual.
    pub fn survival_rate(&self) -> Vec<f64> {
        self.continuity_residual
            .iter()
            .zip(&self.flux)
            .map(|(r, f)| f - r)
            .collect()
    }
}

fn time_derivative(times: &[f64], values: &[f64]) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    if n == 2 {
        let d = (values[1] - values[0]) / (times[1] - times[0]);
        return vec![d, d];
    }
    let h = times[1] - times[0];
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * h)
            } else if i == n - 1 {
                (3.0 * values[i] - 4.0 * values[i - 1] + values[i - 2]) / (2.0 * h)
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * h)
            }
        })
        .collect()
}

/// Evolves `psi0` without measurement and samples the region probability
/// and boundary flux every `sample_dt` up to `t_max`.
///
/// `psi0` need not lie inside the region, so that states which start partly
/// behind the detector (and produce departure windows) can be studied.
pub fn arrival_series(
    psi0: &WaveFunction,
    h: &HamiltonianSpec,
    region: &Region,
    t_max: f64,
    sample_dt: f64,
    config: &PropagatorConfig,
) -> Result<ArrivalSeries> {
    arrival_series_with(
        &PropagatorRegistry::with_builtins(),
        psi0,
        h,
        region,
        t_max,
        sample_dt,
        config,
    )
}

pub fn arrival_series_with(
    registry: &PropagatorRegistry,
    psi0: &WaveFunction,
    h: &HamiltonianSpec,
    region: &Region,
    t_max: f64,
    sample_dt: f64,
    config: &PropagatorConfig,
) -> Result<ArrivalSeries> {
    if psi0.grid() != h.grid() || region.grid() != h.grid() {
        return Err(Error::GridMismatch);
    }
    if !(sample_dt > 0.0 && t_max >= 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "run.sample_dt",
            reason: format!("need sample_dt > 0 and t_max >= 0, got {sample_dt}, {t_max}"),
        });
    }
    let samples = (t_max / sample_dt + 1e-9).floor() as usize;
    let evolution = Evolution::new(registry, h, config, sample_dt)?;
    let m = h.mass();
    let mut psi = psi0.clone();
    let n = samples + 1;
    let (mut times, mut region_prob, mut complement_prob, mut flux) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for s in 0..n {
        if s > 0 {
            evolution.apply(&mut psi, (s - 1) as f64 * sample_dt)?;
        }
        times.push(s as f64 * sample_dt);
        let p = region.probability(&psi)?;
        let outside: f64 = psi
            .amplitudes()
            .iter()
            .zip(region.mask())
            .filter(|(_, &inside)| !inside)
            .map(|(a, _)| a.norm_sqr())
            .sum::<f64>()
            * psi.grid().dx();
        region_prob.push(p);
        complement_prob.push(outside);
        flux.push(boundary_flux(&psi, region, m)?);
    }
    let dp = time_derivative(&times, &region_prob);
    let continuity_residual = dp.iter().zip(&flux).map(|(d, f)| d + f).collect();
    let arrival_density = flux.iter().map(|&f| if f > 0.0 { f } else { 0.0 }).collect();
    let departure_density = flux.iter().map(|&f| if f < 0.0 { -f } else { 0.0 }).collect();
    let hazard = flux
        .iter()
        .zip(&region_prob)
        .map(|(&f, &p)| if p > HAZARD_FLOOR { f / p } else { f64::NAN })
        .collect();
    Ok(ArrivalSeries {
        times,
        region_prob,
        complement_prob,
        flux,
        arrival_density,
        departure_density,
        hazard,
        continuity_residual,
    })
}

/// `int_{t1}^{t2} P_arr dt` by the trapezoidal rule over the samples in the
/// window, with linear interpolation at the window ends.
///
/// Refuses windows containing negative flux: arrivals on either side of a
/// departure are not exclusive events and must not be summed.
pub fn arrival_integral(series: &ArrivalSeries, t1: f64, t2: f64) -> Result<f64> {
    let times = &series.times;
    let (first, last) = (times[0], times[times.len() - 1]);
    let eps = 1e-9 * (last - first).abs().max(1.0);
    if !(t1 <= t2) || t1 < first - eps || t2 > last + eps {
        return Err(Error::InvalidParameter {
            name: "window",
            reason: format!("[{t1}, {t2}] not inside [{first}, {last}]"),
        });
    }
    if t1 == t2 {
        return Ok(0.0);
    }
    let lo = times.partition_point(|&t| t < t1 - eps);
    let hi = times.partition_point(|&t| t <= t2 + eps);
    // samples bracketing a window end that falls between samples count too
    let scan_lo = if lo > 0 && times[lo] > t1 + eps { lo - 1 } else { lo };
    let scan_hi = if hi < times.len() && times[hi - 1] < t2 - eps {
        hi + 1
    } else {
        hi
    };
    if let Some(i) = (scan_lo..scan_hi).find(|&i| series.flux[i] < -NEGATIVE_FLUX_TOLERANCE) {
        return Err(Error::NonMonotoneWindow {
            time: times[i],
            flux: series.flux[i],
        });
    }
    let at = |t: f64| crate::numerics::interp_linear(times, &series.arrival_density, t);
    let mut xs = vec![t1];
    let mut ys = vec![at(t1)];
    for (&t, &y) in times[lo..hi].iter().zip(&series.arrival_density[lo..hi]) {
        if t > t1 + eps && t < t2 - eps {
            xs.push(t);
            ys.push(y);
        }
    }
    xs.push(t2);
    ys.push(at(t2));
    Ok(trapezoid_xy(&xs, &ys))
}

/// First-order no-click probability of a short measurement interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BreakdownProbe {
    /// `1 - delta_t * alpha * flux`.
    pub p_bar_raw: f64,
    pub flux: f64,
    /// `||chi psi||^{-2}`.
    pub alpha: f64,
}

impl BreakdownProbe {
    /// The first-order formula exceeds one, which happens exactly when the
    /// flux is negative.
    pub fn breakdown(&self) -> bool {
        self.p_bar_raw > 1.0
    }
}

pub fn breakdown_probe(psi: &WaveFunction, region: &Region, mass: f64, delta_t: f64) -> Result<BreakdownProbe> {
    let p = region.probability(psi)?;
    if p < HAZARD_FLOOR {
        return Err(Error::EmptyOverlap { norm: p.sqrt() });
    }
    let alpha = 1.0 / p;
    let flux = boundary_flux(psi, region, mass)?;
    Ok(BreakdownProbe {
        p_bar_raw: 1.0 - delta_t * alpha * flux,
        flux,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::wavefunction::gaussian_packet;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn standard() -> (SpatialGrid, HamiltonianSpec, Region) {
        let g = SpatialGrid::new(-60.0, 30.0, 4096).unwrap();
        let h = HamiltonianSpec::free(&g, 1.0).unwrap();
        let r = Region::left_of(&g, 0.0).unwrap();
        (g, h, r)
    }

    #[test]
    fn real_state_carries_no_current() {
        let (g, _, _) = standard();
        let psi = gaussian_packet(&g, -20.0, 2.0, 0.0).unwrap();
        assert!(probability_current(&psi, 1.0).iter().all(|j| j.abs() < 1e-12));
    }

    #[test]
    fn plane_wave_current() {
        // unit-amplitude plane wave: j = k/m
        let g = SpatialGrid::new(0.0, 4.0 * PI, 16384).unwrap();
        let psi = WaveFunction::from_fn(g, |x| Complex64::from_polar(1.0, 2.0 * x));
        for j in probability_current(&psi, 1.0) {
            assert!((j - 2.0).abs() < 1e-6);
        }
        let region = Region::left_of(&g, 2.0 * PI).unwrap();
        let phi = boundary_flux(&psi, &region, 1.0).unwrap();
        // the artificial left cut sees the same current flowing in
        assert!(phi.abs() < 1e-12);
        let detector_face = region.boundary_faces()[1];
        assert_eq!(detector_face.outward, 1.0);
        assert!((face_current(&psi, 1.0, detector_face.face) - 2.0).abs() < 1e-6);
    }

    #[test]
    fn flux_sign_follows_motion() {
        let (g, _, r) = standard();
        let far = gaussian_packet(&g, -20.0, 2.0, 2.0).unwrap();
        assert!(boundary_flux(&far, &r, 1.0).unwrap().abs() < 1e-10);
        let right = gaussian_packet(&g, 0.0, 2.0, 2.0).unwrap();
        assert!(boundary_flux(&right, &r, 1.0).unwrap() > 0.0);
        let left = gaussian_packet(&g, 0.0, 2.0, -2.0).unwrap();
        assert!(boundary_flux(&left, &r, 1.0).unwrap() < 0.0);
    }

    #[test]
    fn region_probability_cases() {
        let (g, _, r) = standard();
        let inside = gaussian_packet(&g, -20.0, 2.0, 2.0).unwrap();
        assert!((region_probability(&inside, &r).unwrap() - 1.0).abs() < 1e-10);
        let centred = gaussian_packet(&g, 0.0, 2.0, 0.0).unwrap();
        assert!((region_probability(&centred, &r).unwrap() - 0.5).abs() < 1e-3);
        assert_eq!(region_probability(&inside, &Region::empty(&g)).unwrap(), 0.0);
    }

    #[test]
    fn probe_signs() {
        let (g, _, r) = standard();
        let far = gaussian_packet(&g, -20.0, 2.0, 2.0).unwrap();
        let p = breakdown_probe(&far, &r, 1.0, 0.01).unwrap();
        assert!((p.alpha - 1.0).abs() < 1e-10 && (p.p_bar_raw - 1.0).abs() < 1e-8);
        let right = gaussian_packet(&g, 0.0, 2.0, 2.0).unwrap();
        assert!(breakdown_probe(&right, &r, 1.0, 0.01).unwrap().p_bar_raw < 1.0);
        let left = gaussian_packet(&g, 0.0, 2.0, -2.0).unwrap();
        let p = breakdown_probe(&left, &r, 1.0, 0.01).unwrap();
        assert!(p.p_bar_raw > 1.0 && p.breakdown());
    }

    #[test]
    fn series_continuity_and_integral() {
        let (g, h, r) = standard();
        let psi = gaussian_packet(&g, -20.0, 2.0, 2.0).unwrap();
        let s = arrival_series(&psi, &h, &r, 4.0, 0.01, &PropagatorConfig::crank_nicolson(0.01)).unwrap();
        assert_eq!(s.times.len(), 401);
        assert!(s.max_continuity_residual() < 1e-4);
        for i in 0..s.times.len() {
            assert!((s.region_prob[i] + s.complement_prob[i] - 1.0).abs() < 1e-10);
            assert_eq!(s.arrival_density[i] * s.departure_density[i], 0.0);
        }
        assert_eq!(arrival_integral(&s, 1.0, 1.0).unwrap(), 0.0);
        let total = arrival_integral(&s, 0.0, 4.0).unwrap();
        assert!((total - (s.region_prob[0] - s.region_prob[400])).abs() < 1e-3);
    }

    #[test]
    fn time_derivative_is_exact_for_quadratics() {
        let t: Vec<f64> = (0..6).map(|i| i as f64 * 0.5).collect();
        let v: Vec<f64> = t.iter().map(|x| 3.0 * x * x - x).collect();
        for (ti, d) in t.iter().zip(time_derivative(&t, &v)) {
            assert!((d - (6.0 * ti - 1.0)).abs() < 1e-12);
        }
    }
}
