use num_complex::Complex64;

use crate::arrival::probability_current;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::measurement::ValidityWindow;
use crate::numerics::lagrange_with_derivative;
use crate::propagator::{energy_decomposition, evolve, LeakGuard, PropagatorConfig, DEFAULT_EPSILONS};
use crate::region::Region;
use crate::wavefunction::WaveFunction;

/// Three estimates of the initial decay rate `gamma` of a truncated state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaCrossCheck {
    /// `-B2 / m`, per unit norm.
    pub gamma_from_b2: f64,
    /// `alpha * Phi` with the lattice current extrapolated to the boundary.
    pub gamma_from_flux: f64,
    /// `-ln P_bar_1 / delta_t` for one measurement at the lower edge of the
    /// validity window.
    pub gamma_from_protocol: f64,
    pub protocol_delta_t: f64,
    pub alpha: f64,
}

impl GammaCrossCheck {
    /// Largest pairwise relative difference, relative to the larger value.
    pub fn max_pairwise_deviation(&self) -> f64 {
        let g = [self.gamma_from_b2, self.gamma_from_flux, self.gamma_from_protocol];
        let mut worst: f64 = 0.0;
        for i in 0..3 {
            for j in i + 1..3 {
                let scale = g[i].abs().max(g[j].abs());
                if scale > 0.0 {
                    worst = worst.max((g[i] - g[j]).abs() / scale);
                }
            }
        }
        worst
    }
}

/// Outward current at the region's boundary points, extrapolated by a cubic
/// through the four nearest faces strictly inside the region.
fn extrapolated_flux(psi: &WaveFunction, region: &Region, mass: f64) -> Result<f64> {
    let g = psi.grid();
    let j = probability_current(psi, mass);
    let mut total = 0.0;
    for iv in region.intervals() {
        if iv.end - iv.start < 6 {
            return Err(Error::InvalidParameter {
                name: "region",
                reason: "flux extrapolation needs 6 interior points per interval".into(),
            });
        }
        let mut ends = Vec::new();
        if iv.start > 0 {
            ends.push((-1.0, g.x(iv.start - 1), (iv.start..iv.start + 4).collect::<Vec<_>>()));
        }
        if iv.end < g.len() {
            ends.push((1.0, g.x(iv.end), (iv.end - 5..iv.end - 1).rev().collect()));
        }
        for (outward, x_b, faces) in ends {
            let xs: Vec<f64> = faces.iter().map(|&f| g.x(f) + 0.5 * g.dx()).collect();
            let ys: Vec<Complex64> = faces.iter().map(|&f| Complex64::new(j[f], 0.0)).collect();
            total += outward * lagrange_with_derivative(&xs, &ys, x_b).0.re;
        }
    }
    Ok(total)
}

pub fn gamma_crosscheck(
    psi0: &WaveFunction,
    region: &Region,
    h: &HamiltonianSpec,
    method: &str,
) -> Result<GammaCrossCheck> {
    let m = h.mass();
    let norm_sqr = region.probability(psi0)?;
    if norm_sqr < 1e-24 {
        return Err(Error::EmptyOverlap { norm: norm_sqr.sqrt() });
    }
    let alpha = 1.0 / norm_sqr;
    let d = energy_decomposition(psi0, region, m, &DEFAULT_EPSILONS)?;
    let gamma_from_b2 = -d.boundary_b2 / m * alpha;
    let gamma_from_flux = alpha * extrapolated_flux(psi0, region, m)?;

    let delta_t = ValidityWindow::new(h.grid(), m, 1.0).dt_min;
    let cfg = PropagatorConfig::new(method, delta_t).with_guard(LeakGuard::for_region(region));
    let evolved = evolve(psi0, h, delta_t, &cfg)?;
    let p_bar = region.probability(&evolved)? * alpha;
    Ok(GammaCrossCheck {
        gamma_from_b2,
        gamma_from_flux,
        gamma_from_protocol: -p_bar.ln() / delta_t,
        protocol_delta_t: delta_t,
        alpha,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SpatialGrid;
    use crate::region::truncated_state;
    use crate::wavefunction::gaussian_packet;

    #[test]
    fn chirp_b2_and_flux_agree() {
        let g = SpatialGrid::new(-0.5, 1.5, 2048).unwrap();
        let r = Region::between(&g, 0.0, 1.0).unwrap();
        let inner = WaveFunction::from_fn(g, |x| Complex64::from_polar(x, 2.0 * x));
        let psi = truncated_state(&r, &inner).unwrap();
        let h = HamiltonianSpec::free(&g, 0.5).unwrap();
        let c = gamma_crosscheck(&psi, &r, &h, "crank_nicolson").unwrap();
        assert!((c.gamma_from_b2 - c.gamma_from_flux).abs() < 1e-4, "{c:?}");
        assert!((c.gamma_from_b2 - 12.0).abs() < 0.05);
    }

    #[test]
    fn real_state_inside_has_no_decay() {
        let g = SpatialGrid::new(-60.0, 30.0, 4096).unwrap();
        let r = Region::left_of(&g, 0.0).unwrap();
        let h = HamiltonianSpec::free(&g, 1.0).unwrap();
        let psi = gaussian_packet(&g, -20.0, 2.0, 0.0).unwrap();
        let c = gamma_crosscheck(&psi, &r, &h, "crank_nicolson").unwrap();
        assert!(c.gamma_from_b2.abs() < 1e-8);
        assert!(c.gamma_from_flux.abs() < 1e-8);
        assert!(c.gamma_from_protocol.abs() < 1e-8);
    }
}
