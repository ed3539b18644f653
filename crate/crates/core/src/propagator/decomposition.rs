use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::numerics::{derivative_on_interval, extrapolate_to_zero, lagrange_with_derivative, simpson};
use crate::region::{Projector, Region};
use crate::wavefunction::WaveFunction;

/// Default one-sided offsets for the boundary limits.
pub const DEFAULT_EPSILONS: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];

const SUPPORT_TOLERANCE: f64 = 1e-10;
const EXTRAPOLATION_TOLERANCE: f64 = 1e-4;

/// `2m <psi|H|psi> = A + B1 + i B2` for a state supported on an open interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyDecomposition {
    pub bulk_a: f64,
    pub boundary_b1: f64,
    pub boundary_b2: f64,
    pub expectation: Complex64,
    pub gamma: f64,
    pub e0: f64,
}

/// Value and derivative of the state at `x`, from the cubic through the four
/// interior samples nearest the end `from`, stepping by `dir` into the interval.
fn one_sided(psi: &WaveFunction, from: usize, dir: isize, x: f64) -> (Complex64, Complex64) {
    let g = psi.grid();
    let idx: Vec<usize> = (0..4).map(|j| (from as isize + dir * j) as usize).collect();
    let xs: Vec<f64> = idx.iter().map(|&i| g.x(i)).collect();
    let ys: Vec<Complex64> = idx.iter().map(|&i| psi.amplitudes()[i]).collect();
    lagrange_with_derivative(&xs, &ys, x)
}

/// Extrapolates `samples(eps)` to `eps = 0`. Successive extrapolants must
/// agree relative to `scale`, the magnitude of `psi* psi'` at that end.
fn boundary_limit(samples: &[f64], eps: &[f64], scale: f64) -> Result<f64> {
    let diag = extrapolate_to_zero(eps, samples);
    let last = diag[diag.len() - 1];
    if diag.len() < 2 {
        return Ok(last);
    }
    let previous = diag[diag.len() - 2];
    let scale = [scale, last.abs(), previous.abs()]
        .into_iter()
        .fold(f64::MIN_POSITIVE, f64::max);
    if !last.is_finite() || (last - previous).abs() > EXTRAPOLATION_TOLERANCE * scale {
        return Err(Error::ExtrapolationDiverged { previous, last });
    }
    Ok(last)
}

/// Splits `<psi|H|psi>` of a state supported on a single interval `(a, b)`
/// into the bulk term `A = int |psi'|^2` and the boundary limits
/// `B1 = RR'(a+) - RR'(b-)`, `B2 = R^2 S'(a+) - R^2 S'(b-)`.
///
/// The limits are taken at `a + eps`, `b - eps` for each offset in
/// `epsilons` and extrapolated to zero. Only the kinetic part is decomposed.
pub fn energy_decomposition(
    psi: &WaveFunction,
    region: &Region,
    mass: f64,
    epsilons: &[f64],
) -> Result<EnergyDecomposition> {
    if psi.grid() != region.grid() {
        return Err(Error::GridMismatch);
    }
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter {
            name: "mass",
            reason: format!("must be > 0, got {mass}"),
        });
    }
    if epsilons.is_empty() || epsilons.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::InvalidParameter {
            name: "epsilon_seq",
            reason: "needs at least one positive offset".into(),
        });
    }
    let [iv] = region.intervals() else {
        return Err(Error::InvalidParameter {
            name: "region",
            reason: "decomposition needs a single interval".into(),
        });
    };
    let (lo, hi) = (iv.start, iv.end);
    let g = psi.grid();
    if hi - lo < 4 || lo == 0 || hi == g.len() {
        return Err(Error::InvalidParameter {
            name: "region",
            reason: "interval needs 4 interior points and a boundary site at each end".into(),
        });
    }
    let outside = psi
        .amplitudes()
        .iter()
        .enumerate()
        .filter(|&(i, _)| !region.contains(i))
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        * g.dx();
    if outside.sqrt() > SUPPORT_TOLERANCE {
        return Err(Error::InitialStateOutsideRegion {
            residual: outside.sqrt(),
        });
    }

    let a = g.x(lo - 1);
    let b = g.x(hi);
    let (mut re_a, mut im_a, mut re_b, mut im_b) = (vec![], vec![], vec![], vec![]);
    let (mut scale_a, mut scale_b) = (0.0f64, 0.0f64);
    for &e in epsilons {
        let (v, d) = one_sided(psi, lo, 1, a + e);
        let ja = v.conj() * d;
        let (v, d) = one_sided(psi, hi - 1, -1, b - e);
        let jb = v.conj() * d;
        scale_a = scale_a.max(ja.norm());
        scale_b = scale_b.max(jb.norm());
        re_a.push(ja.re);
        im_a.push(ja.im);
        re_b.push(jb.re);
        im_b.push(jb.im);
    }
    let b1 = boundary_limit(&re_a, epsilons, scale_a)? - boundary_limit(&re_b, epsilons, scale_b)?;
    let b2 = boundary_limit(&im_a, epsilons, scale_a)? - boundary_limit(&im_b, epsilons, scale_b)?;

    // |psi'|^2 on a, interior points, b
    let dpsi = derivative_on_interval(psi.amplitudes(), lo, hi, g.dx());
    let mut integrand = Vec::with_capacity(dpsi.len() + 2);
    integrand.push(one_sided(psi, lo, 1, a).1.norm_sqr());
    integrand.extend(dpsi.iter().map(|d| d.norm_sqr()));
    integrand.push(one_sided(psi, hi - 1, -1, b).1.norm_sqr());
    let bulk_a = simpson(&integrand, g.dx());

    let expectation = Complex64::new(bulk_a + b1, b2) / (2.0 * mass);
    Ok(EnergyDecomposition {
        bulk_a,
        boundary_b1: b1,
        boundary_b2: b2,
        expectation,
        gamma: -2.0 * expectation.im,
        e0: expectation.re,
    })
}

/// `||(pi_bar H pi_bar - pi_bar H) probe||` with the three-point lattice
/// Hamiltonian. Vanishes in the continuum; on a grid it measures the
/// coupling of the exterior sites next to the region into its interior.
pub fn magic_residual(h: &HamiltonianSpec, pi_bar: &Projector, probe: &WaveFunction) -> Result<f64> {
    if probe.grid() != h.grid() || pi_bar.grid() != h.grid() {
        return Err(Error::GridMismatch);
    }
    let projected = pi_bar.apply(probe)?;
    let lhs = pi_bar.apply(&h.apply_lattice(&projected)?)?;
    let rhs = pi_bar.apply(&h.apply_lattice(probe)?)?;
    lhs.distance(&rhs)
}
