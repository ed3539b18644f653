use num_complex::Complex64;

use super::Propagator;
use crate::error::Result;
use crate::hamiltonian::HamiltonianSpec;
use crate::wavefunction::WaveFunction;

/// Cayley-form Crank-Nicolson step `(1 + iHh/2) psi' = (1 - iHh/2) psi` for
/// the three-point lattice Hamiltonian with zero Dirichlet values beyond the
/// grid ends. The tridiagonal system is solved with the Thomas algorithm;
/// its elimination factors depend only on `H` and `h` and are precomputed.
pub struct CrankNicolson {
    step: f64,
    hamiltonian: HamiltonianSpec,
    /// `1 - i h/2 (2t + V_i)`, the explicit half-step diagonal.
    explicit_diag: Vec<Complex64>,
    /// `i h t / 2`, the explicit half-step off-diagonal.
    explicit_off: Complex64,
    /// `-i h t / 2`, the implicit off-diagonal.
    implicit_off: Complex64,
    /// Thomas forward-sweep factors `c'_i`.
    c_prime: Vec<Complex64>,
    /// `1 / (b_i - a c'_{i-1})`.
    inv_pivot: Vec<Complex64>,
}

impl CrankNicolson {
    pub const NAME: &'static str = "crank_nicolson";

    pub fn new(h: &HamiltonianSpec, step: f64) -> Result<Self> {
        let n = h.grid().len();
        let t = h.hopping();
        let i_half = Complex64::new(0.0, 0.5 * step);
        let implicit_diag: Vec<Complex64> = h.potential().iter().map(|v| 1.0 + i_half * (2.0 * t + v)).collect();
        let explicit_diag = h.potential().iter().map(|v| 1.0 - i_half * (2.0 * t + v)).collect();
        let implicit_off = -i_half * t;
        let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
        let mut inv_pivot = vec![Complex64::new(0.0, 0.0); n];
        inv_pivot[0] = 1.0 / implicit_diag[0];
        c_prime[0] = implicit_off * inv_pivot[0];
        for i in 1..n {
            let pivot = implicit_diag[i] - implicit_off * c_prime[i - 1];
            inv_pivot[i] = 1.0 / pivot;
            c_prime[i] = implicit_off * inv_pivot[i];
        }
        Ok(Self {
            step,
            hamiltonian: h.clone(),
            explicit_diag,
            explicit_off: i_half * t,
            implicit_off,
            c_prime,
            inv_pivot,
        })
    }
}

impl Propagator for CrankNicolson {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn step_size(&self) -> f64 {
        self.step
    }

    fn step(&self, psi: &mut [Complex64]) {
        let n = psi.len();
        let zero = Complex64::new(0.0, 0.0);
        // right-hand side, then forward sweep, reusing one buffer
        let mut d = Vec::with_capacity(n);
        for i in 0..n {
            let left = if i > 0 { psi[i - 1] } else { zero };
            let right = if i + 1 < n { psi[i + 1] } else { zero };
            d.push(self.explicit_diag[i] * psi[i] + self.explicit_off * (left + right));
        }
        d[0] *= self.inv_pivot[0];
        for i in 1..n {
            d[i] = (d[i] - self.implicit_off * d[i - 1]) * self.inv_pivot[i];
        }
        psi[n - 1] = d[n - 1];
        for i in (0..n - 1).rev() {
            psi[i] = d[i] - self.c_prime[i] * psi[i + 1];
        }
    }

    fn energy(&self, psi: &WaveFunction) -> f64 {
        self.hamiltonian
            .lattice_expectation(psi)
            .map(|e| e.re)
            .unwrap_or(f64::NAN)
    }
}
