use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::wavefunction::WaveFunction;

/// `H = p^2/2m + V(x)` with `hbar = 1`. The kinetic operator is realised by
/// each propagator; [`HamiltonianSpec::apply_lattice`] is the three-point
/// lattice form with zero values beyond the grid ends.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    grid: SpatialGrid,
    mass: f64,
    potential: Vec<f64>,
}

impl HamiltonianSpec {
    pub fn build(grid: &SpatialGrid, mass: f64, potential: impl Fn(f64) -> f64) -> Result<Self> {
        let samples: Vec<f64> = grid.positions().map(potential).collect();
        Self::from_samples(grid, mass, samples)
    }

    pub fn free(grid: &SpatialGrid, mass: f64) -> Result<Self> {
        Self::from_samples(grid, mass, vec![0.0; grid.len()])
    }

    pub fn from_samples(grid: &SpatialGrid, mass: f64, potential: Vec<f64>) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mass",
                reason: format!("must be > 0, got {mass}"),
            });
        }
        if potential.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        if let Some(i) = potential.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinitePotential { x: grid.x(i) });
        }
        Ok(Self {
            grid: *grid,
            mass,
            potential,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn is_free(&self) -> bool {
        self.potential.iter().all(|&v| v == 0.0)
    }

    /// Off-diagonal lattice coefficient `1 / (2 m dx^2)`.
    pub fn hopping(&self) -> f64 {
        1.0 / (2.0 * self.mass * self.grid.dx().powi(2))
    }

    /// Three-point lattice Hamiltonian applied to raw amplitudes.
    pub fn apply_lattice_raw(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let n = psi.len();
        let t = self.hopping();
        let zero = Complex64::new(0.0, 0.0);
        (0..n)
            .map(|i| {
                let left = if i > 0 { psi[i - 1] } else { zero };
                let right = if i + 1 < n { psi[i + 1] } else { zero };
                (2.0 * t + self.potential[i]) * psi[i] - t * (left + right)
            })
            .collect()
    }

    pub fn apply_lattice(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        WaveFunction::new(self.grid, self.apply_lattice_raw(psi.amplitudes()))
    }

    /// `<psi|H|psi>` with the lattice Hamiltonian.
    pub fn lattice_expectation(&self, psi: &WaveFunction) -> Result<Complex64> {
        let h = self.apply_lattice(psi)?;
        psi.inner(&h)
    }
}
