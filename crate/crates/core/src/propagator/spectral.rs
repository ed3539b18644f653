use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Propagator;
use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianSpec;
use crate::wavefunction::WaveFunction;

/// Strang split-step Fourier propagator on the periodic grid. The kinetic
/// factor is exact in wavenumber space, so free evolution has no time-step
/// error.
pub struct SplitStepFourier {
    step: f64,
    mass: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `exp(-i k^2 h / 2m) / n`
    kinetic_phase: Vec<Complex64>,
    /// `exp(-i V h / 2)`, absent for free Hamiltonians.
    half_potential_phase: Option<Vec<Complex64>>,
    wavenumbers: Vec<f64>,
    potential: Vec<f64>,
    dx: f64,
}

impl SplitStepFourier {
    pub const NAME: &'static str = "spectral";

    pub fn new(h: &HamiltonianSpec, step: f64) -> Result<Self> {
        let grid = h.grid();
        if !grid.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "spectral propagator needs a power-of-two point count, got {}",
                grid.len()
            )));
        }
        let n = grid.len();
        let mut planner = FftPlanner::new();
        let wavenumbers = grid.wavenumbers();
        let scale = 1.0 / n as f64;
        let kinetic_phase = wavenumbers
            .iter()
            .map(|k| Complex64::from_polar(scale, -k * k * step / (2.0 * h.mass())))
            .collect();
        let half_potential_phase = (!h.is_free()).then(|| {
            h.potential()
                .iter()
                .map(|v| Complex64::from_polar(1.0, -0.5 * v * step))
                .collect()
        });
        Ok(Self {
            step,
            mass: h.mass(),
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            kinetic_phase,
            half_potential_phase,
            wavenumbers,
            potential: h.potential().to_vec(),
            dx: grid.dx(),
        })
    }
}

impl Propagator for SplitStepFourier {
    fn name(&self) -> &'static str {
        Self::NAME
    }

    fn step_size(&self) -> f64 {
        self.step
    }

    fn step(&self, psi: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.forward.get_inplace_scratch_len()];
        if let Some(v) = &self.half_potential_phase {
            psi.iter_mut().zip(v).for_each(|(a, p)| *a *= p);
        }
        self.forward.process_with_scratch(psi, &mut scratch);
        psi.iter_mut().zip(&self.kinetic_phase).for_each(|(a, p)| *a *= p);
        self.inverse.process_with_scratch(psi, &mut scratch);
        if let Some(v) = &self.half_potential_phase {
            psi.iter_mut().zip(v).for_each(|(a, p)| *a *= p);
        }
    }

    fn energy(&self, psi: &WaveFunction) -> f64 {
        let n = psi.amplitudes().len();
        let mut buf = psi.amplitudes().to_vec();
        self.forward.process(&mut buf);
        // Parseval: sum |psi|^2 dx = sum |psi_hat|^2 dx / n
        let kinetic: f64 = buf
            .iter()
            .zip(&self.wavenumbers)
            .map(|(a, k)| a.norm_sqr() * k * k / (2.0 * self.mass))
            .sum::<f64>()
            * self.dx
            / n as f64;
        let potential: f64 = psi
            .amplitudes()
            .iter()
            .zip(&self.potential)
            .map(|(a, v)| a.norm_sqr() * v)
            .sum::<f64>()
            * self.dx;
        kinetic + potential
    }
}
