use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;

/// Complex amplitudes on a [`SpatialGrid`]. Norms and inner products use the
/// rectangle rule `sum(...) * dx`, which is exact for periodic band-limited data.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: SpatialGrid,
    amplitudes: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: SpatialGrid, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid, amplitudes })
    }

    pub fn zeros(grid: SpatialGrid) -> Self {
        Self {
            grid,
            amplitudes: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn from_fn(grid: SpatialGrid, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            grid,
            amplitudes: grid.positions().map(f).collect(),
        }
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - 1.0).abs() < 1e-12
    }

    /// Scales to unit norm and returns the norm before scaling.
    pub fn normalize(&mut self) -> f64 {
        let n = self.norm();
        if n > 0.0 {
            let inv = 1.0 / n;
            self.amplitudes.iter_mut().for_each(|a| *a *= inv);
        }
        n
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    pub fn scale(&mut self, factor: Complex64) {
        self.amplitudes.iter_mut().for_each(|a| *a *= factor);
    }

    pub fn check_same_grid(&self, other: &WaveFunction) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        self.check_same_grid(other)?;
        let s: Complex64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * self.grid.dx())
    }

    /// `||self - other||`.
    pub fn distance(&self, other: &WaveFunction) -> Result<f64> {
        self.check_same_grid(other)?;
        let s: f64 = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.dx()).sqrt())
    }

    pub fn add(&self, other: &WaveFunction) -> Result<WaveFunction> {
        self.check_same_grid(other)?;
        Ok(Self {
            grid: self.grid,
            amplitudes: self
                .amplitudes
                .iter()
                .zip(&other.amplitudes)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn mean_position(&self) -> f64 {
        let w: f64 = self
            .grid
            .positions()
            .zip(&self.amplitudes)
            .map(|(x, a)| x * a.norm_sqr())
            .sum();
        w * self.grid.dx() / self.norm_sqr()
    }

    pub fn position_variance(&self) -> f64 {
        let mean = self.mean_position();
        let w: f64 = self
            .grid
            .positions()
            .zip(&self.amplitudes)
            .map(|(x, a)| (x - mean).powi(2) * a.norm_sqr())
            .sum();
        w * self.grid.dx() / self.norm_sqr()
    }

    /// Probability in the outermost `fraction` of the grid on the left and right.
    pub fn edge_probabilities(&self, fraction: f64) -> (f64, f64) {
        let m = self.grid.edge_zone_points(fraction);
        let n = self.amplitudes.len();
        let dx = self.grid.dx();
        let left: f64 = self.amplitudes[..m].iter().map(|a| a.norm_sqr()).sum();
        let right: f64 = self.amplitudes[n - m..].iter().map(|a| a.norm_sqr()).sum();
        (left * dx, right * dx)
    }
}

/// Normalized Gaussian `exp(-(x-x0)^2/(4 sigma^2) + i k0 x)`. The position
/// density has standard deviation `sigma`.
pub fn gaussian_packet(grid: &SpatialGrid, x0: f64, sigma: f64, k0: f64) -> Result<WaveFunction> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "sigma",
            reason: format!("must be > 0, got {sigma}"),
        });
    }
    let envelope = |x: f64| (-(x - x0).powi(2) / (4.0 * sigma * sigma)).exp();
    let ratio = envelope(grid.x_min()).max(envelope(grid.x(grid.len() - 1)));
    if ratio >= 1e-8 {
        return Err(Error::PacketTruncated { ratio });
    }
    let psi = WaveFunction::from_fn(*grid, |x| Complex64::from_polar(envelope(x), k0 * x));
    Ok(psi.normalized())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpatialGrid {
        SpatialGrid::new(-60.0, 30.0, 4096).unwrap()
    }

    #[test]
    fn gaussian_is_normalized_and_centered() {
        let psi = gaussian_packet(&grid(), -20.0, 2.0, 2.0).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-12);
        // quadrature oracle: sum x |psi|^2 dx
        let dx = psi.grid().dx();
        let mean: f64 = psi
            .grid()
            .positions()
            .zip(psi.amplitudes())
            .map(|(x, a)| x * a.norm_sqr() * dx)
            .sum();
        assert!((mean + 20.0).abs() < 1e-6);
        assert!((psi.position_variance().sqrt() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn packet_too_close_to_edge() {
        assert!(matches!(
            gaussian_packet(&grid(), 25.0, 2.0, 0.0),
            Err(Error::PacketTruncated { .. })
        ));
    }

    #[test]
    fn inner_product_conjugates_left() {
        let g = SpatialGrid::new(0.0, 1.0, 16).unwrap();
        let a = WaveFunction::from_fn(g, |_| Complex64::new(0.0, 1.0));
        let b = WaveFunction::from_fn(g, |_| Complex64::new(1.0, 0.0));
        let ip = a.inner(&b).unwrap();
        assert!((ip - Complex64::new(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn mismatched_grids() {
        let a = WaveFunction::zeros(SpatialGrid::new(0.0, 1.0, 16).unwrap());
        let b = WaveFunction::zeros(SpatialGrid::new(0.0, 2.0, 16).unwrap());
        assert_eq!(a.inner(&b), Err(Error::GridMismatch));
    }
}
