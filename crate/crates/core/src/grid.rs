use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Minimum number of grid points accepted by [`SpatialGrid::new`].
pub const MIN_POINTS: usize = 16;

/// Uniform periodic 1D grid with points `x_i = x_min + i*dx`, `i = 0..n_points`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    dx: f64,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "need finite x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {MIN_POINTS} points, got {n_points}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
            dx: (x_max - x_min) / n_points as f64,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn positions(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.x(i))
    }

    /// Index of the grid point nearest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let raw = ((x - self.x_min) / self.dx).round();
        raw.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    pub fn is_power_of_two(&self) -> bool {
        self.n_points.is_power_of_two()
    }

    /// Angular wavenumbers in FFT order for the periodic lattice.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * PI / self.length();
        (0..n)
            .map(|i| {
                let m = if i < n.div_ceil(2) {
                    i as f64
                } else {
                    i as f64 - n as f64
                };
                m * dk
            })
            .collect()
    }

    /// Width in points of the guard zone at each edge (`fraction` of the grid).
    pub fn edge_zone_points(&self, fraction: f64) -> usize {
        ((self.n_points as f64 * fraction).ceil() as usize).max(1)
    }
}
