//! Open spatial regions on the grid and the projectors built from them.
//!
//! A region owns the grid indices strictly inside each interval. The grid
//! point at each finite end of an interval is a boundary site: it belongs to
//! the complement, and the lattice current on the face between it and the
//! adjacent interior site is the flux through that end.

use std::ops::Range;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::SpatialGrid;
use crate::wavefunction::WaveFunction;

/// Fraction of the grid kept free at an edge when a half-line is realised
/// with an artificial cut.
pub const HALF_LINE_MARGIN: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Orientation of a boundary face relative to the region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryFace {
    /// Boundary site index (outside the region).
    pub site: usize,
    /// Lower index of the face `(face, face + 1)` between interior and boundary site.
    pub face: usize,
    /// Outward normal: `+1` at a right end, `-1` at a left end.
    pub outward: f64,
    /// Last interior index adjacent to the boundary site.
    pub interior: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    grid: SpatialGrid,
    intervals: Vec<Range<usize>>,
    mask: Vec<bool>,
    cuts: Vec<Side>,
}

impl Region {
    /// Builds a region from interior index ranges. Ranges must be non-empty,
    /// sorted and separated by at least one boundary site.
    pub fn from_intervals(grid: SpatialGrid, intervals: Vec<Range<usize>>) -> Result<Self> {
        let n = grid.len();
        for iv in &intervals {
            if iv.start >= iv.end || iv.end > n {
                return Err(Error::InvalidParameter {
                    name: "region",
                    reason: format!("interval {iv:?} empty or outside 0..{n}"),
                });
            }
        }
        for w in intervals.windows(2) {
            if w[1].start <= w[0].end {
                return Err(Error::InvalidParameter {
                    name: "region",
                    reason: format!("intervals {:?} and {:?} overlap or touch", w[0], w[1]),
                });
            }
        }
        let mut mask = vec![false; n];
        for iv in &intervals {
            mask[iv.clone()].iter_mut().for_each(|m| *m = true);
        }
        Ok(Self {
            grid,
            intervals,
            mask,
            cuts: Vec::new(),
        })
    }

    /// Open interval `(a, b)`. Both ends snap to the nearest grid point,
    /// which becomes a boundary site.
    pub fn between(grid: &SpatialGrid, a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::InvalidParameter {
                name: "region",
                reason: format!("need b > a, got ({a}, {b})"),
            });
        }
        let ia = grid.nearest_index(a);
        let ib = grid.nearest_index(b);
        if ib <= ia + 1 {
            return Err(Error::InvalidParameter {
                name: "region",
                reason: format!("({a}, {b}) contains no interior grid point"),
            });
        }
        #[allow(clippy::single_range_in_vec_init)]
        Self::from_intervals(*grid, vec![ia + 1..ib])
    }

    /// Half-line `(-inf, b)`, realised as `(x_min + 5% of the length, b)`.
    pub fn left_of(grid: &SpatialGrid, b: f64) -> Result<Self> {
        let a = grid.x_min() + HALF_LINE_MARGIN * grid.length();
        let mut r = Self::between(grid, a, b)?;
        r.cuts.push(Side::Left);
        Ok(r)
    }

    /// Half-line `(a, +inf)`, realised as `(a, x_max - 5% of the length)`.
    pub fn right_of(grid: &SpatialGrid, a: f64) -> Result<Self> {
        let b = grid.x_max() - HALF_LINE_MARGIN * grid.length();
        let mut r = Self::between(grid, a, b)?;
        r.cuts.push(Side::Right);
        Ok(r)
    }

    /// Every grid point; the projector is the identity.
    pub fn full(grid: &SpatialGrid) -> Self {
        #[allow(clippy::single_range_in_vec_init)]
        Self::from_intervals(*grid, vec![0..grid.len()]).expect("full range is valid")
    }

    pub fn empty(grid: &SpatialGrid) -> Self {
        Self::from_intervals(*grid, Vec::new()).expect("empty region is valid")
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn intervals(&self) -> &[Range<usize>] {
        &self.intervals
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, i: usize) -> bool {
        self.mask[i]
    }

    pub fn is_full(&self) -> bool {
        self.mask.iter().all(|&m| m)
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    /// Grid edges lying behind an artificial half-line cut.
    pub fn artificial_cuts(&self) -> &[Side] {
        &self.cuts
    }

    /// Boundary faces, ordered left to right.
    pub fn boundary_faces(&self) -> Vec<BoundaryFace> {
        let n = self.grid.len();
        let mut faces = Vec::new();
        for iv in &self.intervals {
            if iv.start > 0 {
                faces.push(BoundaryFace {
                    site: iv.start - 1,
                    face: iv.start - 1,
                    outward: -1.0,
                    interior: iv.start,
                });
            }
            if iv.end < n {
                faces.push(BoundaryFace {
                    site: iv.end,
                    face: iv.end - 1,
                    outward: 1.0,
                    interior: iv.end - 1,
                });
            }
        }
        faces
    }

    /// Grid positions of the boundary sites.
    pub fn boundary_positions(&self) -> Vec<f64> {
        self.boundary_faces().iter().map(|f| self.grid.x(f.site)).collect()
    }

    /// `||chi psi||^2`.
    pub fn probability(&self, psi: &WaveFunction) -> Result<f64> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        let s: f64 = self
            .intervals
            .iter()
            .map(|iv| psi.amplitudes()[iv.clone()].iter().map(|a| a.norm_sqr()).sum::<f64>())
            .sum();
        Ok(s * self.grid.dx())
    }

    /// Multiplies by the characteristic function in place.
    pub fn clip(&self, psi: &mut WaveFunction) -> Result<()> {
        if psi.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        for (a, &m) in psi.amplitudes_mut().iter_mut().zip(&self.mask) {
            if !m {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        Ok(())
    }
}

/// No-click projector: spatial (characteristic function of a region) or
/// rank one onto a normalized state.
#[derive(Debug, Clone, PartialEq)]
pub enum Projector {
    Spatial(Region),
    RankOne(WaveFunction),
}

impl Projector {
    pub fn rank_one(state: WaveFunction) -> Result<Self> {
        let n = state.norm();
        if n < 1e-300 {
            return Err(Error::EmptyOverlap { norm: n });
        }
        Ok(Projector::RankOne(state.normalized()))
    }

    pub fn identity(grid: &SpatialGrid) -> Self {
        Projector::Spatial(Region::full(grid))
    }

    pub fn grid(&self) -> &SpatialGrid {
        match self {
            Projector::Spatial(r) => r.grid(),
            Projector::RankOne(s) => s.grid(),
        }
    }

    pub fn region(&self) -> Option<&Region> {
        match self {
            Projector::Spatial(r) => Some(r),
            Projector::RankOne(_) => None,
        }
    }

    /// Applies the projector; the result is not renormalized.
    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        let mut out = psi.clone();
        self.apply_in_place(&mut out)?;
        Ok(out)
    }

    pub fn apply_in_place(&self, psi: &mut WaveFunction) -> Result<()> {
        match self {
            Projector::Spatial(r) => r.clip(psi),
            Projector::RankOne(s) => {
                let c = s.inner(psi)?;
                let amps: Vec<Complex64> = s.amplitudes().iter().map(|a| a * c).collect();
                psi.amplitudes_mut().copy_from_slice(&amps);
                Ok(())
            }
        }
    }

    /// Complementary (click) projector `1 - pi_bar` applied to `psi`.
    pub fn apply_complement(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        let p = self.apply(psi)?;
        let amps = psi
            .amplitudes()
            .iter()
            .zip(p.amplitudes())
            .map(|(a, b)| a - b)
            .collect();
        WaveFunction::new(*psi.grid(), amps)
    }
}

/// `chi * inner`, renormalized to one.
pub fn truncated_state(region: &Region, inner: &WaveFunction) -> Result<WaveFunction> {
    let mut psi = inner.clone();
    region.clip(&mut psi)?;
    let norm = psi.norm();
    if norm < 1e-12 {
        return Err(Error::EmptyOverlap { norm });
    }
    psi.normalize();
    Ok(psi)
}
