use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub const HERMITICITY_TOLERANCE: f64 = 1e-12;

/// Frobenius norms of `[H, pi_bar]` and `pi_bar [H, pi_bar]` for a diagonal
/// projector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDimCheck {
    pub dim: usize,
    pub rank: usize,
    pub commutator_norm: f64,
    pub magic_norm: f64,
}

pub fn finite_dim_impossibility(h: &DMatrix<Complex64>, mask: &[bool]) -> Result<FiniteDimCheck> {
    let dim = h.nrows();
    if h.ncols() != dim || mask.len() != dim {
        return Err(Error::InvalidParameter {
            name: "finite_dim",
            reason: format!("{}x{} matrix with mask of length {}", h.nrows(), h.ncols(), mask.len()),
        });
    }
    let deviation = (h - h.adjoint()).iter().fold(0.0f64, |m, z| m.max(z.norm()));
    if deviation > HERMITICITY_TOLERANCE {
        return Err(Error::NotHermitian(deviation));
    }
    // (H pi - pi H)_{ij} = H_ij (m_j - m_i); row i of pi [H, pi] survives when m_i
    let (mut comm, mut magic) = (0.0, 0.0);
    for i in 0..dim {
        for j in 0..dim {
            let f = f64::from(u8::from(mask[j])) - f64::from(u8::from(mask[i]));
            let c = h[(i, j)].norm_sqr() * f * f;
            comm += c;
            if mask[i] {
                magic += c;
            }
        }
    }
    Ok(FiniteDimCheck {
        dim,
        rank: mask.iter().filter(|&&m| m).count(),
        commutator_norm: comm.sqrt(),
        magic_norm: magic.sqrt(),
    })
}

/// Hermitian matrix with standard-normal real and imaginary entries,
/// symmetrised as `(A + A^dagger) / 2`.
pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> DMatrix<Complex64> {
    let a = DMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    });
    (&a + a.adjoint()).scale(0.5)
}

/// Random trials over dimensions `dims` (inclusive bounds); each projector
/// has rank uniform in `[1, dim - 1]` on a random subset of basis states.
pub fn random_trials(n_trials: usize, dims: (usize, usize), seed: u64) -> Result<Vec<FiniteDimCheck>> {
    let (lo, hi) = dims;
    if lo < 2 || hi < lo {
        return Err(Error::InvalidParameter {
            name: "run.dims",
            reason: format!("need 2 <= min <= max, got ({lo}, {hi})"),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_trials)
        .map(|_| {
            let dim = rng.random_range(lo..=hi);
            let rank = rng.random_range(1..dim);
            let mut mask: Vec<bool> = (0..dim).map(|i| i < rank).collect();
            mask.shuffle(&mut rng);
            let h = random_hermitian(dim, &mut rng);
            finite_dim_impossibility(&h, &mask)
        })
        .collect()
}
