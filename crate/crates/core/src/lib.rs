//! Numerical laboratory for passive quantum measurement on a 1D grid:
//! wave-packet propagation, repeated no-click projections, survival and
//! hazard statistics, boundary terms of the energy expectation and
//! flux-based arrival-time distributions.
//!
//! Units have `hbar = 1` throughout.

// negated comparisons are deliberate: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod arrival;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod measurement;
pub mod numerics;
pub mod polar;
pub mod propagator;
pub mod region;
pub mod wavefunction;
pub mod zeno_lab;

pub use error::{Error, Result};
pub use grid::SpatialGrid;
pub use hamiltonian::HamiltonianSpec;
pub use polar::{polar_decompose, PolarFields};
pub use propagator::{evolve, Propagator, PropagatorConfig, PropagatorRegistry};
pub use region::{truncated_state, Projector, Region};
pub use wavefunction::{gaussian_packet, WaveFunction};
