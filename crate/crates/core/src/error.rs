use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("packet truncated: edge amplitude ratio {ratio:.3e} exceeds 1e-8 of peak")]
    PacketTruncated { ratio: f64 },
    #[error("state has no overlap with the region (norm {norm:.3e})")]
    EmptyOverlap { norm: f64 },
    #[error("grid mismatch between operands")]
    GridMismatch,
    #[error("potential is not finite at x = {x}")]
    NonFinitePotential { x: f64 },
    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("unknown propagator method `{0}`")]
    UnknownPropagator(String),
    #[error("boundary leak at t = {time}: probability {probability:.3e} in the guard zone")]
    BoundaryLeak { time: f64, probability: f64 },
    #[error("boundary extrapolation diverged: successive extrapolants {previous} and {last}")]
    ExtrapolationDiverged { previous: f64, last: f64 },
    #[error("state not supported inside the no-click subspace (residual {residual:.3e})")]
    InitialStateOutsideRegion { residual: f64 },
    #[error("survival probability underflow at step {step}")]
    SurvivalUnderflow { step: usize },
    #[error("conditional state {0} was not stored")]
    StateNotStored(usize),
    #[error("flux is negative inside the window at t = {time} (flux {flux:.3e})")]
    NonMonotoneWindow { time: f64, flux: f64 },
    #[error("no plateau of at least 3 consecutive time steps within 2%")]
    NoPlateau,
    #[error("matrix is not hermitian (deviation {0:.3e})")]
    NotHermitian(f64),
}

pub type Result<T> = std::result::Result<T, Error>;
