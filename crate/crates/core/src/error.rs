//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("lattice dims must be >= 3 on every axis, got {0}x{1}x{2}")]
    LatticeTooSmall(usize, usize, usize),
    #[error("lattice spacing must be positive on every axis")]
    NonPositiveSpacing,
    #[error("axis index must be 0, 1, or 2, got {0}")]
    InvalidAxis(usize),
    #[error("fields live on different lattices")]
    LatticeMismatch,
    #[error("hbar, mass, and light speed must all be positive")]
    InvalidUnits,
    #[error("invalid evolution config: {0}")]
    InvalidEvolution(&'static str),
    #[error("cannot normalize a field with zero norm")]
    ZeroNorm,
    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDidNotConverge { iterations: usize, residual: f64 },
    #[error("linear solver breakdown at iteration {iterations} (relative residual {residual:e})")]
    SolverBreakdown { iterations: usize, residual: f64 },
    #[error("field expected real but max |Im| = {max_im:e} exceeds {tolerance:e} x scale {scale:e}")]
    NotReal {
        max_im: f64,
        scale: f64,
        tolerance: f64,
    },
    #[error("boundary density is {ratio:e} of the peak, above the {limit:e} guard; use a narrower packet or a larger box")]
    BoundaryDensity { ratio: f64, limit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
