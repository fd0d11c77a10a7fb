use thiserror::Error;

use crate::transverse::Regime;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("operation requires the {expected:?} regime, got {actual:?}")]
    InvalidRegime { expected: Regime, actual: Regime },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("curvature radius is undefined at the corner s = {0}")]
    Corner(f64),

    #[error("symmetric factorization broke down at shift {sigma} (pivot {pivot:e})")]
    Breakdown { sigma: f64, pivot: f64 },

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence {
        iterations: usize,
        /// Best (eigenvalue, residual) pairs available when the solver gave up.
        best: Vec<(f64, f64)>,
    },

    #[error("quadrature not resolved: two-level relative change {rel_change:e}")]
    Unresolved { rel_change: f64 },

    #[error("geometry: {0}")]
    Geometry(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
