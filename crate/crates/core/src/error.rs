//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by simulation, calibration and I/O routines.
#[derive(Debug, Error)]
pub enum SimError {
    /// An argument is outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// An inconsistent or incomplete configuration was supplied.
    #[error("configuration error: {0}")]
    Config(String),

    /// A waveform evaluated to a non-finite value.
    #[error("evaluation error at t = {t_us} us: waveform sample is not finite")]
    NonFiniteSample { t_us: f64 },

    /// Operands have incompatible dimensions.
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    /// Numerical guarantee was violated (unitarity loss, eigensolver failure, ...).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Coefficient optimization did not reach the requested fidelity.
    #[error(
        "optimization failed: best fidelity {best_fidelity} at (nu_v, nu_w) = ({nu_v}, {nu_w})"
    )]
    OptimizationFailed {
        best_fidelity: f64,
        nu_v: f64,
        nu_w: f64,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SimError>;
