use thiserror::Error;

/// Errors raised by the witness toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is not Hermitian (max |A - A*| = {defect:e})")]
    NotHermitian { defect: f64 },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("excluded parameter: {0}")]
    ExcludedParameter(String),

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("matrix is not positive semi-definite (min eigenvalue {min_eig:e})")]
    NotPositiveSemidefinite { min_eig: f64 },

    #[error("pairing has imaginary residue {value:e}")]
    ImaginaryResidue { value: f64 },

    #[error("product vector #{index} is not in the kill set (kill value {value:e})")]
    NotInKillSet { index: usize, value: f64 },

    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    #[error("null-space dimension not stabilized: {coarse} at the base sampling, {fine} at double sampling")]
    InsufficientSamples { coarse: usize, fine: usize },

    #[error("no convergence (residual {residual:e})")]
    NonConvergence { residual: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
