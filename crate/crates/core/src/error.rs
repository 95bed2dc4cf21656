//! Error type shared by all modules.

use thiserror::Error;

/// Errors reported by the library.
///
/// The CLI maps these onto exit codes: argument/data problems are usage
/// errors, everything else is a numerical failure of the requested
/// computation.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Caller passed inconsistent or out-of-range arguments.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Input data violates a precondition (non-finite values, too short, ...).
    #[error("invalid data: {0}")]
    InvalidData(String),

    /// A linear system that should be positive definite is singular or
    /// indefinite, typically caused by constant or collinear series.
    #[error("degenerate system: {0}")]
    Degenerate(String),

    /// A spectral matrix could not be inverted at some grid frequency.
    #[error("singular spectral matrix at frequency index {index}: {detail}")]
    SingularFrequency { index: usize, detail: String },

    /// Autoregressive parameters are not stable (unit or explosive roots).
    #[error("unstable autoregression: companion spectral radius {radius}")]
    Unstable { radius: f64 },

    /// An internal consistency check failed, e.g. a grid that should be
    /// conjugate-symmetric produced a large imaginary residue.
    #[error("inconsistent spectral data: {0}")]
    Inconsistent(String),

    /// The free-parameter information matrix is singular.
    #[error("parameters not identifiable: {0}")]
    Unidentifiable(String),

    /// Exhaustive graph enumeration refused without an explicit cap override.
    #[error("graph enumeration for d = {d} yields {count} graphs, above the cap of d <= {cap}")]
    EnumerationCap { d: usize, count: u128, cap: usize },

    /// Model selection could not designate a best model.
    #[error("model selection failed: {0}")]
    SelectionFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
