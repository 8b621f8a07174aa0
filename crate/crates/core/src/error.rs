//! Error types shared across the crate.

use thiserror::Error;

/// Errors produced by parameter validation, numerical routines, and
/// experiment plumbing.
#[derive(Debug, Error)]
pub enum Error {
    /// A model parameter violates its domain (non-positive scale, n too small, ...).
    #[error("parameter out of domain: {0}")]
    ParameterDomain(String),

    /// A function argument lies outside the documented domain.
    #[error("argument out of domain: {0}")]
    Domain(String),

    /// Min-max normalization is undefined when the spectrum has zero spread.
    #[error("degenerate spectrum: largest and smallest eigenvalues coincide")]
    DegenerateSpectrum,

    /// The symmetric eigensolver did not converge or returned non-finite values.
    #[error("symmetric eigensolver failed: {0}")]
    EigensolverFailure(String),

    /// A shifted eigenvalue was materially negative, so the PSD square root
    /// does not exist; the shift was not a lower bound of the spectrum.
    #[error("invalid shift: shifted eigenvalue {value:.6e} below tolerance {tolerance:.6e}")]
    InvalidShift { value: f64, tolerance: f64 },

    /// Matrix/spectrum dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// An experiment configuration failed validation.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serialize(#[from] serde_json::Error),
}

impl Error {
    /// True for failures of the numerics themselves, as opposed to rejected
    /// inputs. The CLI maps these to a distinct exit code.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::EigensolverFailure(_) | Error::InvalidShift { .. } | Error::DegenerateSpectrum
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// True for finite, strictly positive reals; rejects NaN and infinities.
pub(crate) fn is_positive_finite(v: f64) -> bool {
    v.is_finite() && v > 0.0
}
