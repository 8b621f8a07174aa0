//! Statistics of min-max normalized eigenvalues of Gaussian symmetric random
//! matrices.
//!
//! The crate provides:
//!
//! - [`ensemble`]: seeded sampling of symmetric matrices with a finite mean,
//!   spectra, and min-max normalization onto [0, 1];
//! - [`theory`]: the closed-form distribution of normalized eigenvalues (its
//!   finite-size and asymptotic forms), the deterministic position `r` of the
//!   normalized second-largest eigenvalue, and the predicted coupling error
//!   of rank-truncated factorizations;
//! - [`factorization`]: the positive-semidefinite shift `Q - lambda_n I`, its
//!   rank-k factors `V V^T`, and empirical coupling errors by rank or by
//!   normalized-eigenvalue threshold;
//! - [`experiments`]: seeded Monte Carlo harnesses comparing empirical
//!   distributions and error curves against the theory, with CSV/JSON output.

pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod factorization;
pub mod theory;

pub use ensemble::{
    eigendecompose, expected_extremes, sample_matrix, spectrum, trial_rng, CouplingParams,
    NormalizedSpectrum, RawParams, Spectrum, SymmetricMatrix, TrialRng,
};
pub use error::{Error, Result};
pub use factorization::{
    coupling_error_rank, coupling_error_threshold, frobenius_residual, low_rank_factor,
    shifted_matrix, LowRankFactor, TruncationReport,
};
pub use theory::{
    cdf_asymptotic, coupling_error_asymptotic, g_function, r_value, semicircle_cdf_component,
    Regime, TheoryModel,
};
