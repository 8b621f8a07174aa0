//! Gaussian symmetric random matrices with a finite mean, their spectra, and
//! the min-max normalization that rescales every spectrum onto [0, 1].
//!
//! The ensemble is parameterized either by raw element statistics
//! ([`RawParams`]: mean `mu`, off-diagonal deviation `sigma`) or by the
//! spin-glass couplings ([`CouplingParams`]: `mu = j0/n`, `sigma = j1/sqrt(n)`),
//! which make the spectral scale independent of the dimension.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{is_positive_finite, Error, Result};

/// Smallest admissible matrix dimension; the finite-size formulas use `n - 2`.
pub const MIN_DIMENSION: usize = 3;

/// Spin-glass parameterization of the ensemble: mean coupling scale `j0`,
/// disorder scale `j1`, and dimension `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingParams {
    j0: f64,
    j1: f64,
    n: usize,
}

impl CouplingParams {
    pub fn new(j0: f64, j1: f64, n: usize) -> Result<Self> {
        if !is_positive_finite(j0) {
            return Err(Error::ParameterDomain(format!(
                "j0 must be a positive finite real, got {j0}"
            )));
        }
        if !is_positive_finite(j1) {
            return Err(Error::ParameterDomain(format!(
                "j1 must be a positive finite real, got {j1}"
            )));
        }
        if n < MIN_DIMENSION {
            return Err(Error::ParameterDomain(format!(
                "n must be at least {MIN_DIMENSION}, got {n}"
            )));
        }
        Ok(Self { j0, j1, n })
    }

    pub fn j0(&self) -> f64 {
        self.j0
    }

    pub fn j1(&self) -> f64 {
        self.j1
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Disorder-to-mean ratio `j1/j0`; the normalized spectrum depends on the
    /// couplings only through this number.
    pub fn ratio(&self) -> f64 {
        self.j1 / self.j0
    }

    /// Element-level statistics: `mu = j0/n`, `sigma = j1/sqrt(n)`.
    pub fn raw_params(&self) -> RawParams {
        let n = self.n as f64;
        RawParams {
            mu: self.j0 / n,
            sigma: self.j1 / n.sqrt(),
            n: self.n,
        }
    }
}

/// Raw element statistics of the ensemble: every off-diagonal entry is
/// `N(mu, sigma^2)`, every diagonal entry `N(mu, 2 sigma^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    mu: f64,
    sigma: f64,
    n: usize,
}

impl RawParams {
    pub fn new(mu: f64, sigma: f64, n: usize) -> Result<Self> {
        if !is_positive_finite(mu) {
            return Err(Error::ParameterDomain(format!(
                "mu must be a positive finite real, got {mu}"
            )));
        }
        if !is_positive_finite(sigma) {
            return Err(Error::ParameterDomain(format!(
                "sigma must be a positive finite real, got {sigma}"
            )));
        }
        if n < MIN_DIMENSION {
            return Err(Error::ParameterDomain(format!(
                "n must be at least {MIN_DIMENSION}, got {n}"
            )));
        }
        Ok(Self { mu, sigma, n })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

/// Expected extreme eigenvalues of one draw: the detached largest eigenvalue
/// sits at `n*mu + sigma^2/mu`, the semicircle bulk spans
/// `[-2 sqrt(n) sigma, 2 sqrt(n) sigma]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedExtremes {
    pub largest: f64,
    pub second_largest: f64,
    pub smallest: f64,
}

/// Deterministic expectations of `(lambda_1, lambda_2, lambda_n)`.
///
/// The expression for `largest` assumes the detached regime
/// `sigma <= sqrt(n) * mu`; outside it the bulk edge `second_largest` is the
/// physically relevant top of the spectrum.
pub fn expected_extremes(cp: &CouplingParams) -> ExpectedExtremes {
    let rp = cp.raw_params();
    let n = rp.n as f64;
    let edge = 2.0 * n.sqrt() * rp.sigma;
    ExpectedExtremes {
        largest: n * rp.mu + rp.sigma * rp.sigma / rp.mu,
        second_largest: edge,
        smallest: -edge,
    }
}

/// Dense real symmetric matrix with exactly mirrored storage: the strict
/// upper triangle is the source of truth and the lower triangle is its copy,
/// so `entry(i, j) == entry(j, i)` holds bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    data: DMatrix<f64>,
}

impl SymmetricMatrix {
    /// Builds a matrix by evaluating `f(i, j)` on the upper triangle
    /// (`i <= j`) and mirroring.
    pub fn from_upper_triangle(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                data[(i, j)] = v;
                data[(j, i)] = v;
            }
        }
        Self { data }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_upper_triangle(n, |i, j| if i == j { diag[i] } else { 0.0 })
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.data[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    /// `self - shift * I`; subtracting a multiple of the identity preserves
    /// symmetry and shifts every eigenvalue by `-shift`.
    pub fn shifted(&self, shift: f64) -> SymmetricMatrix {
        let mut data = self.data.clone();
        for i in 0..data.nrows() {
            data[(i, i)] -= shift;
        }
        SymmetricMatrix { data }
    }
}

/// Seeded generator for one Monte Carlo trial.
///
/// Streams are derived from `(master_seed, set_index, trial_index)`, so trials
/// are order-independent and can run in parallel while staying reproducible.
pub type TrialRng = ChaCha8Rng;

/// Builds the RNG stream for a given parameter set and trial.
pub fn trial_rng(master_seed: u64, set_index: u32, trial_index: u32) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((set_index as u64) << 32) | trial_index as u64);
    rng
}

/// Draws one symmetric matrix: independent `N(mu, sigma^2)` strict upper
/// triangle, independent `N(mu, 2 sigma^2)` diagonal, lower triangle mirrored.
///
/// The traversal order (row by row, diagonal first, then the strict upper
/// entries of that row) is part of the reproducibility contract: identical
/// `(rp, rng)` always yields the bit-identical matrix.
pub fn sample_matrix<R: Rng>(rp: &RawParams, rng: &mut R) -> SymmetricMatrix {
    let off_diag = Normal::new(rp.mu, rp.sigma).expect("validated sigma");
    let diag = Normal::new(rp.mu, std::f64::consts::SQRT_2 * rp.sigma).expect("validated sigma");
    SymmetricMatrix::from_upper_triangle(rp.n, |i, j| {
        if i == j {
            diag.sample(rng)
        } else {
            off_diag.sample(rng)
        }
    })
}

/// Eigenvalues of one draw, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    values: Vec<f64>,
}

impl Spectrum {
    /// Sorts the given eigenvalues descending (stable, so exact ties keep
    /// solver output order).
    pub fn from_eigenvalues(mut values: Vec<f64>) -> Self {
        values.sort_by(|a, b| b.partial_cmp(a).expect("finite eigenvalues"));
        Self { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn largest(&self) -> f64 {
        self.values[0]
    }

    pub fn smallest(&self) -> f64 {
        *self.values.last().expect("non-empty spectrum")
    }

    /// `lambda_1 - lambda_n`.
    pub fn spread(&self) -> f64 {
        self.largest() - self.smallest()
    }

    /// Min-max normalization `(lambda - lambda_n) / (lambda_1 - lambda_n)`.
    pub fn normalize(&self) -> Result<NormalizedSpectrum> {
        let lo = self.smallest();
        let spread = self.spread();
        if spread <= 0.0 {
            return Err(Error::DegenerateSpectrum);
        }
        let values = self
            .values
            .iter()
            .map(|&v| (v - lo) / spread)
            .collect::<Vec<_>>();
        Ok(NormalizedSpectrum { values })
    }
}

/// Min-max normalized spectrum: descending values in [0, 1] with the first
/// exactly 1 and the last exactly 0 by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSpectrum {
    values: Vec<f64>,
}

impl NormalizedSpectrum {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Iteration cap for the symmetric QR eigensolver. Tridiagonal QR converges
/// in a few sweeps per eigenvalue; hitting the cap is reported, never ignored.
const EIGEN_MAX_ITERATIONS: usize = 4096;

fn check_finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::EigensolverFailure(
            "non-finite eigenvalue in solver output".into(),
        ))
    }
}

/// Eigenvalues of a symmetric matrix, descending. Eigenvectors are not
/// accumulated; this is the fast path for spectral statistics.
pub fn spectrum(m: &SymmetricMatrix) -> Result<Spectrum> {
    let values = m.as_dmatrix().clone().symmetric_eigenvalues();
    let values = values.iter().copied().collect::<Vec<_>>();
    check_finite(&values)?;
    Ok(Spectrum::from_eigenvalues(values))
}

/// Full eigendecomposition with eigenvector columns matching the descending
/// eigenvalue order.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    spectrum: Spectrum,
    vectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn spectrum(&self) -> &Spectrum {
        &self.spectrum
    }

    /// Orthonormal eigenvectors as columns; column `i` pairs with
    /// `spectrum().values()[i]`.
    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }
}

/// Symmetric eigendecomposition with eigenvectors, sorted descending.
pub fn eigendecompose(m: &SymmetricMatrix) -> Result<SpectralDecomposition> {
    let eig = SymmetricEigen::try_new(m.as_dmatrix().clone(), f64::EPSILON, EIGEN_MAX_ITERATIONS)
        .ok_or_else(|| {
        Error::EigensolverFailure(format!(
            "no convergence within {EIGEN_MAX_ITERATIONS} iterations"
        ))
    })?;
    let raw = eig.eigenvalues.iter().copied().collect::<Vec<_>>();
    check_finite(&raw)?;

    // Stable descending sort of (value, original column) pairs, then permute
    // the eigenvector columns to match.
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&a, &b| raw[b].partial_cmp(&raw[a]).expect("finite eigenvalues"));
    let values = order.iter().map(|&i| raw[i]).collect::<Vec<_>>();
    let n = raw.len();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok(SpectralDecomposition {
        spectrum: Spectrum { values },
        vectors,
    })
}
