//! Low-rank factorization of the shifted matrix `Q - lambda_n I` and the
//! coupling errors left by truncation.
//!
//! Shifting by the smallest eigenvalue makes the matrix positive
//! semidefinite, so it factors as `V V^T` with `V = U' (Sigma')^{1/2}` built
//! from the top-k eigenpairs. The squared Frobenius residual of that
//! truncation equals the tail sum of squared shifted eigenvalues, which is
//! what the threshold-parameterized coupling error measures.

use nalgebra::DMatrix;

use crate::ensemble::{eigendecompose, CouplingParams, Spectrum, SymmetricMatrix};
use crate::error::{Error, Result};

/// Relative tolerance below which a negative shifted eigenvalue is treated as
/// floating-point noise and clamped to zero before the square root.
const SHIFT_CLAMP_RELATIVE: f64 = 1e-9;

/// Rank-k factor `V` of the shifted matrix, with `V V^T ~= Q - lambda_n I`.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    factors: DMatrix<f64>,
    rank: usize,
}

impl LowRankFactor {
    pub fn rank(&self) -> usize {
        self.rank
    }

    /// The `n x k` factor matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.factors
    }

    /// Reconstructs the symmetric PSD product `V V^T`.
    pub fn product(&self) -> DMatrix<f64> {
        &self.factors * self.factors.transpose()
    }
}

/// Coupling error of truncating at normalized threshold `alpha`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationReport {
    /// Threshold on normalized eigenvalues; entries with `lambda_hat < alpha`
    /// are dropped.
    pub alpha: f64,
    /// Number of eigenvalues retained by the factorization.
    pub kept_count: usize,
    /// Tail sum of squared shifted eigenvalues (squared Frobenius units).
    pub raw_error: f64,
    /// `raw_error / (n j1^2)`.
    pub normalized_error: f64,
}

/// `q - lam_n * I`. With `lam_n` the smallest eigenvalue (or any lower
/// bound), the result is positive semidefinite up to solver noise.
pub fn shifted_matrix(q: &SymmetricMatrix, lam_n: f64) -> SymmetricMatrix {
    q.shifted(lam_n)
}

/// Rank-k factor of the shifted matrix from the top-k eigenpairs of `q`.
///
/// The shift uses the smallest computed eigenvalue of `q` itself, so the
/// shifted eigenvalues are nonnegative up to floating-point noise; noise
/// below `1e-9` of the spectral scale is clamped to zero, anything more
/// negative is reported as an invalid shift.
pub fn low_rank_factor(q: &SymmetricMatrix, k: usize) -> Result<LowRankFactor> {
    let n = q.dim();
    if k == 0 || k > n {
        return Err(Error::Domain(format!(
            "rank must lie in [1, {n}], got {k}"
        )));
    }
    let dec = eigendecompose(q)?;
    let values = dec.spectrum().values();
    let lam_n = dec.spectrum().smallest();
    let scale = values
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let tolerance = SHIFT_CLAMP_RELATIVE * scale;

    let mut factors = DMatrix::zeros(n, k);
    for (col, &value) in values.iter().take(k).enumerate() {
        let shifted = value - lam_n;
        let shifted = if shifted >= 0.0 {
            shifted
        } else if shifted >= -tolerance {
            0.0
        } else {
            return Err(Error::InvalidShift {
                value: shifted,
                tolerance,
            });
        };
        let weight = shifted.sqrt();
        factors.set_column(col, &(dec.vectors().column(col) * weight));
    }
    Ok(LowRankFactor { factors, rank: k })
}

/// Squared Frobenius norm of `(q - lam_n I) - V V^T`, computed entrywise.
pub fn frobenius_residual(q: &SymmetricMatrix, lam_n: f64, f: &LowRankFactor) -> Result<f64> {
    let n = q.dim();
    if f.factors.nrows() != n {
        return Err(Error::DimensionMismatch(format!(
            "factor has {} rows, matrix dimension is {n}",
            f.factors.nrows()
        )));
    }
    let product = f.product();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            let shifted = q.entry(i, j) - if i == j { lam_n } else { 0.0 };
            let d = shifted - product[(i, j)];
            acc += d * d;
        }
    }
    Ok(acc)
}

/// Exact tail sum `sum_{i > k} (lambda_i - lambda_n)^2` over the dropped
/// eigenvalues of a descending spectrum.
pub fn coupling_error_rank(s: &Spectrum, k: usize) -> Result<f64> {
    let n = s.len();
    if k > n {
        return Err(Error::Domain(format!(
            "rank must lie in [0, {n}], got {k}"
        )));
    }
    let lam_n = s.smallest();
    Ok(s.values()[k..]
        .iter()
        .map(|&v| {
            let d = v - lam_n;
            d * d
        })
        .sum())
}

/// Coupling error of truncating every eigenvalue with
/// `lambda_i - lambda_n < alpha (lambda_1 - lambda_n)` (strict inequality),
/// normalized by `n j1^2`.
pub fn coupling_error_threshold(
    s: &Spectrum,
    alpha: f64,
    cp: &CouplingParams,
) -> Result<TruncationReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let n = s.len();
    if n != cp.n() {
        return Err(Error::DimensionMismatch(format!(
            "spectrum has {n} eigenvalues, parameters expect {}",
            cp.n()
        )));
    }
    let spread = s.spread();
    if spread <= 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let lam_n = s.smallest();
    let cutoff = alpha * spread;
    let mut raw_error = 0.0;
    let mut kept_count = 0usize;
    for &v in s.values() {
        let d = v - lam_n;
        if d < cutoff {
            raw_error += d * d;
        } else {
            kept_count += 1;
        }
    }
    let normalized_error = raw_error / (n as f64 * cp.j1() * cp.j1());
    Ok(TruncationReport {
        alpha,
        kept_count,
        raw_error,
        normalized_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{sample_matrix, spectrum, trial_rng, RawParams};
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn random_matrix(n: usize, trial: u32) -> SymmetricMatrix {
        let rp = RawParams::new(0.1, 0.4, n).unwrap();
        sample_matrix(&rp, &mut trial_rng(1234, 0, trial))
    }

    #[test]
    fn diagonal_shift_example() {
        let q = SymmetricMatrix::from_diagonal(&[3.0, 1.0, -2.0]);
        let shifted = shifted_matrix(&q, -2.0);
        assert_eq!(shifted.entry(0, 0), 5.0);
        assert_eq!(shifted.entry(1, 1), 3.0);
        assert_eq!(shifted.entry(2, 2), 0.0);
    }

    #[test]
    fn shift_moves_spectrum_rigidly() {
        let q = random_matrix(20, 0);
        let s = spectrum(&q).unwrap();
        let shifted = spectrum(&shifted_matrix(&q, s.smallest())).unwrap();
        for (a, b) in s.values().iter().zip(shifted.values()) {
            assert_abs_diff_eq!(a - s.smallest(), *b, epsilon = 1e-10);
        }
        // Min-max normalization is invariant under the shift.
        let na = s.normalize().unwrap();
        let nb = spectrum(&shifted_matrix(&q, -0.7)).unwrap().normalize().unwrap();
        for (a, b) in na.values().iter().zip(nb.values()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-9);
        }
    }

    #[test]
    fn full_rank_factorization_has_no_residual() {
        let q = random_matrix(15, 1);
        let s = spectrum(&q).unwrap();
        let f = low_rank_factor(&q, 15).unwrap();
        let residual = frobenius_residual(&q, s.smallest(), &f).unwrap();
        let bound = 1e-8 * q.frobenius_norm();
        assert!(residual <= bound, "residual {residual} above {bound}");
    }

    #[test]
    fn rank_one_factor_of_diagonal_matrix() {
        let q = SymmetricMatrix::from_diagonal(&[5.0, 3.0, 0.0]);
        // Smallest eigenvalue is 0, so the shifted matrix equals q itself.
        let f = low_rank_factor(&q, 1).unwrap();
        let p = f.product();
        assert_relative_eq!(p[(0, 0)], 5.0, max_relative = 1e-10);
        for (i, j) in [(0, 1), (0, 2), (1, 1), (1, 2), (2, 2)] {
            assert_abs_diff_eq!(p[(i, j)], 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn residual_is_nonincreasing_in_rank() {
        let q = random_matrix(12, 2);
        let s = spectrum(&q).unwrap();
        let mut prev = f64::INFINITY;
        for k in 1..=12 {
            let f = low_rank_factor(&q, k).unwrap();
            let res = frobenius_residual(&q, s.smallest(), &f).unwrap();
            assert!(res <= prev + 1e-12, "residual grew at rank {k}");
            prev = res;
        }
    }

    #[test]
    fn rank_bounds_are_enforced() {
        let q = random_matrix(8, 3);
        assert!(low_rank_factor(&q, 0).is_err());
        assert!(low_rank_factor(&q, 9).is_err());
        let s = spectrum(&q).unwrap();
        assert!(coupling_error_rank(&s, 9).is_err());
        assert!(coupling_error_rank(&s, 8).is_ok());
    }

    #[test]
    fn residual_equals_tail_sum() {
        for &n in &[10usize, 50] {
            let q = random_matrix(n, n as u32);
            let s = spectrum(&q).unwrap();
            for &k in &[1usize, n / 2, n - 1, n] {
                let f = low_rank_factor(&q, k).unwrap();
                let residual = frobenius_residual(&q, s.smallest(), &f).unwrap();
                let tail = coupling_error_rank(&s, k).unwrap();
                if tail > 0.0 {
                    assert_relative_eq!(residual, tail, max_relative = 1e-9);
                } else {
                    assert_abs_diff_eq!(residual, 0.0, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn rank_error_hand_examples() {
        let s = Spectrum::from_eigenvalues(vec![3.0, 2.0, 1.0]);
        assert_eq!(coupling_error_rank(&s, 3).unwrap(), 0.0);
        assert_relative_eq!(
            coupling_error_rank(&s, 0).unwrap(),
            4.0 + 1.0 + 0.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(coupling_error_rank(&s, 1).unwrap(), 1.0, max_relative = 1e-15);
        // Dropping only the smallest eigenvalue contributes (lam_n - lam_n)^2 = 0.
        assert_eq!(coupling_error_rank(&s, 2).unwrap(), 0.0);
    }

    #[test]
    fn threshold_error_hand_examples() {
        let cp = CouplingParams::new(1.0, 1.0, 3).unwrap();
        let s = Spectrum::from_eigenvalues(vec![3.0, 2.0, 1.0]);

        let report = coupling_error_threshold(&s, 0.0, &cp).unwrap();
        assert_eq!(report.raw_error, 0.0);
        assert_eq!(report.kept_count, 3);

        // alpha = 0.6: cutoff 1.2, drops lambda_hat in {0.5, 0}.
        let report = coupling_error_threshold(&s, 0.6, &cp).unwrap();
        assert_relative_eq!(report.raw_error, 1.0, max_relative = 1e-15);
        assert_eq!(report.kept_count, 1);
        assert_relative_eq!(
            report.normalized_error,
            1.0 / 3.0,
            max_relative = 1e-15
        );

        // alpha = 1 keeps exactly the top eigenvalue (strict inequality).
        let report = coupling_error_threshold(&s, 1.0, &cp).unwrap();
        assert_eq!(report.kept_count, 1);
        assert_relative_eq!(report.raw_error, 1.0, max_relative = 1e-15);

        assert!(coupling_error_threshold(&s, 1.2, &cp).is_err());
        let flat = Spectrum::from_eigenvalues(vec![2.0, 2.0, 2.0]);
        assert!(matches!(
            coupling_error_threshold(&flat, 0.5, &cp),
            Err(Error::DegenerateSpectrum)
        ));
    }

    #[test]
    fn threshold_error_is_nondecreasing_in_alpha() {
        let n = 30;
        let q = random_matrix(n, 7);
        let s = spectrum(&q).unwrap();
        let cp = CouplingParams::new(1.0, 0.4, n).unwrap();
        let mut prev = -1.0;
        for i in 0..=100 {
            let alpha = i as f64 / 100.0;
            let report = coupling_error_threshold(&s, alpha, &cp).unwrap();
            assert!(report.raw_error >= prev);
            prev = report.raw_error;
        }
    }

    #[test]
    fn threshold_and_rank_parameterizations_agree() {
        let n = 25;
        let q = random_matrix(n, 9);
        let s = spectrum(&q).unwrap();
        let cp = CouplingParams::new(1.0, 0.4, n).unwrap();
        for i in 0..=20 {
            let alpha = i as f64 / 20.0;
            let report = coupling_error_threshold(&s, alpha, &cp).unwrap();
            let by_rank = coupling_error_rank(&s, report.kept_count).unwrap();
            assert_relative_eq!(report.raw_error, by_rank, max_relative = 1e-12);
        }
    }

    #[test]
    fn truncation_report_is_shift_invariant() {
        let n = 20;
        let q = random_matrix(n, 4);
        let cp = CouplingParams::new(1.0, 0.4, n).unwrap();
        let s = spectrum(&q).unwrap();
        let s_shifted = spectrum(&q.shifted(-2.5)).unwrap();
        for alpha in [0.1, 0.5, 0.9] {
            let a = coupling_error_threshold(&s, alpha, &cp).unwrap();
            let b = coupling_error_threshold(&s_shifted, alpha, &cp).unwrap();
            assert_eq!(a.kept_count, b.kept_count);
            assert_relative_eq!(a.raw_error, b.raw_error, max_relative = 1e-9);
            assert_relative_eq!(
                a.normalized_error,
                b.normalized_error,
                max_relative = 1e-9
            );
        }
    }
}
