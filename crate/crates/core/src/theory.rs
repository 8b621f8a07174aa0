//! Closed-form statistics of min-max normalized eigenvalues.
//!
//! Everything here is deterministic: the regime split, the position `r` of
//! the normalized second-largest eigenvalue, the finite-size and asymptotic
//! cumulative distributions, and the predicted coupling error of truncated
//! factorizations as a function of the threshold ratio `alpha`.
//!
//! All formulas are evaluated in terms of the ratio `j1/j0`, so any common
//! rescaling of the couplings leaves the results bit-identical.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ensemble::CouplingParams;
use crate::error::{is_positive_finite, Error, Result};

/// Whether the largest eigenvalue detaches from the semicircle bulk.
///
/// `BulkSeparated` (`j1 <= j0`, equivalently `sigma <= sqrt(n) mu`): the
/// largest eigenvalue sits above the bulk and the normalized bulk occupies
/// `[0, r]`. `BulkDominated` (`j1 > j0`): the bulk absorbs the largest
/// eigenvalue and spans all of `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    BulkSeparated,
    BulkDominated,
}

impl Regime {
    pub fn from_couplings(j0: f64, j1: f64) -> Regime {
        if j1 <= j0 {
            Regime::BulkSeparated
        } else {
            Regime::BulkDominated
        }
    }
}

/// Deterministic normalized position of the second-largest eigenvalue:
/// `r = 4 (j1/j0) / (1 + j1/j0)^2`.
///
/// Symmetric under `ratio -> 1/ratio`, equal to 1 iff `j0 == j1`.
pub fn r_value(j0: f64, j1: f64) -> Result<f64> {
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
    Ok(r_from_ratio(j1 / j0))
}

fn r_from_ratio(ratio: f64) -> f64 {
    let s = 1.0 + ratio;
    4.0 * ratio / (s * s)
}

/// Definite integral of the semicircle kernel,
/// `S(x; r) = integral_0^x sqrt(r^2 - (2t - r)^2) dt` for `0 <= x <= r`.
///
/// Evaluated in closed form:
/// `S = ((2x - r) sqrt(r^2 - (2x - r)^2) + r^2 asin((2x - r)/r)) / 4 + pi r^2 / 8`.
pub fn semicircle_cdf_component(x: f64, r: f64) -> Result<f64> {
    if !is_positive_finite(r) || r > 1.0 {
        return Err(Error::Domain(format!("r must lie in (0, 1], got {r}")));
    }
    if !(0.0..=r).contains(&x) {
        return Err(Error::Domain(format!("x must lie in [0, {r}], got {x}")));
    }
    Ok(semicircle_component_unchecked(x, r))
}

fn semicircle_component_unchecked(x: f64, r: f64) -> f64 {
    let u = 2.0 * x - r;
    let radicand = (r * r - u * u).max(0.0);
    let s = (u / r).clamp(-1.0, 1.0);
    0.25 * (u * radicand.sqrt() + r * r * s.asin()) + PI * r * r / 8.0
}

/// Kernel of the coupling-error formulas:
/// `g(x) = 15 (pi - acos(2x - 1)) - 2 sqrt(x (1 - x)) (15 + 10x + 8x^2 - 48x^3)`,
/// nondecreasing on [0, 1] with `g(0) = 0` and `g(1) = 15 pi`.
pub fn g_function(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x must lie in [0, 1], got {x}")));
    }
    Ok(g_unchecked(x))
}

fn g_unchecked(x: f64) -> f64 {
    let u = (2.0 * x - 1.0).clamp(-1.0, 1.0);
    let radical = (x * (1.0 - x)).max(0.0).sqrt();
    let poly = 15.0 + 10.0 * x + 8.0 * x * x - 48.0 * x * x * x;
    15.0 * (PI - u.acos()) - 2.0 * radical * poly
}

/// Asymptotic (large-n) cumulative distribution of the normalized
/// eigenvalues: for `j1 <= j0` the semicircle over `[0, r]` reaching 1 at
/// `r`; for `j1 > j0` the semicircle over the whole unit interval.
///
/// Total in `x` (clamped to 0 below 0 and to 1 above 1); requires positive
/// couplings.
pub fn cdf_asymptotic(x: f64, j0: f64, j1: f64) -> Result<f64> {
    let ratio = validated_ratio(j0, j1)?;
    Ok(cdf_asymptotic_from_ratio(x, ratio))
}

fn cdf_asymptotic_from_ratio(x: f64, ratio: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let r = r_from_ratio(ratio);
    if ratio <= 1.0 {
        if x > r {
            1.0
        } else {
            4.0 / (PI * r * r) * semicircle_component_unchecked(x, r)
        }
    } else {
        4.0 / PI * semicircle_component_unchecked(x, 1.0)
    }
}

/// Asymptotic normalized coupling error `E[Delta_alpha] / (n j1^2)` in the
/// large-n limit: `g(alpha/r) / (3 pi)` capped by the plateau at 5 for
/// `alpha > r` when `j1 <= j0`, and `g(alpha) / (3 pi)` otherwise.
pub fn coupling_error_asymptotic(alpha: f64, j0: f64, j1: f64) -> Result<f64> {
    let ratio = validated_ratio(j0, j1)?;
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!(
            "alpha must lie in [0, 1], got {alpha}"
        )));
    }
    let r = r_from_ratio(ratio);
    let value = if ratio <= 1.0 {
        if alpha > r {
            5.0
        } else {
            g_unchecked(alpha / r) / (3.0 * PI)
        }
    } else {
        g_unchecked(alpha) / (3.0 * PI)
    };
    Ok(value)
}

fn validated_ratio(j0: f64, j1: f64) -> Result<f64> {
    if !is_positive_finite(j0) || !is_positive_finite(j1) {
        return Err(Error::ParameterDomain(format!(
            "couplings must be positive finite reals, got j0={j0}, j1={j1}"
        )));
    }
    Ok(j1 / j0)
}

/// Deterministic model attached to one parameter set: the regime and `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryModel {
    params: CouplingParams,
    regime: Regime,
    r: f64,
}

impl TheoryModel {
    pub fn new(params: CouplingParams) -> Self {
        let regime = Regime::from_couplings(params.j0(), params.j1());
        let r = r_from_ratio(params.ratio());
        Self { params, regime, r }
    }

    pub fn params(&self) -> &CouplingParams {
        &self.params
    }

    pub fn regime(&self) -> Regime {
        self.regime
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// Finite-size cumulative distribution `P(lambda_hat < x)`.
    ///
    /// Clamped to 0 for `x < 0` and to 1 for `x >= 1`. The value at `x = 0`
    /// is `1/n`: min-max normalization pins the smallest eigenvalue at zero,
    /// so the distribution starts with that discrete mass.
    ///
    /// In the bulk-separated regime the remaining `1/n` of mass belonging to
    /// the largest eigenvalue is spread linearly over `(r, 1]`; both branches
    /// meet at `(n-1)/n` at `x = r`. When `r == 1` (equal couplings) the
    /// linear branch is empty and only the semicircle branch is evaluated.
    pub fn cdf_finite(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let n = self.params.n() as f64;
        let r = self.r;
        match self.regime {
            Regime::BulkSeparated => {
                if x > r {
                    1.0 + (x - 1.0) / ((1.0 - r) * n)
                } else {
                    1.0 / n
                        + 4.0 * (n - 2.0) / (PI * n * r * r) * semicircle_component_unchecked(x, r)
                }
            }
            Regime::BulkDominated => {
                1.0 / n + 4.0 * (n - 1.0) / (PI * n) * semicircle_component_unchecked(x, 1.0)
            }
        }
    }

    /// Large-n limit of [`TheoryModel::cdf_finite`].
    pub fn cdf_asymptotic(&self, x: f64) -> f64 {
        cdf_asymptotic_from_ratio(x, self.params.ratio())
    }

    /// Finite-size normalized coupling error `E[Delta_alpha] / (n j1^2)` of
    /// truncating every eigenvalue with `lambda_hat < alpha`.
    ///
    /// Bulk-separated: `(n-2) g(alpha/r) / (3 pi n)` up to `r`, then the
    /// integrated linear mass `(15(n-2) + 16 (alpha^3 - r^3)/((1-r) r^2)) / (3n)`.
    /// Bulk-dominated: `(n-1) g(alpha) / (3 pi n)`. Continuous at `alpha = r`;
    /// the `r == 1` case never reaches the linear branch.
    pub fn coupling_error_finite(&self, alpha: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::Domain(format!(
                "alpha must lie in [0, 1], got {alpha}"
            )));
        }
        let n = self.params.n() as f64;
        let r = self.r;
        let value = match self.regime {
            Regime::BulkSeparated => {
                if alpha > r {
                    (15.0 * (n - 2.0) + 16.0 * (alpha.powi(3) - r.powi(3)) / ((1.0 - r) * r * r))
                        / (3.0 * n)
                } else {
                    (n - 2.0) / (3.0 * PI * n) * g_unchecked(alpha / r)
                }
            }
            Regime::BulkDominated => (n - 1.0) / (3.0 * PI * n) * g_unchecked(alpha),
        };
        Ok(value)
    }

    /// Large-n limit of [`TheoryModel::coupling_error_finite`].
    pub fn coupling_error_asymptotic(&self, alpha: f64) -> Result<f64> {
        coupling_error_asymptotic(alpha, self.params.j0(), self.params.j1())
    }
}
