//! Closed-form and asymptotic predictions of the mutual information.
//!
//! Per-pixel IID results are n -> infinity limits. The 1/f results are total
//! mutual information at finite odd `n`: the DC term is handled separately and
//! the remaining frequencies are summed in conjugate pairs `k = 2..=(n-1)/2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::optimize::golden_section_max;
use crate::quadrature::{gaussian_log_expectation, EXPLOG_ABS_TOL};

pub use crate::quadrature::explog_exp1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionKind {
    PerPixel,
    Total,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionMethod {
    ClosedForm,
    Quadrature,
}

/// A predicted mutual information in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionResult {
    pub value: f64,
    pub kind: PredictionKind,
    pub method: PredictionMethod,
    /// Accumulated absolute error bound of the expectations involved; zero for closed forms.
    pub est_abs_error: f64,
}

impl PredictionResult {
    fn closed(value: f64, kind: PredictionKind) -> Self {
        PredictionResult {
            value,
            kind,
            method: PredictionMethod::ClosedForm,
            est_abs_error: 0.0,
        }
    }

    fn quadrature(value: f64, kind: PredictionKind, est_abs_error: f64) -> Self {
        PredictionResult {
            value,
            kind,
            method: PredictionMethod::Quadrature,
            est_abs_error,
        }
    }
}

fn check_noise(w: f64, j: f64) -> Result<()> {
    if !(w.is_finite() && j.is_finite()) || w < 0.0 || j < 0.0 {
        return Err(Error::invalid(format!(
            "noise powers must be finite and nonnegative (W = {w}, J = {j})"
        )));
    }
    Ok(())
}

fn effective_noise(w: f64, j: f64, rho: f64) -> Result<f64> {
    check_noise(w, j)?;
    let denom = w + rho * j;
    if denom <= 0.0 {
        return Err(Error::DegenerateNoise {
            thermal: w,
            scene: j,
            rho,
        });
    }
    Ok(denom)
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(())
}

fn check_odd(n: usize, min: usize) -> Result<()> {
    if n.is_multiple_of(2) || n < min {
        return Err(Error::invalid(format!(
            "the 1/f formulas need odd n >= {min}, got {n}"
        )));
    }
    Ok(())
}

/// Pinhole per-pixel MI, `ln(1/(nW + J) + 1)`.
pub fn predict_pinhole(n: usize, w: f64, j: f64) -> Result<PredictionResult> {
    if n == 0 {
        return Err(Error::invalid("pinhole needs n >= 1"));
    }
    check_noise(w, j)?;
    let denom = n as f64 * w + j;
    if denom <= 0.0 {
        return Err(Error::DegenerateNoise {
            thermal: w,
            scene: j,
            rho: 1.0 / n as f64,
        });
    }
    Ok(PredictionResult::closed(
        (1.0 / denom).ln_1p(),
        PredictionKind::PerPixel,
    ))
}

/// Large-n per-pixel MI of a spectrally-flat pattern, `ln((1/4)/(W + J/2) + 1)`.
pub fn predict_flat_iid(w: f64, j: f64) -> Result<PredictionResult> {
    let denom = effective_noise(w, j, 0.5)?;
    Ok(PredictionResult::closed(
        (0.25 / denom).ln_1p(),
        PredictionKind::PerPixel,
    ))
}

/// Effective SNR `p(1-p)/(W + pJ)` of a random on-off mask.
pub fn bernoulli_snr(p: f64, w: f64, j: f64) -> Result<f64> {
    check_p(p)?;
    Ok(p * (1.0 - p) / effective_noise(w, j, p)?)
}

/// Large-n per-pixel MI of a random `Bern(p)` mask: `E_X[ln(c X^2 + 1)]`,
/// `c = p(1-p)/(W + pJ)`.
pub fn predict_bernoulli_iid(p: f64, w: f64, j: f64) -> Result<PredictionResult> {
    let c = bernoulli_snr(p, w, j)?;
    Ok(PredictionResult::quadrature(
        explog_exp1(c)?,
        PredictionKind::PerPixel,
        EXPLOG_ABS_TOL,
    ))
}

/// Transmissivity maximizing [`predict_bernoulli_iid`]:
/// `p* = (W/J)(sqrt(1 + J/W) - 1)`, the root in (0, 1/2] of `J p^2 + 2 W p - W = 0`.
pub fn optimal_p_iid(w: f64, j: f64) -> Result<f64> {
    check_noise(w, j)?;
    if w <= 0.0 || j <= 0.0 {
        return Err(Error::invalid(format!(
            "optimal p needs W > 0 and J > 0 (W = {w}, J = {j}); as J -> 0, p* -> 1/2"
        )));
    }
    let r = j / w;
    // (1/r)(sqrt(1 + r) - 1) rewritten without cancellation for small r
    Ok(1.0 / ((1.0 + r).sqrt() + 1.0))
}

/// Variance constant of the bulk spectrum for uniform gray masks as printed.
pub const UNIFORM_BULK_VARIANCE_PRINTED: f64 = 1.0 / 24.0;
/// Variance of a `Uniform[0, 1]` entry.
pub const UNIFORM_ENTRY_VARIANCE: f64 = 1.0 / 12.0;

/// Large-n per-pixel MI of a random uniform gray mask,
/// `E_X[ln(v/(W + J/2) X^2 + 1)]` for bulk variance `v`.
pub fn predict_uniform_iid(w: f64, j: f64, bulk_variance: f64) -> Result<PredictionResult> {
    if !(bulk_variance.is_finite() && bulk_variance > 0.0) {
        return Err(Error::invalid(format!(
            "bulk variance must be positive, got {bulk_variance}"
        )));
    }
    let c = bulk_variance / effective_noise(w, j, 0.5)?;
    Ok(PredictionResult::quadrature(
        explog_exp1(c)?,
        PredictionKind::PerPixel,
        EXPLOG_ABS_TOL,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlatOneOverFForm {
    /// DC term plus the paired sum over `k = 2..=(n-1)/2`.
    MidSum,
    /// `ln(n c) + 2 c (ln(n/2) - 1)` with `c = (1/4)/(W + J/2)`.
    ClosedForm,
}

/// Total MI of a spectrally-flat pattern under the 1/f prior.
pub fn predict_flat_onef(
    n: usize,
    w: f64,
    j: f64,
    form: FlatOneOverFForm,
) -> Result<PredictionResult> {
    check_odd(n, 5)?;
    let c = 0.25 / effective_noise(w, j, 0.5)?;
    let nf = n as f64;
    let value = match form {
        FlatOneOverFForm::MidSum => {
            let bulk = numeric::sum((2..=(n - 1) / 2).map(|k| (c / k as f64).ln_1p()));
            (nf * c).ln_1p() + 2.0 * bulk
        }
        FlatOneOverFForm::ClosedForm => (c * nf).ln() + 2.0 * c * ((nf / 2.0).ln() - 1.0),
    };
    Ok(PredictionResult::closed(value, PredictionKind::Total))
}

/// How the DC term of the Gaussian-entry expectation is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GaussianDcForm {
    /// `E ln(gamma G^2 + 1)`: `lambda_1 ~ N(0, n)` so `|lambda_1|^2 / n ~ G^2`.
    #[default]
    Consistent,
    /// `E ln(gamma n G^2 + 1)`, the variant that omits the `1/n` of the MI sum.
    ExtraFactorN,
}

/// Expected total MI under the 1/f prior for a circulant whose generating row
/// has IID standard Gaussian entries, with `gamma = 1/(W + rho J)` fixed.
pub fn predict_gaussian_onef(n: usize, w: f64, rho_j: f64) -> Result<PredictionResult> {
    predict_gaussian_onef_with(n, w, rho_j, GaussianDcForm::Consistent)
}

pub fn predict_gaussian_onef_with(
    n: usize,
    w: f64,
    rho_j: f64,
    dc_form: GaussianDcForm,
) -> Result<PredictionResult> {
    check_odd(n, 3)?;
    let denom = effective_noise(w, rho_j, 1.0)?;
    let g = 1.0 / denom;
    let dc_scale = match dc_form {
        GaussianDcForm::Consistent => g,
        GaussianDcForm::ExtraFactorN => g * n as f64,
    };
    let dc = gaussian_log_expectation(dc_scale, 0.0)?;
    let (bulk, bulk_err) = chi2_pair_sum(n, g)?;
    Ok(PredictionResult::quadrature(
        dc.value + bulk,
        PredictionKind::Total,
        dc.abs_error + bulk_err,
    ))
}

/// `2 sum_{k=2}^{(n-1)/2} E_{X~chi^2_2} ln(c X / (2k) + 1)` and its error bound.
fn chi2_pair_sum(n: usize, c: f64) -> Result<(f64, f64)> {
    let ks = 2..=(n - 1) / 2;
    let count = ks.clone().count() as f64;
    let terms: Result<Vec<f64>> = ks.map(|k| explog_exp1(c / k as f64)).collect();
    Ok((2.0 * numeric::sum(terms?), 2.0 * count * EXPLOG_ABS_TOL))
}

/// Expected total MI of a random `Bern(p)` mask under the 1/f prior:
/// a noncentral Gaussian DC term
/// `E_G ln((sqrt(p(1-p)) G + p sqrt(n))^2 / (W + pJ) + 1)`
/// plus the chi-squared bulk pairs with `c = p(1-p)/(W + pJ)`.
pub fn predict_bernoulli_onef(n: usize, p: f64, w: f64, j: f64) -> Result<PredictionResult> {
    check_odd(n, 3)?;
    let c = bernoulli_snr(p, w, j)?;
    let g = 1.0 / effective_noise(w, j, p)?;
    let sd = (p * (1.0 - p)).sqrt();
    // (sd G + p sqrt n)^2 g = g sd^2 (G + p sqrt(n) / sd)^2
    let dc = gaussian_log_expectation(g * sd * sd, p * (n as f64).sqrt() / sd)?;
    let (bulk, bulk_err) = chi2_pair_sum(n, c)?;
    Ok(PredictionResult::quadrature(
        dc.value + bulk,
        PredictionKind::Total,
        dc.abs_error + bulk_err,
    ))
}

pub const ONEF_P_SEARCH: (f64, f64) = (0.005, 0.995);
pub const ONEF_P_TOL: f64 = 1e-4;

/// Numerical maximizer of [`predict_bernoulli_onef`] over `p` by golden-section search.
pub fn optimal_p_onef(n: usize, w: f64, j: f64) -> Result<f64> {
    check_odd(n, 3)?;
    effective_noise(w, j, ONEF_P_SEARCH.0)?;
    let best = golden_section_max(
        |p| predict_bernoulli_onef(n, p, w, j).map(|r| r.value),
        ONEF_P_SEARCH.0,
        ONEF_P_SEARCH.1,
        ONEF_P_TOL,
    )?;
    Ok(best.x)
}
