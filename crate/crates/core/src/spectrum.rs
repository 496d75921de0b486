//! Circulant eigenvalue spectra and exact mutual information.
//!
//! A circulant matrix is diagonalized by the DFT, so `|lambda_i|^2` is the
//! squared modulus of the unnormalized forward DFT of the generating row and
//! the log-det mutual information collapses to a sum over frequencies.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{gamma, spectral_weights, LogBase, NoiseModel, ScenePrior};
use crate::numeric;
use crate::patterns::AperturePattern;

/// Squared eigenvalue magnitudes of a circulant aperture.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// `|lambda_i|^2`, DC first.
    pub lambda_sq: Vec<f64>,
    /// `lambda_1 = sum(a)`.
    pub lambda1: f64,
}

impl SpectrumResult {
    pub fn len(&self) -> usize {
        self.lambda_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_sq.is_empty()
    }

    /// `sum_{i >= 2} |lambda_i|^2`.
    pub fn bulk_energy(&self) -> f64 {
        numeric::sum(self.lambda_sq[1..].iter().copied())
    }
}

/// Reusable forward-DFT plan for rows of a fixed length.
#[derive(Clone)]
pub struct SpectrumPlan {
    fft: Arc<dyn Fft<f64>>,
    n: usize,
}

impl std::fmt::Debug for SpectrumPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectrumPlan").field("n", &self.n).finish()
    }
}

impl SpectrumPlan {
    pub fn new(n: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(n);
        SpectrumPlan { fft, n }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Spectrum of an arbitrary real row of length `n` (entries need not lie in `[0, 1]`).
    pub fn spectrum(&self, row: &[f64]) -> SpectrumResult {
        assert_eq!(row.len(), self.n, "row length does not match plan");
        let mut buf: Vec<Complex64> = row.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        SpectrumResult {
            lambda_sq: buf.iter().map(|z| z.norm_sqr()).collect(),
            lambda1: numeric::sum(row.iter().copied()),
        }
    }
}

/// Spectrum of an arbitrary real row, planning a transform for its length.
pub fn spectrum_of_row(row: &[f64]) -> SpectrumResult {
    SpectrumPlan::new(row.len()).spectrum(row)
}

pub fn circulant_spectrum(pattern: &AperturePattern) -> SpectrumResult {
    spectrum_of_row(pattern.values())
}

/// Mutual information, total and per pixel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MIResult {
    pub total: f64,
    pub per_pixel: f64,
    pub log_base: LogBase,
}

impl MIResult {
    fn from_nats(total_nats: f64, n: usize, log_base: LogBase) -> Self {
        let total = log_base.from_nats(total_nats);
        MIResult {
            total,
            per_pixel: total / n as f64,
            log_base,
        }
    }
}

/// `sum_i ln(gamma d_i |lambda_i|^2 / n + 1)` in nats. `weights` must match the spectrum length.
pub fn mi_from_spectrum(lambda_sq: &[f64], weights: &[f64], gamma: f64) -> f64 {
    debug_assert_eq!(lambda_sq.len(), weights.len());
    let n = lambda_sq.len() as f64;
    numeric::sum(
        lambda_sq
            .iter()
            .zip(weights)
            .map(|(&l, &d)| (gamma * d * l / n).ln_1p()),
    )
}

/// Exact mutual information of a circulant aperture with `rho` taken as the
/// pattern's realized mean transmissivity.
pub fn mutual_information(
    pattern: &AperturePattern,
    prior: ScenePrior,
    noise: &NoiseModel,
    log_base: LogBase,
) -> Result<MIResult> {
    mutual_information_with_rho(pattern, prior, noise, pattern.transmissivity(), log_base)
}

/// As [`mutual_information`] but with an explicit transmissivity for the shot-noise term.
pub fn mutual_information_with_rho(
    pattern: &AperturePattern,
    prior: ScenePrior,
    noise: &NoiseModel,
    rho: f64,
    log_base: LogBase,
) -> Result<MIResult> {
    let n = pattern.len();
    let g = gamma(noise, rho)?;
    let spec = circulant_spectrum(pattern);
    let nats = if n == 1 {
        // A single bin has only the DC term, weight 1.
        (g * spec.lambda_sq[0]).ln_1p()
    } else {
        let d = spectral_weights(prior, n)?;
        mi_from_spectrum(&spec.lambda_sq, d.as_slice(), g)
    };
    Ok(MIResult::from_nats(nats, n, log_base))
}

/// Jensen upper bound on the per-pixel IID mutual information excluding DC,
/// together with the quantity it bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JensenBound {
    /// `(n-1)/n ln(gamma sum_{i>=2}|lambda_i|^2 / ((n-1) n) + 1)`, nats.
    pub bound: f64,
    /// `(1/n) sum_{i>=2} ln(gamma |lambda_i|^2 / n + 1)`, nats.
    pub mi_without_dc: f64,
    /// `sum_{i>=2} |lambda_i|^2`.
    pub bulk_energy: f64,
}

pub fn jensen_bound(pattern: &AperturePattern, noise: &NoiseModel) -> Result<JensenBound> {
    let n = pattern.len();
    if n < 2 {
        return Err(crate::error::Error::invalid("Jensen bound needs n >= 2"));
    }
    let g = gamma(noise, pattern.transmissivity())?;
    let spec = circulant_spectrum(pattern);
    let nf = n as f64;
    let bulk_energy = spec.bulk_energy();
    let bound = (nf - 1.0) / nf * (g * bulk_energy / ((nf - 1.0) * nf)).ln_1p();
    let mi_without_dc =
        numeric::sum(spec.lambda_sq[1..].iter().map(|&l| (g * l / nf).ln_1p())) / nf;
    Ok(JensenBound {
        bound,
        mi_without_dc,
        bulk_energy,
    })
}

/// Per-pixel IID mutual information with the DC term removed (nats).
pub fn mi_without_dc(pattern: &AperturePattern, noise: &NoiseModel) -> Result<f64> {
    jensen_bound(pattern, noise).map(|j| j.mi_without_dc)
}
