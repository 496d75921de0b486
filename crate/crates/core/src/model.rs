//! Scene prior, noise model, and the per-frequency weights and noise scaling
//! shared by every other module.
//!
//! Frequencies are stored 0-based in vectors: index 0 is the DC term.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Second-order statistics of the scene.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenePrior {
    /// Uncorrelated scene, covariance `I`.
    Iid,
    /// Power spectrum falling as `1/f`, diagonal in the DFT basis.
    OneOverF,
}

impl ScenePrior {
    pub fn name(self) -> &'static str {
        match self {
            ScenePrior::Iid => "iid",
            ScenePrior::OneOverF => "1/f",
        }
    }
}

/// Units for reported mutual information. Computation is always in nats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LogBase {
    #[default]
    Nats,
    Bits,
}

impl LogBase {
    /// Converts a value in nats to this base.
    pub fn from_nats(self, nats: f64) -> f64 {
        match self {
            LogBase::Nats => nats,
            LogBase::Bits => nats / std::f64::consts::LN_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LogBase::Nats => "nats",
            LogBase::Bits => "bits",
        }
    }
}

/// Per-frequency prior weights `d_i` (diagonal of `D` in the DFT basis).
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralWeights(Vec<f64>);

impl SpectralWeights {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

impl std::ops::Index<usize> for SpectralWeights {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Builds the weight vector for `prior` at size `n`.
///
/// For the 1/f prior with even `n`, frequency `i` and `n/2 + i` (1-based) share
/// weight `1/i`. For odd `n` the DC term gets weight 1 and each conjugate pair
/// `(k, n + 2 - k)`, `k = 2..=(n+1)/2`, shares `1/k`.
pub fn spectral_weights(prior: ScenePrior, n: usize) -> Result<SpectralWeights> {
    if n < 2 {
        return Err(Error::invalid(format!("spectral weights need n >= 2, got {n}")));
    }
    let d = match prior {
        ScenePrior::Iid => vec![1.0; n],
        ScenePrior::OneOverF if n.is_multiple_of(2) => {
            let half = n / 2;
            (0..n).map(|j| 1.0 / ((j % half) + 1) as f64).collect()
        }
        ScenePrior::OneOverF => {
            let mut d = vec![1.0; n];
            for k in 2..=n.div_ceil(2) {
                let w = 1.0 / k as f64;
                d[k - 1] = w;
                d[n + 1 - k] = w;
            }
            d
        }
    };
    Ok(SpectralWeights(d))
}

/// Thermal and shot-noise powers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Net thermal noise power `W`.
    pub thermal: f64,
    /// Net scene radiated power `J`; shot noise scales as `rho * J`.
    pub scene: f64,
}

impl NoiseModel {
    pub fn new(thermal: f64, scene: f64) -> Result<Self> {
        if !(thermal.is_finite() && scene.is_finite()) || thermal < 0.0 || scene < 0.0 {
            return Err(Error::invalid(format!(
                "noise powers must be finite and nonnegative (W = {thermal}, J = {scene})"
            )));
        }
        if thermal + scene <= 0.0 {
            return Err(Error::invalid("W + J must be positive"));
        }
        Ok(NoiseModel { thermal, scene })
    }

    /// Same as [`NoiseModel::new`] with `W` given in power dB.
    pub fn from_thermal_db(thermal_db: f64, scene: f64) -> Result<Self> {
        Self::new(db_to_linear(thermal_db), scene)
    }

    /// Mean scene power per bin, `J / n`. Not used by any MI computation.
    pub fn scene_mean(&self, n: usize) -> f64 {
        self.scene / n as f64
    }

    /// `1 / (W + rho J)`.
    pub fn gamma(&self, rho: f64) -> Result<f64> {
        gamma(self, rho)
    }
}

/// Inverse effective noise power `1 / (W + rho J)`.
pub fn gamma(noise: &NoiseModel, rho: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid(format!("transmissivity must lie in [0, 1], got {rho}")));
    }
    let denom = noise.thermal + rho * noise.scene;
    if denom <= 0.0 {
        return Err(Error::DegenerateNoise {
            thermal: noise.thermal,
            scene: noise.scene,
            rho,
        });
    }
    Ok(1.0 / denom)
}

/// Power dB to linear: `10^(x/10)`.
pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}
