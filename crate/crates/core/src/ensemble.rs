//! Seeded Monte Carlo ensembles of random circulant apertures.
//!
//! Trial `t` draws its aperture from a ChaCha8 stream seeded with
//! [`derive_trial_seed`]`(master_seed, t)`, so results do not depend on how
//! trials are scheduled across threads. Per-trial values are gathered in trial
//! order and reduced with compensated summation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    predict_bernoulli_iid, predict_bernoulli_onef, predict_gaussian_onef, predict_uniform_iid,
    PredictionKind, PredictionResult,
};
use crate::error::{Error, Result};
use crate::model::{gamma, spectral_weights, LogBase, NoiseModel, ScenePrior};
use crate::numeric;
use crate::patterns::{gen_bernoulli, gen_uniform};
use crate::spectrum::SpectrumPlan;

/// Identifier of the per-trial seed construction, recorded in run manifests.
pub const SEED_DERIVATION: &str = "splitmix64(master_seed + (t + 1) * 0x9E3779B97F4A7C15) -> ChaCha8Rng::seed_from_u64";

/// Seed for trial `t`: the `(t+1)`-th output of a SplitMix64 stream started at `master`.
pub fn derive_trial_seed(master: u64, trial: u64) -> u64 {
    let mut z = master.wrapping_add((trial.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum EnsembleFamily {
    BernoulliOnOff { p: f64 },
    UniformGray,
    /// IID standard-normal entries (not a physical mask).
    GaussianEntries,
}

impl EnsembleFamily {
    pub fn name(&self) -> &'static str {
        match self {
            EnsembleFamily::BernoulliOnOff { .. } => "bernoulli",
            EnsembleFamily::UniformGray => "uniform",
            EnsembleFamily::GaussianEntries => "gaussian",
        }
    }
}

/// Which transmissivity enters `gamma = 1/(W + rho J)` for each trial.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "mode", content = "rho", rename_all = "snake_case")]
pub enum RhoMode {
    /// Mean of the drawn pattern.
    #[default]
    Realized,
    /// The family's nominal value: `p` for on-off, 1/2 for uniform.
    Nominal,
    Fixed(f64),
}

/// Which frequencies the per-trial MI sums over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiScope {
    #[default]
    Full,
    /// Drop the DC term `lambda_1`.
    ExcludeDc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n: usize,
    pub trials: usize,
    pub family: EnsembleFamily,
    pub prior: ScenePrior,
    pub noise: NoiseModel,
    pub master_seed: u64,
    pub log_base: LogBase,
    #[serde(default)]
    pub rho_mode: RhoMode,
    #[serde(default)]
    pub scope: MiScope,
}

impl EnsembleConfig {
    pub fn new(
        n: usize,
        trials: usize,
        family: EnsembleFamily,
        prior: ScenePrior,
        noise: NoiseModel,
        master_seed: u64,
    ) -> Self {
        EnsembleConfig {
            n,
            trials,
            family,
            prior,
            noise,
            master_seed,
            log_base: LogBase::Nats,
            rho_mode: RhoMode::Realized,
            scope: MiScope::Full,
        }
    }

    /// IID ensembles report per-pixel MI, 1/f ensembles report total MI.
    pub fn kind(&self) -> PredictionKind {
        match self.prior {
            ScenePrior::Iid => PredictionKind::PerPixel,
            ScenePrior::OneOverF => PredictionKind::Total,
        }
    }

    /// Pattern length actually simulated: 1/f ensembles use odd `n`.
    pub fn effective_n(&self) -> usize {
        if self.prior == ScenePrior::OneOverF && self.n.is_multiple_of(2) {
            self.n - 1
        } else {
            self.n
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 2 {
            return Err(Error::invalid(format!("need at least 2 trials, got {}", self.trials)));
        }
        if self.effective_n() < 2 {
            return Err(Error::invalid(format!("ensemble needs n >= 2, got {}", self.n)));
        }
        match self.family {
            EnsembleFamily::BernoulliOnOff { p } if !(p > 0.0 && p < 1.0) => {
                return Err(Error::invalid(format!("Bernoulli p must lie in (0, 1), got {p}")))
            }
            EnsembleFamily::GaussianEntries if !matches!(self.rho_mode, RhoMode::Fixed(_)) => {
                return Err(Error::invalid(
                    "Gaussian-entry ensembles need a fixed rho (entries are not transmissivities)",
                ))
            }
            _ => {}
        }
        if let RhoMode::Fixed(r) = self.rho_mode {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::invalid(format!("fixed rho must lie in [0, 1], got {r}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    pub mean: f64,
    /// Sample standard deviation over trials.
    pub std: f64,
    pub stderr: f64,
    pub trials: usize,
    pub realized_rho_mean: f64,
    pub kind: PredictionKind,
    pub log_base: LogBase,
    /// Pattern length simulated (after any parity reduction).
    pub n: usize,
}

#[derive(Debug, Clone, Copy)]
struct Trial {
    mi: f64,
    rho: f64,
}

/// Per-trial values in trial order, before aggregation.
pub fn run_trials(config: &EnsembleConfig) -> Result<Vec<(f64, f64)>> {
    config.validate()?;
    let n = config.effective_n();
    if n != config.n {
        log::warn!("n reduced to {n} (odd-n formula for the 1/f prior)");
    }
    let plan = SpectrumPlan::new(n);
    let weights = spectral_weights(config.prior, n)?;
    let results: Vec<Result<Trial>> = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            run_one(config, n, &plan, weights.as_slice(), t).map_err(|e| Error::Trial {
                index: t,
                source: Box::new(e),
            })
        })
        .collect();
    results
        .into_iter()
        .map(|r| r.map(|t| (t.mi, t.rho)))
        .collect()
}

fn run_one(
    config: &EnsembleConfig,
    n: usize,
    plan: &SpectrumPlan,
    weights: &[f64],
    t: usize,
) -> Result<Trial> {
    let seed = derive_trial_seed(config.master_seed, t as u64);
    let row: Vec<f64> = match config.family {
        EnsembleFamily::BernoulliOnOff { p } => gen_bernoulli(n, p, seed)?.values().to_vec(),
        EnsembleFamily::UniformGray => gen_uniform(n, seed)?.values().to_vec(),
        EnsembleFamily::GaussianEntries => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
        }
    };
    let realized = numeric::sum(row.iter().copied()) / n as f64;
    let rho = match (config.rho_mode, config.family) {
        (RhoMode::Fixed(r), _) => r,
        (RhoMode::Realized, _) => realized,
        (RhoMode::Nominal, EnsembleFamily::BernoulliOnOff { p }) => p,
        (RhoMode::Nominal, EnsembleFamily::UniformGray) => 0.5,
        (RhoMode::Nominal, EnsembleFamily::GaussianEntries) => unreachable!("rejected by validate"),
    };
    let g = gamma(&config.noise, rho)?;
    let spec = plan.spectrum(&row);
    let skip = match config.scope {
        MiScope::Full => 0,
        MiScope::ExcludeDc => 1,
    };
    let nf = n as f64;
    let nats = numeric::sum(
        spec.lambda_sq
            .iter()
            .zip(weights)
            .skip(skip)
            .map(|(&l, &d)| (g * d * l / nf).ln_1p()),
    );
    let value = match config.kind() {
        PredictionKind::PerPixel => nats / nf,
        PredictionKind::Total => nats,
    };
    if !value.is_finite() || value < 0.0 {
        return Err(Error::Numerical(format!("non-finite or negative MI {value}")));
    }
    Ok(Trial {
        mi: config.log_base.from_nats(value),
        rho: realized,
    })
}

/// Mean and sample standard deviation, both with compensated sums.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    let mean = numeric::sum(values.iter().copied()) / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = numeric::sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (m - 1.0)).sqrt())
}

pub fn run_ensemble(config: &EnsembleConfig) -> Result<EnsembleStats> {
    let trials = run_trials(config)?;
    let mis: Vec<f64> = trials.iter().map(|t| t.0).collect();
    let (mean, std) = mean_std(&mis);
    let rho_mean = numeric::sum(trials.iter().map(|t| t.1)) / trials.len() as f64;
    Ok(EnsembleStats {
        mean,
        std,
        stderr: std / (config.trials as f64).sqrt(),
        trials: config.trials,
        realized_rho_mean: rho_mean,
        kind: config.kind(),
        log_base: config.log_base,
        n: config.effective_n(),
    })
}

/// Analytic prediction matching an ensemble configuration, in nats.
///
/// On-off masks use the random on-off predictor for the configured prior,
/// uniform masks the IID uniform predictor with the printed bulk variance,
/// Gaussian entries the 1/f Gaussian expectation with the fixed `rho`.
pub fn matching_prediction(config: &EnsembleConfig) -> Result<PredictionResult> {
    let n = config.effective_n();
    let (w, j) = (config.noise.thermal, config.noise.scene);
    match (config.family, config.prior) {
        (EnsembleFamily::BernoulliOnOff { p }, ScenePrior::Iid) => predict_bernoulli_iid(p, w, j),
        (EnsembleFamily::BernoulliOnOff { p }, ScenePrior::OneOverF) => {
            predict_bernoulli_onef(n, p, w, j)
        }
        (EnsembleFamily::UniformGray, ScenePrior::Iid) => {
            predict_uniform_iid(w, j, crate::asymptotics::UNIFORM_BULK_VARIANCE_PRINTED)
        }
        (EnsembleFamily::GaussianEntries, ScenePrior::OneOverF) => {
            let rho = match config.rho_mode {
                RhoMode::Fixed(r) => r,
                _ => return Err(Error::invalid("Gaussian-entry ensembles need a fixed rho")),
            };
            predict_gaussian_onef(n, w, rho * j)
        }
        (family, prior) => Err(Error::invalid(format!(
            "no prediction for {} masks under the {} prior",
            family.name(),
            prior.name()
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRecord {
    pub relative_gap: f64,
    pub z_score: f64,
}

/// Relative gap and z-score of an ensemble mean against a prediction (given in nats).
pub fn compare(stats: &EnsembleStats, prediction: &PredictionResult) -> Result<ComparisonRecord> {
    if stats.kind != prediction.kind {
        return Err(Error::invalid(format!(
            "cannot compare {:?} statistics with a {:?} prediction",
            stats.kind, prediction.kind
        )));
    }
    let value = stats.log_base.from_nats(prediction.value);
    let diff = stats.mean - value;
    let z_score = if diff == 0.0 {
        0.0
    } else {
        diff / stats.stderr
    };
    Ok(ComparisonRecord {
        relative_gap: diff.abs() / value.max(f64::MIN_POSITIVE),
        z_score,
    })
}

/// One row of a transmissivity sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub stats: EnsembleStats,
    /// Prediction in the stats' log base.
    pub predicted: f64,
    pub relative_gap: f64,
    pub z_score: f64,
}

/// Runs `base` once per `p` (the family is forced to on-off with that `p`).
pub fn sweep_p(base: &EnsembleConfig, p_grid: &[f64]) -> Result<Vec<SweepRow>> {
    p_grid
        .iter()
        .map(|&p| {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::invalid(format!("sweep p must lie in (0, 1), got {p}")));
            }
            let config = EnsembleConfig {
                family: EnsembleFamily::BernoulliOnOff { p },
                ..*base
            };
            let stats = run_ensemble(&config)?;
            let prediction = matching_prediction(&config)?;
            let cmp = compare(&stats, &prediction)?;
            Ok(SweepRow {
                p,
                stats,
                predicted: stats.log_base.from_nats(prediction.value),
                relative_gap: cmp.relative_gap,
                z_score: cmp.z_score,
            })
        })
        .collect()
}

/// `start, start + step, ...` up to `stop` inclusive (within rounding).
pub fn p_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..count)
        .map(|i| ((start + step * i as f64) * 1e12).round() / 1e12)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(family: EnsembleFamily, prior: ScenePrior) -> EnsembleConfig {
        EnsembleConfig::new(
            63,
            40,
            family,
            prior,
            NoiseModel::new(0.01, 1.0).unwrap(),
            42,
        )
    }

    #[test]
    fn seeds_are_distinct_and_stable() {
        let a: Vec<u64> = (0..1000).map(|t| derive_trial_seed(7, t)).collect();
        let mut b = a.clone();
        b.sort_unstable();
        b.dedup();
        assert_eq!(b.len(), 1000);
        assert_eq!(derive_trial_seed(7, 3), a[3]);
        assert_ne!(derive_trial_seed(8, 3), a[3]);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = small(EnsembleFamily::BernoulliOnOff { p: 0.3 }, ScenePrior::OneOverF);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_ensemble(&cfg)).unwrap();
        let b = four.install(|| run_ensemble(&cfg)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        assert_eq!(run_ensemble(&cfg).unwrap(), a);
    }

    #[test]
    fn stats_shape() {
        let cfg = small(EnsembleFamily::UniformGray, ScenePrior::Iid);
        let s = run_ensemble(&cfg).unwrap();
        assert_eq!(s.trials, 40);
        assert!(s.std >= 0.0);
        assert!((s.stderr - s.std / 40f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.kind, PredictionKind::PerPixel);
        assert!((s.realized_rho_mean - 0.5).abs() < 0.05);
    }

    #[test]
    fn even_n_reduced_for_one_over_f() {
        let mut cfg = small(EnsembleFamily::BernoulliOnOff { p: 0.3 }, ScenePrior::OneOverF);
        cfg.n = 250;
        assert_eq!(run_ensemble(&cfg).unwrap().n, 249);
        cfg.prior = ScenePrior::Iid;
        assert_eq!(run_ensemble(&cfg).unwrap().n, 250);
    }

    #[test]
    fn validation() {
        let mut cfg = small(EnsembleFamily::BernoulliOnOff { p: 1.5 }, ScenePrior::Iid);
        assert!(run_ensemble(&cfg).is_err());
        cfg.family = EnsembleFamily::GaussianEntries;
        assert!(run_ensemble(&cfg).is_err());
        cfg.rho_mode = RhoMode::Fixed(0.5);
        cfg.prior = ScenePrior::OneOverF;
        assert!(run_ensemble(&cfg).is_ok());
        cfg.trials = 1;
        assert!(run_ensemble(&cfg).is_err());
    }

    #[test]
    fn trial_errors_carry_index() {
        // W = 0 with a very sparse mask: some trial draws no open element.
        let cfg = EnsembleConfig::new(
            4,
            200,
            EnsembleFamily::BernoulliOnOff { p: 0.05 },
            ScenePrior::Iid,
            NoiseModel::new(0.0, 1.0).unwrap(),
            1,
        );
        match run_ensemble(&cfg) {
            Err(Error::Trial { source, .. }) => {
                assert!(matches!(*source, Error::DegenerateNoise { .. }))
            }
            other => panic!("expected trial error, got {other:?}"),
        }
    }

    #[test]
    fn compare_examples() {
        let pred = PredictionResult {
            value: 2.0,
            kind: PredictionKind::Total,
            method: crate::asymptotics::PredictionMethod::ClosedForm,
            est_abs_error: 0.0,
        };
        let mut stats = EnsembleStats {
            mean: 2.0,
            std: 1.0,
            stderr: 0.1,
            trials: 100,
            realized_rho_mean: 0.5,
            kind: PredictionKind::Total,
            log_base: LogBase::Nats,
            n: 11,
        };
        let c = compare(&stats, &pred).unwrap();
        assert_eq!((c.relative_gap, c.z_score), (0.0, 0.0));
        stats.mean = 2.2;
        let c = compare(&stats, &pred).unwrap();
        assert!((c.z_score - 2.0).abs() < 1e-12);
        assert!((c.relative_gap - 0.1).abs() < 1e-12);
        stats.kind = PredictionKind::PerPixel;
        assert!(compare(&stats, &pred).is_err());
    }

    #[test]
    fn bits_scale_stats() {
        let mut cfg = small(EnsembleFamily::BernoulliOnOff { p: 0.4 }, ScenePrior::Iid);
        let nats = run_ensemble(&cfg).unwrap();
        cfg.log_base = LogBase::Bits;
        let bits = run_ensemble(&cfg).unwrap();
        assert!((bits.mean - nats.mean / std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn empty_sweep() {
        let cfg = small(EnsembleFamily::BernoulliOnOff { p: 0.5 }, ScenePrior::Iid);
        assert!(sweep_p(&cfg, &[]).unwrap().is_empty());
        assert!(sweep_p(&cfg, &[1.0]).is_err());
    }

    #[test]
    fn grid_endpoints() {
        let g = p_grid(0.05, 0.95, 0.05);
        assert_eq!(g.len(), 19);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[18], 0.95);
    }

    #[test]
    fn realized_rho_concentrates() {
        let p = 0.3;
        let cfg = EnsembleConfig::new(
            250,
            400,
            EnsembleFamily::BernoulliOnOff { p },
            ScenePrior::Iid,
            NoiseModel::new(0.01, 1.0).unwrap(),
            9,
        );
        let s = run_ensemble(&cfg).unwrap();
        let bound = 4.0 * (p * (1.0 - p) / (250.0 * 400.0)).sqrt();
        assert!((s.realized_rho_mean - p).abs() <= bound);
    }
}
