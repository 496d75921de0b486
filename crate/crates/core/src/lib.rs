//! Mutual information of one-dimensional coded-aperture cameras.
//!
//! A scene of `n` bins with a Gaussian prior (IID or 1/f) is imaged through a
//! circulant mask onto `n` pixels with thermal noise of power `W` and shot
//! noise proportional to the transmitted scene power `rho J`. Because the
//! transfer matrix is circulant, the log-det mutual information reduces to a
//! sum over the DFT of the mask's generating row:
//!
//! ```text
//! I = sum_i ln( d_i |lambda_i|^2 / (n (W + rho J)) + 1 )
//! ```
//!
//! The crate provides:
//!
//! - [`patterns`]: pinhole, MLS, MURA, random on-off, and random gray masks.
//! - [`spectrum`]: the circulant spectrum and the exact MI above.
//! - [`asymptotics`]: large-n and finite-n predictions, including the optimal
//!   on-off transmissivity.
//! - [`ensemble`]: seeded, thread-count-independent Monte Carlo ensembles
//!   paired with those predictions.
//!
//! ```
//! use aperture_mi::{gen_mls, mutual_information, LogBase, NoiseModel, ScenePrior};
//!
//! let mask = gen_mls(8, None).unwrap();
//! let noise = NoiseModel::new(0.01, 1.0).unwrap();
//! let mi = mutual_information(&mask, ScenePrior::Iid, &noise, LogBase::Nats).unwrap();
//! assert!(mi.per_pixel > 0.39 && mi.per_pixel < 0.42);
//! ```

pub mod asymptotics;
pub mod ensemble;
pub mod error;
pub mod model;
pub mod numeric;
pub mod optimize;
pub mod patterns;
pub mod quadrature;
pub mod spectrum;

pub use asymptotics::{
    explog_exp1, optimal_p_iid, optimal_p_onef, predict_bernoulli_iid, predict_bernoulli_onef,
    predict_flat_iid, predict_flat_onef, predict_gaussian_onef, predict_pinhole,
    predict_uniform_iid, FlatOneOverFForm, PredictionKind, PredictionMethod, PredictionResult,
};
pub use ensemble::{
    compare, run_ensemble, sweep_p, ComparisonRecord, EnsembleConfig, EnsembleFamily,
    EnsembleStats, MiScope, RhoMode, SweepRow,
};
pub use error::{Error, Result};
pub use model::{db_to_linear, gamma, spectral_weights, LogBase, NoiseModel, ScenePrior, SpectralWeights};
pub use patterns::{
    gen_bernoulli, gen_mls, gen_mura, gen_pinhole, gen_uniform, transmissivity, AperturePattern,
    Family, FlatnessReport, PatternDescriptor,
};
pub use spectrum::{
    circulant_spectrum, jensen_bound, mi_without_dc, mutual_information, JensenBound, MIResult,
    SpectrumPlan, SpectrumResult,
};
