//! `aperture-mi` command-line interface.
//!
//! Exit codes: 0 success, 2 argument error, 3 numerical failure.

mod commands;
mod config;
mod output;
mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};

/// Raised for bad user input; maps to exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(name = "aperture-mi", version, about = "Mutual information of 1D coded-aperture cameras")]
pub struct Cli {
    /// TOML file whose keys mirror long flag names; flags on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads for ensembles (default: all cores).
    #[arg(long, global = true, env = "APERTURE_MI_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate an aperture pattern file plus its JSON descriptor.
    Generate(GenerateArgs),
    /// Exact mutual information of a pattern.
    Mi(MiArgs),
    /// Closed-form or asymptotic prediction.
    Predict(PredictArgs),
    /// Optimal on-off transmissivity.
    OptimizeP(OptimizeArgs),
    /// Monte Carlo sweep over p with analytic predictions (CSV).
    Sweep(SweepArgs),
    /// Figure reproductions and the self-test suite.
    Reproduce(ReproduceArgs),
    /// Re-run the command recorded in a manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Pinhole,
    Mls,
    Mura,
    Bernoulli,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Iid,
    #[value(name = "1f", alias = "one-over-f")]
    OneOverF,
}

impl From<PriorArg> for aperture_mi::ScenePrior {
    fn from(p: PriorArg) -> Self {
        match p {
            PriorArg::Iid => aperture_mi::ScenePrior::Iid,
            PriorArg::OneOverF => aperture_mi::ScenePrior::OneOverF,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogBaseArg {
    Nats,
    Bits,
}

impl From<LogBaseArg> for aperture_mi::LogBase {
    fn from(b: LogBaseArg) -> Self {
        match b {
            LogBaseArg::Nats => aperture_mi::LogBase::Nats,
            LogBaseArg::Bits => aperture_mi::LogBase::Bits,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct NoiseArgs {
    /// Thermal noise power W (linear units).
    #[arg(long = "W", conflicts_with = "w_db")]
    pub w: Option<f64>,
    /// Thermal noise power W in power dB (10 log10).
    #[arg(long = "W-db", allow_negative_numbers = true)]
    pub w_db: Option<f64>,
    /// Scene net radiated power J.
    #[arg(long = "J", default_value_t = 1.0)]
    pub j: f64,
}

#[derive(Args, Debug, Clone)]
pub struct PatternSource {
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Pattern length (pinhole, mura, bernoulli, uniform).
    #[arg(long)]
    pub n: Option<usize>,
    /// LFSR degree for MLS (length 2^degree - 1).
    #[arg(long)]
    pub degree: Option<u32>,
    /// Initial LFSR register for MLS (selects a cyclic shift).
    #[arg(long = "seed-state")]
    pub seed_state: Option<u32>,
    /// Open probability for bernoulli.
    #[arg(long)]
    pub p: Option<f64>,
    /// RNG seed for random families.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub source: PatternSource,
    /// Output prefix; writes PREFIX.txt, PREFIX.json and PREFIX.txt.manifest.json.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct MiArgs {
    /// Pattern file (one entry per line); a sibling .json descriptor is read if present.
    #[arg(long, conflicts_with = "family")]
    pub pattern: Option<PathBuf>,
    #[command(flatten)]
    pub source: PatternSource,
    #[arg(long, value_enum, default_value = "iid")]
    pub prior: PriorArg,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Override the transmissivity used in the shot-noise term (default: pattern mean).
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long = "log-base", value_enum, default_value = "nats")]
    pub log_base: LogBaseArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Predictor {
    Pinhole,
    FlatIid,
    BernoulliIid,
    UniformIid,
    #[value(name = "flat-1f")]
    Flat1f,
    #[value(name = "gaussian-1f")]
    Gaussian1f,
    #[value(name = "bernoulli-1f")]
    Bernoulli1f,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormArg {
    Midsum,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DcFormArg {
    Consistent,
    ExtraFactorN,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(value_enum)]
    pub which: Predictor,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Bulk variance for uniform-iid (1/24 as printed, 1/12 entry variance).
    #[arg(long = "bulk-variance", default_value_t = aperture_mi::asymptotics::UNIFORM_BULK_VARIANCE_PRINTED)]
    pub bulk_variance: f64,
    /// Formula for flat-1f.
    #[arg(long, value_enum, default_value = "midsum")]
    pub form: FormArg,
    /// rho * J for gaussian-1f (default 0).
    #[arg(long = "rho-J")]
    pub rho_j: Option<f64>,
    /// DC-term scaling for gaussian-1f.
    #[arg(long = "dc-form", value_enum, default_value = "consistent")]
    pub dc_form: DcFormArg,
    #[arg(long = "log-base", value_enum, default_value = "nats")]
    pub log_base: LogBaseArg,
}

#[derive(Args, Debug)]
pub struct OptimizeArgs {
    #[arg(long, value_enum, default_value = "iid")]
    pub prior: PriorArg,
    /// Pattern length (1/f only).
    #[arg(long)]
    pub n: Option<usize>,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long = "log-base", value_enum, default_value = "nats")]
    pub log_base: LogBaseArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RhoModeArg {
    Realized,
    Nominal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScopeArg {
    Full,
    ExcludeDc,
}

#[derive(Args, Debug, Clone)]
pub struct EnsembleArgs {
    #[arg(long, value_enum, default_value = "1f")]
    pub prior: PriorArg,
    #[arg(long, default_value_t = 250)]
    pub n: usize,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Either start:stop:step or a comma-separated list.
    #[arg(long = "p-grid", default_value = "0.05:0.95:0.05")]
    pub p_grid: String,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "log-base", value_enum, default_value = "nats")]
    pub log_base: LogBaseArg,
    #[arg(long = "rho-mode", value_enum, default_value = "realized")]
    pub rho_mode: RhoModeArg,
    #[arg(long, value_enum, default_value = "full")]
    pub scope: ScopeArg,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub ensemble: EnsembleArgs,
    #[arg(long, default_value = "sweep.csv")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Reproduction {
    /// IID per-pixel curves (flat, on-off p=1/2, on-off p*) over a W sweep at fixed J.
    Fig2,
    /// 1/f on-off ensembles over a p grid against the analytic expectation.
    Fig3,
    /// Invariant checks; exits 3 on any failure.
    Selftest,
}

#[derive(Args, Debug)]
pub struct ReproduceArgs {
    #[arg(value_enum)]
    pub which: Reproduction,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "p-grid")]
    pub p_grid: Option<String>,
    #[arg(long = "W", conflicts_with = "w_db")]
    pub w: Option<f64>,
    #[arg(long = "W-db", allow_negative_numbers = true)]
    pub w_db: Option<f64>,
    #[arg(long = "J")]
    pub j: Option<f64>,
    /// Number of W values for fig2 (log-spaced over [1e-3, 1e3]).
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Args, Debug)]
pub struct RerunArgs {
    pub manifest: PathBuf,
}

fn build_command() -> clap::Command {
    let mut cmd = Cli::command();
    let names: Vec<String> = cmd.get_subcommands().map(|s| s.get_name().to_string()).collect();
    for name in names {
        cmd = cmd.mut_subcommand(name, |s| s.args_override_self(true));
    }
    cmd
}

/// Finds the `--config` value (anywhere) and the subcommand index without full parsing.
fn prescan(args: &[String]) -> (Option<PathBuf>, Option<usize>) {
    let mut config = None;
    let mut sub = None;
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" || a == "--threads" {
            if a == "--config" {
                config = args.get(i + 1).map(PathBuf::from);
            }
            i += 2;
            continue;
        }
        if let Some(v) = a.strip_prefix("--config=") {
            config = Some(PathBuf::from(v));
        } else if sub.is_none() && !a.starts_with('-') {
            sub = Some(i);
        }
        i += 1;
    }
    (config, sub)
}

/// Effective args recorded in manifests: no program name, config or thread flags.
fn effective_args(args: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if a == "--config" || a == "--threads" {
            i += 2;
            continue;
        }
        if !(a.starts_with("--config=") || a.starts_with("--threads=")) {
            out.push(a.clone());
        }
        i += 1;
    }
    out
}

pub fn run(raw: Vec<String>) -> anyhow::Result<()> {
    let cmd = build_command();
    let (config_path, sub_pos) = prescan(&raw);
    let args = match (config_path, sub_pos) {
        (Some(path), Some(pos)) => {
            let table = config::load(&path).map_err(|e| usage(format!("{e:#}")))?;
            config::merge(&cmd, &raw, pos, &table)?
        }
        _ => raw,
    };
    let matches = match cmd.try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => e.exit(),
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| usage(e.to_string()))?;
    if let Some(threads) = cli.threads {
        // A pool may already exist when re-running from a manifest.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let recorded = effective_args(&args);
    commands::dispatch(cli.command, &recorded)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<UsageError>().is_some() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<aperture_mi::Error>() {
            return if e.is_argument_error() { 2 } else { 3 };
        }
    }
    3
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    match run(std::env::args().collect()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
