//! Subcommand implementations.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use aperture_mi::asymptotics::{self, GaussianDcForm};
use aperture_mi::ensemble::{self, EnsembleConfig, EnsembleFamily, MiScope, RhoMode};
use aperture_mi::{
    AperturePattern, FlatOneOverFForm, LogBase, NoiseModel, PatternDescriptor, PredictionResult,
    ScenePrior,
};
use clap::ValueEnum;
use serde_json::{json, Value};

use crate::output::{fmt12, json_bytes, manifest_path, round_json, write_all_or_nothing, RunManifest};
use crate::{
    usage, Command, DcFormArg, EnsembleArgs, FamilyArg, FormArg, GenerateArgs, MiArgs, NoiseArgs,
    OptimizeArgs, PatternSource, PredictArgs, Predictor, PriorArg, ReproduceArgs, Reproduction,
    RerunArgs, RhoModeArg, ScopeArg, SweepArgs,
};

/// Ensemble default when no noise flag is given: W = -20 dB.
const DEFAULT_ENSEMBLE_W: f64 = 0.01;
const FIG2_W_RANGE: (f64, f64) = (1e-3, 1e3);
const FIG2_POINTS: usize = 61;
/// Slack for the fig2 ordering checks (values are quadrature results).
const ORDER_SLACK: f64 = 1e-9;

pub const CSV_HEADER: &str =
    "p,n,W,J,prior,family,trials,seed,mi_mean,mi_std,mi_stderr,mi_predicted,relative_gap,log_base";

pub fn dispatch(command: Command, args: &[String]) -> Result<()> {
    match command {
        Command::Generate(a) => generate(a, args),
        Command::Mi(a) => mi(a, args),
        Command::Predict(a) => predict(a, args),
        Command::OptimizeP(a) => optimize_p(a, args),
        Command::Sweep(a) => sweep(a, args),
        Command::Reproduce(a) => reproduce(a, args),
        Command::Rerun(a) => rerun(a),
    }
}

fn print_json(value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(&round_json(value.clone()))?;
    let mut stdout = std::io::stdout().lock();
    match writeln!(stdout, "{text}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => Ok(other?),
    }
}

fn prior_flag(prior: ScenePrior) -> &'static str {
    match prior {
        ScenePrior::Iid => "iid",
        ScenePrior::OneOverF => "1f",
    }
}

fn resolve_noise(noise: &NoiseArgs, default_w: Option<f64>) -> Result<NoiseModel> {
    let model = match (noise.w, noise.w_db) {
        (Some(w), _) => NoiseModel::new(w, noise.j)?,
        (None, Some(db)) => NoiseModel::from_thermal_db(db, noise.j)?,
        (None, None) => match default_w {
            Some(w) => NoiseModel::new(w, noise.j)?,
            None => return Err(usage("one of --W or --W-db is required")),
        },
    };
    Ok(model)
}

/// Odd-n reduction for the 1/f formulas, announced on stderr.
fn odd_n(n: usize) -> usize {
    if n.is_multiple_of(2) && n > 0 {
        log::warn!("n reduced to {} (odd-n formula)", n - 1);
        n - 1
    } else {
        n
    }
}

fn need<T>(value: Option<T>, flag: &str, what: &str) -> Result<T> {
    value.ok_or_else(|| usage(format!("{what} requires --{flag}")))
}

fn build_pattern(src: &PatternSource) -> Result<AperturePattern> {
    let family = need(src.family, "family", "pattern generation")?;
    let pattern = match family {
        FamilyArg::Pinhole => aperture_mi::gen_pinhole(need(src.n, "n", "pinhole")?)?,
        FamilyArg::Mls => {
            aperture_mi::gen_mls(need(src.degree, "degree", "mls")?, src.seed_state)?
        }
        FamilyArg::Mura => aperture_mi::gen_mura(need(src.n, "n", "mura")?)?,
        FamilyArg::Bernoulli => aperture_mi::gen_bernoulli(
            need(src.n, "n", "bernoulli")?,
            need(src.p, "p", "bernoulli")?,
            src.seed.unwrap_or(0),
        )?,
        FamilyArg::Uniform => {
            aperture_mi::gen_uniform(need(src.n, "n", "uniform")?, src.seed.unwrap_or(0))?
        }
    };
    Ok(pattern)
}

fn generate(a: GenerateArgs, args: &[String]) -> Result<()> {
    let pattern = build_pattern(&a.source)?;
    let desc = pattern.descriptor();
    let prefix = a
        .out
        .unwrap_or_else(|| PathBuf::from(format!("{}_{}", desc.family.name(), desc.n)));
    let text_path = with_suffix(&prefix, ".txt");
    let json_path = with_suffix(&prefix, ".json");
    let mut manifest = RunManifest::new(
        "generate",
        args,
        serde_json::to_value(&desc)?,
        pattern.seed(),
    );
    manifest.outputs = vec![text_path.display().to_string(), json_path.display().to_string()];
    let desc_value = round_json(serde_json::to_value(&desc)?);
    write_all_or_nothing(&[
        (text_path.clone(), pattern.to_text().into_bytes()),
        (json_path.clone(), json_bytes(&desc_value)?),
        (manifest_path(&text_path), json_bytes(&manifest)?),
    ])?;
    print_json(&json!({
        "pattern": text_path.display().to_string(),
        "descriptor": json_path.display().to_string(),
        "family": desc.family.name(),
        "n": desc.n,
        "rho": desc.rho,
        "ones": pattern.ones(),
    }))
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_pattern(path: &Path) -> Result<AperturePattern> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read pattern {}: {e}", path.display())))?;
    let pattern = AperturePattern::from_text(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    let desc_path = path.with_extension("json");
    if desc_path != path && desc_path.exists() {
        let desc_text = std::fs::read_to_string(&desc_path)
            .with_context(|| format!("reading {}", desc_path.display()))?;
        let desc: PatternDescriptor = serde_json::from_str(&desc_text)
            .map_err(|e| usage(format!("bad descriptor {}: {e}", desc_path.display())))?;
        return Ok(pattern.with_descriptor(&desc)?);
    }
    Ok(pattern)
}

fn mi(a: MiArgs, args: &[String]) -> Result<()> {
    let pattern = match (&a.pattern, a.source.family) {
        (Some(path), _) => load_pattern(path)?,
        (None, Some(_)) => build_pattern(&a.source)?,
        (None, None) => return Err(usage("mi requires --pattern FILE or --family")),
    };
    let noise = resolve_noise(&a.noise, None)?;
    let prior: ScenePrior = a.prior.into();
    let base: LogBase = a.log_base.into();
    let rho = a.rho.unwrap_or_else(|| pattern.transmissivity());
    let result = aperture_mi::spectrum::mutual_information_with_rho(&pattern, prior, &noise, rho, base)?;
    let params = json!({
        "family": pattern.family().name(),
        "n": pattern.len(),
        "prior": prior_flag(prior),
        "W": noise.thermal,
        "J": noise.scene,
        "rho": rho,
        "log_base": base.name(),
        "pattern": a.pattern.as_ref().map(|p| p.display().to_string()),
    });
    let manifest = RunManifest::new("mi", args, params, pattern.seed());
    print_json(&json!({
        "n": pattern.len(),
        "rho": rho,
        "total": result.total,
        "per_pixel": result.per_pixel,
        "log_base": base.name(),
        "prior": prior_flag(prior),
        "W": noise.thermal,
        "J": noise.scene,
        "family": pattern.family().name(),
        "manifest": manifest,
    }))
}

fn prediction_json(which: &str, r: &PredictionResult, base: LogBase, params: Value) -> Value {
    json!({
        "predictor": which,
        "value": base.from_nats(r.value),
        "kind": r.kind,
        "method": r.method,
        "est_abs_error": base.from_nats(r.est_abs_error),
        "log_base": base.name(),
        "params": params,
    })
}

fn predict(a: PredictArgs, args: &[String]) -> Result<()> {
    let noise = resolve_noise(&a.noise, None)?;
    let (w, j) = (noise.thermal, noise.scene);
    let base: LogBase = a.log_base.into();
    let name = a.which.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default();
    let mut params = json!({ "W": w, "J": j });
    let result = match a.which {
        Predictor::Pinhole => {
            let n = need(a.n, "n", "pinhole")?;
            params["n"] = json!(n);
            asymptotics::predict_pinhole(n, w, j)?
        }
        Predictor::FlatIid => asymptotics::predict_flat_iid(w, j)?,
        Predictor::BernoulliIid => {
            let p = need(a.p, "p", "bernoulli-iid")?;
            params["p"] = json!(p);
            asymptotics::predict_bernoulli_iid(p, w, j)?
        }
        Predictor::UniformIid => {
            params["bulk_variance"] = json!(a.bulk_variance);
            asymptotics::predict_uniform_iid(w, j, a.bulk_variance)?
        }
        Predictor::Flat1f => {
            let n = odd_n(need(a.n, "n", "flat-1f")?);
            let form = match a.form {
                FormArg::Midsum => FlatOneOverFForm::MidSum,
                FormArg::Closed => FlatOneOverFForm::ClosedForm,
            };
            params["n"] = json!(n);
            params["form"] = serde_json::to_value(form)?;
            asymptotics::predict_flat_onef(n, w, j, form)?
        }
        Predictor::Gaussian1f => {
            let n = odd_n(need(a.n, "n", "gaussian-1f")?);
            let rho_j = a.rho_j.unwrap_or(0.0);
            let dc_form = match a.dc_form {
                DcFormArg::Consistent => GaussianDcForm::Consistent,
                DcFormArg::ExtraFactorN => GaussianDcForm::ExtraFactorN,
            };
            params = json!({ "W": w, "n": n, "rho_J": rho_j, "dc_form": dc_form });
            asymptotics::predict_gaussian_onef_with(n, w, rho_j, dc_form)?
        }
        Predictor::Bernoulli1f => {
            let n = odd_n(need(a.n, "n", "bernoulli-1f")?);
            let p = need(a.p, "p", "bernoulli-1f")?;
            params["n"] = json!(n);
            params["p"] = json!(p);
            asymptotics::predict_bernoulli_onef(n, p, w, j)?
        }
    };
    let mut out = prediction_json(&name, &result, base, params.clone());
    out["manifest"] = serde_json::to_value(RunManifest::new("predict", args, params, None))?;
    print_json(&out)
}

fn optimize_p(a: OptimizeArgs, args: &[String]) -> Result<()> {
    let noise = resolve_noise(&a.noise, None)?;
    let (w, j) = (noise.thermal, noise.scene);
    let base: LogBase = a.log_base.into();
    let (p_star, predicted, n) = match a.prior {
        PriorArg::Iid => {
            let p = asymptotics::optimal_p_iid(w, j)?;
            (p, asymptotics::predict_bernoulli_iid(p, w, j)?, None)
        }
        PriorArg::OneOverF => {
            let n = odd_n(need(a.n, "n", "the 1/f prior")?);
            let p = asymptotics::optimal_p_onef(n, w, j)?;
            (p, asymptotics::predict_bernoulli_onef(n, p, w, j)?, Some(n))
        }
    };
    let params = json!({ "prior": prior_flag(a.prior.into()), "n": n, "W": w, "J": j });
    print_json(&json!({
        "p_star": p_star,
        "predicted_mi": base.from_nats(predicted.value),
        "kind": predicted.kind,
        "log_base": base.name(),
        "prior": prior_flag(a.prior.into()),
        "n": n,
        "W": w,
        "J": j,
        "manifest": RunManifest::new("optimize-p", args, params, None),
    }))
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || usage(format!("cannot parse p grid {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = if parts.len() == 3 {
        let v: Vec<f64> = parts
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        if !(v[2] > 0.0 && v[1] >= v[0]) {
            return Err(bad());
        }
        ensemble::p_grid(v[0], v[1], v[2])
    } else {
        spec.split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

fn ensemble_base(e: &EnsembleArgs) -> Result<EnsembleConfig> {
    let noise = resolve_noise(&e.noise, Some(DEFAULT_ENSEMBLE_W))?;
    let prior: ScenePrior = e.prior.into();
    let n = if prior == ScenePrior::OneOverF { odd_n(e.n) } else { e.n };
    let mut config = EnsembleConfig::new(
        n,
        e.trials,
        EnsembleFamily::BernoulliOnOff { p: 0.5 },
        prior,
        noise,
        e.seed,
    );
    config.log_base = e.log_base.into();
    config.rho_mode = match e.rho_mode {
        RhoModeArg::Realized => RhoMode::Realized,
        RhoModeArg::Nominal => RhoMode::Nominal,
    };
    config.scope = match e.scope {
        ScopeArg::Full => MiScope::Full,
        ScopeArg::ExcludeDc => MiScope::ExcludeDc,
    };
    Ok(config)
}

/// Runs the sweep and renders the CSV body.
fn sweep_csv(config: &EnsembleConfig, grid: &[f64]) -> Result<(String, Vec<aperture_mi::SweepRow>)> {
    let rows = ensemble::sweep_p(config, grid)?;
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &rows {
        let cells = [
            fmt12(r.p),
            r.stats.n.to_string(),
            fmt12(config.noise.thermal),
            fmt12(config.noise.scene),
            prior_flag(config.prior).to_string(),
            "bernoulli".to_string(),
            r.stats.trials.to_string(),
            config.master_seed.to_string(),
            fmt12(r.stats.mean),
            fmt12(r.stats.std),
            fmt12(r.stats.stderr),
            fmt12(r.predicted),
            fmt12(r.relative_gap),
            config.log_base.name().to_string(),
        ];
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    Ok((csv, rows))
}

fn sweep_params(config: &EnsembleConfig, grid: &[f64]) -> Result<Value> {
    let mut params = serde_json::to_value(config)?;
    params["p_grid"] = json!(grid);
    Ok(params)
}

fn run_sweep(
    command: &str,
    config: &EnsembleConfig,
    grid: &[f64],
    out: &Path,
    args: &[String],
) -> Result<Vec<aperture_mi::SweepRow>> {
    let (csv, rows) = sweep_csv(config, grid)?;
    let mut manifest = RunManifest::new(command, args, sweep_params(config, grid)?, Some(config.master_seed));
    manifest.outputs = vec![out.display().to_string()];
    write_all_or_nothing(&[
        (out.to_path_buf(), csv.into_bytes()),
        (manifest_path(out), json_bytes(&manifest)?),
    ])?;
    Ok(rows)
}

fn sweep_summary(out: &Path, rows: &[aperture_mi::SweepRow]) -> Value {
    let max_gap = rows.iter().map(|r| r.relative_gap).fold(0.0, f64::max);
    let best = rows
        .iter()
        .max_by(|a, b| a.stats.mean.total_cmp(&b.stats.mean))
        .map(|r| r.p);
    json!({
        "out": out.display().to_string(),
        "rows": rows.len(),
        "max_relative_gap": max_gap,
        "empirical_argmax_p": best,
    })
}

fn sweep(a: SweepArgs, args: &[String]) -> Result<()> {
    let config = ensemble_base(&a.ensemble)?;
    let grid = parse_grid(&a.ensemble.p_grid)?;
    let rows = run_sweep("sweep", &config, &grid, &a.out, args)?;
    print_json(&sweep_summary(&a.out, &rows))
}

fn reproduce(a: ReproduceArgs, args: &[String]) -> Result<()> {
    match a.which {
        Reproduction::Fig2 => fig2(&a, args),
        Reproduction::Fig3 => fig3(&a, args),
        Reproduction::Selftest => crate::selftest::run(),
    }
}

fn fig3(a: &ReproduceArgs, args: &[String]) -> Result<()> {
    let e = EnsembleArgs {
        prior: PriorArg::OneOverF,
        n: a.n.unwrap_or(250),
        trials: a.trials.unwrap_or(1000),
        p_grid: a.p_grid.clone().unwrap_or_else(|| "0.05:0.95:0.05".into()),
        noise: NoiseArgs { w: a.w, w_db: a.w_db, j: a.j.unwrap_or(1.0) },
        seed: a.seed.unwrap_or(0),
        log_base: crate::LogBaseArg::Nats,
        rho_mode: RhoModeArg::Realized,
        scope: ScopeArg::Full,
    };
    let config = ensemble_base(&e)?;
    let grid = parse_grid(&e.p_grid)?;
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("fig3.csv"));
    let rows = run_sweep("reproduce fig3", &config, &grid, &out, args)?;
    let p_star = asymptotics::optimal_p_onef(config.n, config.noise.thermal, config.noise.scene)?;
    let mut summary = sweep_summary(&out, &rows);
    summary["analytic_p_star"] = json!(p_star);
    summary["all_within_2pct"] = json!(rows.iter().all(|r| r.relative_gap <= 0.02));
    print_json(&summary)
}

/// One fig2 row: flat, Bernoulli(1/2), p*, Bernoulli(p*), per pixel in nats.
fn fig2_row(w: f64, j: f64) -> Result<[f64; 4]> {
    let flat = asymptotics::predict_flat_iid(w, j)?.value;
    let half = asymptotics::predict_bernoulli_iid(0.5, w, j)?.value;
    let p_star = asymptotics::optimal_p_iid(w, j)?;
    let best = asymptotics::predict_bernoulli_iid(p_star, w, j)?.value;
    Ok([flat, half, p_star, best])
}

fn fig2(a: &ReproduceArgs, args: &[String]) -> Result<()> {
    if a.w.is_some() || a.w_db.is_some() {
        return Err(usage("fig2 sweeps W itself; use --points and --J instead"));
    }
    let j = a.j.unwrap_or(1.0);
    let points = a.points.unwrap_or(FIG2_POINTS);
    if points < 2 {
        return Err(usage("fig2 needs --points >= 2"));
    }
    let (lo, hi) = (FIG2_W_RANGE.0.log10(), FIG2_W_RANGE.1.log10());
    let mut csv = String::from("W,J,flat,bernoulli_half,p_star,bernoulli_p_star,log_base\n");
    let mut violations = Vec::new();
    let mut min_gain = f64::INFINITY;
    for i in 0..points {
        let w = 10f64.powf(lo + (hi - lo) * i as f64 / (points - 1) as f64);
        let [flat, half, p_star, best] = fig2_row(w, j)?;
        if flat < half - ORDER_SLACK || best < half - ORDER_SLACK {
            violations.push(w);
        }
        min_gain = min_gain.min(best - half);
        let cells = [fmt12(w), fmt12(j), fmt12(flat), fmt12(half), fmt12(p_star), fmt12(best)];
        csv.push_str(&cells.join(","));
        csv.push_str(",nats\n");
    }
    if !violations.is_empty() {
        return Err(aperture_mi::Error::Numerical(format!(
            "fig2 ordering violated at W = {violations:?}"
        ))
        .into());
    }
    let small_w_gain = {
        let [_, half, _, best] = fig2_row(FIG2_W_RANGE.0, j)?;
        best - half
    };
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("fig2.csv"));
    let params = json!({
        "sweep_variable": "W, log-spaced over [1e-3, 1e3] with J fixed",
        "J": j,
        "points": points,
        "W_range": [FIG2_W_RANGE.0, FIG2_W_RANGE.1],
        "kind": "per_pixel",
        "prior": "iid",
    });
    let mut manifest = RunManifest::new("reproduce fig2", args, params, None);
    manifest.outputs = vec![out.display().to_string()];
    write_all_or_nothing(&[
        (out.clone(), csv.into_bytes()),
        (manifest_path(&out), json_bytes(&manifest)?),
    ])?;
    print_json(&json!({
        "out": out.display().to_string(),
        "rows": points,
        "flat_ge_half": true,
        "p_star_ge_half": true,
        "gain_at_smallest_W": small_w_gain,
    }))
}

fn rerun(a: RerunArgs) -> Result<()> {
    let manifest = RunManifest::load(&a.manifest).map_err(|e| usage(format!("{e:#}")))?;
    if manifest.tool != crate::output::TOOL {
        return Err(usage(format!("manifest was written by {}", manifest.tool)));
    }
    if manifest.version != crate::output::VERSION {
        log::warn!(
            "manifest version {} differs from this build ({})",
            manifest.version,
            crate::output::VERSION
        );
    }
    if manifest.args.first().map(String::as_str) == Some("rerun") {
        return Err(usage("refusing to rerun a rerun manifest"));
    }
    let mut argv = vec![crate::output::TOOL.to_string()];
    argv.extend(manifest.args);
    crate::run(argv)
}
