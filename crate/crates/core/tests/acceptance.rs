//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary so the verdict lines are never captured. Exits
//! nonzero when any criterion fails. Lines prefixed `diag` are supplementary
//! and never count toward a verdict.

use std::time::Instant;

use aperture_mi::asymptotics::{
    explog_exp1, optimal_p_iid, optimal_p_onef, predict_bernoulli_iid, predict_gaussian_onef,
    predict_uniform_iid, UNIFORM_BULK_VARIANCE_PRINTED, UNIFORM_ENTRY_VARIANCE,
};
use aperture_mi::ensemble::{
    compare, matching_prediction, run_ensemble, EnsembleConfig, EnsembleFamily, EnsembleStats,
    MiScope, RhoMode,
};
use aperture_mi::{
    circulant_spectrum, gen_bernoulli, gen_mls, gen_pinhole, jensen_bound, mi_without_dc,
    mutual_information, LogBase, NoiseModel, ScenePrior,
};
use rand::{Rng, SeedableRng};
use rand_distr::Exp1;

struct Verdict {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

impl Verdict {
    fn new(pass: bool, summary: impl Into<String>) -> Self {
        Verdict {
            pass,
            summary: summary.into(),
            details: Vec::new(),
        }
    }

    fn detail(mut self, line: impl Into<String>) -> Self {
        self.details.push(line.into());
        self
    }
}

fn noise(w: f64, j: f64) -> NoiseModel {
    NoiseModel::new(w, j).unwrap()
}

fn ensemble(
    n: usize,
    trials: usize,
    family: EnsembleFamily,
    prior: ScenePrior,
    nm: NoiseModel,
    seed: u64,
    scope: MiScope,
) -> EnsembleStats {
    let mut c = EnsembleConfig::new(n, trials, family, prior, nm, seed);
    c.scope = scope;
    run_ensemble(&c).unwrap()
}

fn c1_mls_flatness() -> Verdict {
    let mut worst = 0.0f64;
    let mut dc_exact = true;
    for degree in 3..=12 {
        let p = gen_mls(degree, None).unwrap();
        let n = p.len() as f64;
        let s = circulant_spectrum(&p);
        dc_exact &= s.lambda1 == (n + 1.0) / 2.0;
        let dev = s.lambda_sq[1..]
            .iter()
            .map(|l| (l - (n + 1.0) / 4.0).abs())
            .fold(0.0, f64::max);
        worst = worst.max(dev / n);
    }
    Verdict::new(
        dc_exact && worst <= 1e-6,
        format!("MLS degrees 3..12: dc exact = {dc_exact}, max bulk deviation / n = {worst:.2e} (tol 1e-6)"),
    )
}

fn c2_pinhole() -> Verdict {
    let mut worst = 0.0f64;
    for n in [2usize, 5, 64, 257] {
        for (w, j) in [(0.0, 1.0), (0.01, 1.0), (1.0, 1.0)] {
            let mi = mutual_information(&gen_pinhole(n).unwrap(), ScenePrior::Iid, &noise(w, j), LogBase::Nats)
                .unwrap();
            let expect = (1.0 / (n as f64 * w + j)).ln_1p();
            worst = worst.max((mi.per_pixel - expect).abs() / expect);
        }
    }
    Verdict::new(worst <= 1e-12, format!("pinhole vs ln(1/(nW+J)+1): max relative error {worst:.2e} (tol 1e-12)"))
}

fn c3_mls_convergence() -> Verdict {
    let nm = noise(0.01, 1.0);
    let limit = (0.25f64 / 0.51).ln_1p();
    let gap = |degree| {
        let mi = mutual_information(&gen_mls(degree, None).unwrap(), ScenePrior::Iid, &nm, LogBase::Nats).unwrap();
        (mi.per_pixel - limit).abs() / limit
    };
    let (g8, g12) = (gap(8), gap(12));
    Verdict::new(
        g12 <= 0.01 && g12 < g8,
        format!("MLS per-pixel vs flat limit: gap {:.3}% at degree 12, {:.3}% at degree 8", g12 * 100.0, g8 * 100.0),
    )
}

fn c4_mls_beats_bernoulli() -> Verdict {
    let nm = noise(100.0, 1.0);
    let mls = gen_mls(8, None).unwrap();
    let mls_full = mutual_information(&mls, ScenePrior::Iid, &nm, LogBase::Nats).unwrap().per_pixel;
    let mls_bulk = mi_without_dc(&mls, &nm).unwrap();
    let mut pass = true;
    let mut losers = Vec::new();
    let mut diag_pass = true;
    let mut details = Vec::new();
    for (i, p) in [0.1, 0.2, 0.3, 0.4, 0.6, 0.7, 0.8, 0.9].into_iter().enumerate() {
        let family = EnsembleFamily::BernoulliOnOff { p };
        let full = ensemble(255, 200, family, ScenePrior::Iid, nm, 400 + i as u64, MiScope::Full);
        let z = (mls_full - full.mean) / full.stderr;
        if z <= 3.0 {
            pass = false;
            losers.push(format!("p={p} (z={z:.1})"));
        }
        let bulk = ensemble(255, 200, family, ScenePrior::Iid, nm, 400 + i as u64, MiScope::ExcludeDc);
        let zb = (mls_bulk - bulk.mean) / bulk.stderr;
        diag_pass &= zb > 3.0;
        details.push(format!(
            "p={p}: bernoulli {:.6} +- {:.1e} vs MLS {mls_full:.6} (z = {z:.1}); without DC z = {zb:.1}",
            full.mean, full.stderr
        ));
    }
    let summary = if pass {
        format!("MLS per-pixel {mls_full:.6} beats every Bernoulli mean by > 3 SE at W=100")
    } else {
        format!("MLS per-pixel {mls_full:.6} does not beat Bernoulli at {}", losers.join(", "))
    };
    let mut v = Verdict::new(pass, summary);
    for d in details {
        v = v.detail(d);
    }
    v.detail(format!(
        "diag: with the DC term excluded MLS wins at every p: {diag_pass}"
    ))
}

fn c5_onoff_optimum() -> Verdict {
    let mut a_pass = true;
    let mut a_worst = 0.0f64;
    for (w, j) in [(0.01, 1.0), (1.0, 1.0), (100.0, 1.0)] {
        let closed = optimal_p_iid(w, j).unwrap();
        let (mut best_p, mut best) = (0.0, f64::NEG_INFINITY);
        for k in 1..1000 {
            let p = k as f64 / 1000.0;
            let v = predict_bernoulli_iid(p, w, j).unwrap().value;
            if v > best {
                best = v;
                best_p = p;
            }
        }
        a_worst = a_worst.max((closed - best_p).abs());
        a_pass &= (closed - best_p).abs() <= 2e-3;
    }
    let nm = noise(0.01, 1.0);
    let mut b_pass = true;
    let mut details = vec![format!("(a) closed-form p* vs 0.001-grid argmax: max diff {a_worst:.1e} (tol 2e-3)")];
    for (i, p) in [0.1, 0.3, 0.5].into_iter().enumerate() {
        for scope in [MiScope::Full, MiScope::ExcludeDc] {
            let mut c = EnsembleConfig::new(250, 1000, EnsembleFamily::BernoulliOnOff { p }, ScenePrior::Iid, nm, 500 + i as u64);
            c.scope = scope;
            let stats = run_ensemble(&c).unwrap();
            let pred = matching_prediction(&c).unwrap();
            let cmp = compare(&stats, &pred).unwrap();
            let ok = cmp.relative_gap <= 0.02 && cmp.z_score.abs() <= 4.0;
            let tag = match scope {
                MiScope::Full => {
                    b_pass &= ok;
                    "(b)"
                }
                MiScope::ExcludeDc => "diag: without DC",
            };
            details.push(format!(
                "{tag} p={p}: mean {:.6} vs predicted {:.6}, gap {:.2}%, z = {:.1}",
                stats.mean,
                pred.value,
                cmp.relative_gap * 100.0,
                cmp.z_score
            ));
        }
    }
    let mut v = Verdict::new(
        a_pass && b_pass,
        format!("(a) p* grid check {}, (b) ensemble vs predictor {}", ok_word(a_pass), ok_word(b_pass)),
    );
    v.details = details;
    v
}

fn c6_jensen_frobenius() -> Verdict {
    let nm = noise(0.01, 1.0);
    let n = 255.0f64;
    let mut frob_worst = 0.0f64;
    let mut dominance = true;
    let mut min_random_gap = f64::INFINITY;
    let mut check = |p: &aperture_mi::AperturePattern| {
        let s = p.ones() as f64;
        let spec = circulant_spectrum(p);
        let bulk = aperture_mi::numeric::sum(spec.lambda_sq[1..].iter().copied());
        frob_worst = frob_worst.max((bulk - (n * s - s * s)).abs() / (n * n));
        let jb = jensen_bound(p, &nm).unwrap();
        jb.bound - jb.mi_without_dc
    };
    for seed in 0..200 {
        let gap = check(&gen_bernoulli(255, 0.5, 600 + seed).unwrap());
        dominance &= gap >= -1e-12;
        min_random_gap = min_random_gap.min(gap);
    }
    let mls_gap = check(&gen_mls(8, None).unwrap()).abs();
    let pass = dominance && mls_gap <= 1e-9 && min_random_gap > 1e-9 && frob_worst <= 1e-9;
    Verdict::new(
        pass,
        format!(
            "Jensen: MLS gap {mls_gap:.1e}, min random gap {min_random_gap:.2e}; Frobenius max error / n^2 {frob_worst:.1e}"
        ),
    )
}

fn c7_uniform() -> Verdict {
    let (w, j) = (0.01, 1.0);
    let nm = noise(w, j);
    let full = ensemble(250, 1000, EnsembleFamily::UniformGray, ScenePrior::Iid, nm, 700, MiScope::Full);
    let bulk = ensemble(250, 1000, EnsembleFamily::UniformGray, ScenePrior::Iid, nm, 700, MiScope::ExcludeDc);
    let candidates = [("1/24", UNIFORM_BULK_VARIANCE_PRINTED), ("1/12", UNIFORM_ENTRY_VARIANCE)];
    let gap = |mean: f64, v: f64| {
        let pred = predict_uniform_iid(w, j, v).unwrap().value;
        (mean - pred).abs() / pred
    };
    let matched: Vec<(&str, f64)> = candidates
        .iter()
        .copied()
        .filter(|&(_, v)| gap(full.mean, v) <= 0.02)
        .collect();
    let mut details: Vec<String> = candidates
        .iter()
        .map(|&(name, v)| {
            format!(
                "v={name}: gap {:.2}% (full), {:.2}% (diag: without DC)",
                gap(full.mean, v) * 100.0,
                gap(bulk.mean, v) * 100.0
            )
        })
        .collect();
    details.insert(0, format!("uniform ensemble mean {:.6} (full), {:.6} (without DC)", full.mean, bulk.mean));
    let ordering = |v: f64| {
        let lo = 0.5 - 1.0 / 6f64.sqrt();
        (0..50).all(|k| {
            let p = lo + (0.5 - lo) * k as f64 / 49.0;
            predict_bernoulli_iid(p, w, j).unwrap().value > predict_uniform_iid(w, j, v).unwrap().value
        })
    };
    let (pass, summary) = if matched.len() == 1 {
        let (name, v) = matched[0];
        let ord = ordering(v);
        (ord, format!("validated v = {name}; Bernoulli beats uniform on the p grid: {ord}"))
    } else {
        (false, format!("{} of the candidate constants match within 2% (need exactly one)", matched.len()))
    };
    let diag_v = candidates.iter().copied().filter(|&(_, v)| gap(bulk.mean, v) <= 0.02).collect::<Vec<_>>();
    if let [(name, v)] = diag_v[..] {
        details.push(format!("diag: without DC the validated constant is v = {name}; ordering holds: {}", ordering(v)));
    }
    let mut v = Verdict::new(pass, summary);
    v.details = details;
    v
}

fn c8_gaussian_circulants() -> Verdict {
    let mut pass = true;
    let mut details = Vec::new();
    for (k, (w, rho)) in [(0.01, 0.5), (1.0, 0.0)].into_iter().enumerate() {
        let mut c = EnsembleConfig::new(101, 1000, EnsembleFamily::GaussianEntries, ScenePrior::OneOverF, noise(w, 1.0), 800 + k as u64);
        c.rho_mode = RhoMode::Fixed(rho);
        let stats = run_ensemble(&c).unwrap();
        let pred = predict_gaussian_onef(101, w, rho).unwrap();
        let gap = compare(&stats, &pred).unwrap().relative_gap;
        pass &= gap <= 0.02;
        let printed = aperture_mi::asymptotics::predict_gaussian_onef_with(
            101,
            w,
            rho,
            aperture_mi::asymptotics::GaussianDcForm::ExtraFactorN,
        )
        .unwrap()
        .value;
        details.push(format!(
            "W={w}, rhoJ={rho}: mean {:.4} vs predicted {:.4}, gap {:.2}% (diag: DC scaled by n gives {:.4}, gap {:.2}%)",
            stats.mean,
            pred.value,
            gap * 100.0,
            printed,
            (stats.mean - printed).abs() / printed * 100.0
        ));
    }
    let mut v = Verdict::new(pass, "Gaussian-entry circulants (n=101, 1/f) vs expectation formula within 2%");
    v.details = details;
    v
}

fn c9_fig3() -> Verdict {
    let nm = noise(0.01, 1.0);
    let base = EnsembleConfig::new(249, 1000, EnsembleFamily::BernoulliOnOff { p: 0.5 }, ScenePrior::OneOverF, nm, 900);
    let grid = aperture_mi::ensemble::p_grid(0.05, 0.95, 0.05);
    let rows = aperture_mi::sweep_p(&base, &grid).unwrap();
    let worst = rows.iter().max_by(|a, b| a.relative_gap.total_cmp(&b.relative_gap)).unwrap();
    let emp = rows.iter().max_by(|a, b| a.stats.mean.total_cmp(&b.stats.mean)).unwrap().p;
    let p_star = optimal_p_onef(249, 0.01, 1.0).unwrap();
    let gaps_ok = rows.iter().all(|r| r.relative_gap <= 0.02);
    let argmax_ok = (p_star - emp).abs() <= 0.05 + 1e-12;
    Verdict::new(
        gaps_ok && argmax_ok,
        format!(
            "max gap {:.2}% at p={}; optimal p {p_star:.4} vs empirical argmax {emp}",
            worst.relative_gap * 100.0,
            worst.p
        ),
    )
}

fn c10_explog_mc() -> Verdict {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1000);
    let samples = 1_000_000;
    let mut pass = true;
    let mut parts = Vec::new();
    for c in [0.01, 0.5, 1.0, 10.0] {
        let draws: Vec<f64> = (0..samples)
            .map(|_| {
                let y: f64 = rng.sample(Exp1);
                (c * y).ln_1p()
            })
            .collect();
        let mean = aperture_mi::numeric::sum(draws.iter().copied()) / samples as f64;
        let var = aperture_mi::numeric::sum(draws.iter().map(|x| (x - mean).powi(2))) / (samples - 1) as f64;
        let se = (var / samples as f64).sqrt();
        let z = (explog_exp1(c).unwrap() - mean) / se;
        pass &= z.abs() <= 3.0;
        parts.push(format!("c={c}: z={z:.2}"));
    }
    Verdict::new(pass, format!("explog vs 1e6-sample Monte Carlo: {}", parts.join(", ")))
}

fn ok_word(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "failed"
    }
}

fn main() {
    let criteria: [(u32, fn() -> Verdict); 10] = [
        (1, c1_mls_flatness),
        (2, c2_pinhole),
        (3, c3_mls_convergence),
        (4, c4_mls_beats_bernoulli),
        (5, c5_onoff_optimum),
        (6, c6_jensen_frobenius),
        (7, c7_uniform),
        (8, c8_gaussian_circulants),
        (9, c9_fig3),
        (10, c10_explog_mc),
    ];
    let mut failed = Vec::new();
    for (id, f) in criteria {
        let start = Instant::now();
        let v = f();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {id}: {} ({:.1}s)", v.summary, start.elapsed().as_secs_f64());
        for d in &v.details {
            println!("         {d}");
        }
        if !v.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 10 criteria passed");
    } else {
        println!("acceptance: {} of 10 criteria failed: {failed:?}", failed.len());
        std::process::exit(1);
    }
}
