//! Quick invariant suite behind `reproduce selftest`.

use anyhow::{bail, Result};
use aperture_mi::ensemble::{EnsembleConfig, EnsembleFamily};
use aperture_mi::{
    asymptotics, circulant_spectrum, gen_bernoulli, gen_mls, gen_mura, gen_pinhole, jensen_bound,
    mi_without_dc, mutual_information, LogBase, NoiseModel, ScenePrior,
};

type Check = fn() -> Result<()>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        bail!(msg())
    }
}

fn mls_flatness() -> Result<()> {
    for degree in 3..=10 {
        let p = gen_mls(degree, None)?;
        let n = p.len() as f64;
        let s = circulant_spectrum(&p);
        ensure(s.lambda1 == (n + 1.0) / 2.0, || format!("degree {degree}: dc {}", s.lambda1))?;
        let dev = s.lambda_sq[1..]
            .iter()
            .map(|l| (l - (n + 1.0) / 4.0).abs())
            .fold(0.0, f64::max);
        ensure(dev <= 1e-6 * n, || format!("degree {degree}: deviation {dev}"))?;
    }
    Ok(())
}

fn pinhole_identity() -> Result<()> {
    for n in [2usize, 5, 64, 257] {
        for (w, j) in [(0.0, 1.0), (0.01, 1.0), (1.0, 1.0)] {
            let mi = mutual_information(&gen_pinhole(n)?, ScenePrior::Iid, &NoiseModel::new(w, j)?, LogBase::Nats)?;
            let expect = (1.0 / (n as f64 * w + j)).ln_1p();
            ensure((mi.per_pixel - expect).abs() <= 1e-12 * expect, || {
                format!("n={n} W={w}: {} vs {expect}", mi.per_pixel)
            })?;
        }
    }
    Ok(())
}

fn mura_two_level() -> Result<()> {
    for n in [13usize, 29, 101] {
        let s = circulant_spectrum(&gen_mura(n)?);
        let r = (n as f64).sqrt();
        let levels = [(1.0 + r).powi(2) / 4.0, (1.0 - r).powi(2) / 4.0];
        let ok = s.lambda_sq[1..]
            .iter()
            .all(|l| levels.iter().any(|v| (l - v).abs() <= 1e-9 * n as f64));
        ensure(ok, || format!("MURA {n} is not two-level"))?;
    }
    ensure(gen_mura(6).is_err(), || "MURA accepted n = 6".into())
}

fn frobenius_and_jensen() -> Result<()> {
    let noise = NoiseModel::new(0.01, 1.0)?;
    for seed in 0..20 {
        let p = gen_bernoulli(255, 0.5, seed)?;
        let s = p.ones() as f64;
        let spec = circulant_spectrum(&p);
        let bulk = aperture_mi::numeric::sum(spec.lambda_sq[1..].iter().copied());
        let expect = 255.0 * s - s * s;
        ensure((bulk - expect).abs() <= 1e-9 * 255.0 * 255.0, || format!("seed {seed}: {bulk} vs {expect}"))?;
        let jb = jensen_bound(&p, &noise)?;
        ensure(jb.bound >= jb.mi_without_dc - 1e-12, || format!("seed {seed}: Jensen bound below MI"))?;
    }
    let mls = gen_mls(8, None)?;
    let jb = jensen_bound(&mls, &noise)?;
    ensure((jb.bound - mi_without_dc(&mls, &noise)?).abs() <= 1e-9, || "MLS misses Jensen equality".into())
}

fn explog_reference() -> Result<()> {
    // e * E1(1)
    let v = asymptotics::explog_exp1(1.0)?;
    ensure((v - 0.596_347_362_323_194_1).abs() < 1e-10, || format!("explog(1) = {v}"))?;
    ensure(asymptotics::explog_exp1(0.0)? == 0.0, || "explog(0) != 0".into())
}

fn closed_forms() -> Result<()> {
    let p = asymptotics::optimal_p_iid(1.0, 1.0)?;
    ensure((p - (2f64.sqrt() - 1.0)).abs() < 1e-12, || format!("p* = {p}"))?;
    let flat = asymptotics::predict_flat_iid(0.0, 1.0)?.value;
    ensure((flat - 1.5f64.ln()).abs() < 1e-12, || format!("flat = {flat}"))?;
    let pin = mutual_information(&gen_pinhole(4)?, ScenePrior::Iid, &NoiseModel::new(0.0, 1.0)?, LogBase::Bits)?;
    ensure((pin.per_pixel - 1.0).abs() < 1e-12, || format!("bits = {}", pin.per_pixel))
}

fn ensemble_determinism() -> Result<()> {
    let config = EnsembleConfig::new(
        63,
        16,
        EnsembleFamily::BernoulliOnOff { p: 0.3 },
        ScenePrior::OneOverF,
        NoiseModel::new(0.01, 1.0)?,
        11,
    );
    let a = aperture_mi::run_ensemble(&config)?;
    let b = aperture_mi::run_ensemble(&config)?;
    ensure(a == b, || "ensemble differs between runs".into())
}

const CHECKS: &[(&str, Check)] = &[
    ("mls spectral flatness", mls_flatness),
    ("pinhole identity", pinhole_identity),
    ("mura two-level spectrum", mura_two_level),
    ("frobenius identity and jensen bound", frobenius_and_jensen),
    ("explog reference value", explog_reference),
    ("closed forms", closed_forms),
    ("ensemble determinism", ensemble_determinism),
];

pub fn run() -> Result<()> {
    let mut failed = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok(()) => println!("[ok]   {name}"),
            Err(e) => {
                failed += 1;
                println!("[FAIL] {name}: {e:#}");
            }
        }
    }
    if failed > 0 {
        return Err(aperture_mi::Error::Numerical(format!("selftest: {failed} check(s) failed")).into());
    }
    println!("selftest: {} checks passed", CHECKS.len());
    Ok(())
}
