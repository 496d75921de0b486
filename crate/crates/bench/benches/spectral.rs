use aperture_mi::{
    circulant_spectrum, gen_bernoulli, gen_mls, mutual_information, run_ensemble, EnsembleConfig,
    EnsembleFamily, LogBase, NoiseModel, ScenePrior,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn spectrum(c: &mut Criterion) {
    let mut group = c.benchmark_group("circulant_spectrum");
    for degree in [8u32, 12, 16] {
        let mask = gen_mls(degree, None).unwrap();
        group.bench_with_input(BenchmarkId::new("mls", degree), &mask, |b, m| {
            b.iter(|| circulant_spectrum(black_box(m)))
        });
    }
    // prime-factor and Bluestein paths
    for n in [249usize, 250, 257] {
        let mask = gen_bernoulli(n, 0.3, 1).unwrap();
        group.bench_with_input(BenchmarkId::new("bernoulli", n), &mask, |b, m| {
            b.iter(|| circulant_spectrum(black_box(m)))
        });
    }
    group.finish();
}

fn exact_mi(c: &mut Criterion) {
    let noise = NoiseModel::new(0.01, 1.0).unwrap();
    let mask = gen_mls(12, None).unwrap();
    c.bench_function("mutual_information/mls12/1f", |b| {
        b.iter(|| mutual_information(black_box(&mask), ScenePrior::OneOverF, &noise, LogBase::Nats))
    });
}

fn ensemble(c: &mut Criterion) {
    let cfg = EnsembleConfig::new(
        249,
        200,
        EnsembleFamily::BernoulliOnOff { p: 0.2 },
        ScenePrior::OneOverF,
        NoiseModel::new(0.01, 1.0).unwrap(),
        7,
    );
    c.bench_function("run_ensemble/n249/200", |b| b.iter(|| run_ensemble(black_box(&cfg))));
}

criterion_group!(benches, spectrum, exact_mi, ensemble);
criterion_main!(benches);
