use aperture_mi::asymptotics::{predict_flat_onef, FlatOneOverFForm};
use aperture_mi::ensemble::{derive_trial_seed, matching_prediction};
use aperture_mi::{
    compare, gen_bernoulli, gen_mls, gen_mura, mutual_information, run_ensemble, AperturePattern,
    EnsembleConfig, EnsembleFamily, LogBase, MiScope, NoiseModel, PatternDescriptor, ScenePrior,
};

#[test]
fn text_and_descriptor_round_trip_preserves_mi() {
    let noise = NoiseModel::new(0.01, 1.0).unwrap();
    for pattern in [gen_mls(7, Some(5)).unwrap(), gen_bernoulli(100, 0.3, 9).unwrap()] {
        let desc: PatternDescriptor =
            serde_json::from_str(&serde_json::to_string(&pattern.descriptor()).unwrap()).unwrap();
        let back = AperturePattern::from_text(&pattern.to_text())
            .unwrap()
            .with_descriptor(&desc)
            .unwrap();
        assert_eq!(back.values(), pattern.values());
        assert_eq!(back.family(), pattern.family());
        for prior in [ScenePrior::Iid, ScenePrior::OneOverF] {
            let a = mutual_information(&pattern, prior, &noise, LogBase::Nats).unwrap();
            let b = mutual_information(&back, prior, &noise, LogBase::Nats).unwrap();
            assert_eq!(a, b);
        }
    }
}

#[test]
fn mura_matches_flat_one_over_f_prediction() {
    // MURA is only approximately flat; its 1/f MI sits close to the flat formula.
    let noise = NoiseModel::new(0.01, 1.0).unwrap();
    let mi = mutual_information(&gen_mura(257).unwrap(), ScenePrior::OneOverF, &noise, LogBase::Nats)
        .unwrap()
        .total;
    let pred = predict_flat_onef(257, 0.01, 1.0, FlatOneOverFForm::MidSum).unwrap().value;
    assert!((mi - pred).abs() / pred < 0.02, "{mi} vs {pred}");
}

#[test]
fn ensemble_without_dc_tracks_iid_predictor() {
    let noise = NoiseModel::new(0.01, 1.0).unwrap();
    let mut config = EnsembleConfig::new(
        250,
        300,
        EnsembleFamily::BernoulliOnOff { p: 0.3 },
        ScenePrior::Iid,
        noise,
        77,
    );
    config.scope = MiScope::ExcludeDc;
    let stats = run_ensemble(&config).unwrap();
    let cmp = compare(&stats, &matching_prediction(&config).unwrap()).unwrap();
    assert!(cmp.relative_gap < 0.01, "{cmp:?}");
    assert!(cmp.z_score.abs() < 5.0, "{cmp:?}");
}

#[test]
fn ensemble_first_trial_is_the_documented_pattern() {
    // Trial 0 of a Bernoulli ensemble is gen_bernoulli with the derived seed.
    let noise = NoiseModel::new(0.5, 1.0).unwrap();
    let config = EnsembleConfig::new(
        31,
        2,
        EnsembleFamily::BernoulliOnOff { p: 0.4 },
        ScenePrior::Iid,
        noise,
        123,
    );
    let trials = aperture_mi::ensemble::run_trials(&config).unwrap();
    let pattern = gen_bernoulli(31, 0.4, derive_trial_seed(123, 0)).unwrap();
    let mi = mutual_information(&pattern, ScenePrior::Iid, &noise, LogBase::Nats).unwrap();
    assert!((trials[0].0 - mi.per_pixel).abs() < 1e-12);
    assert_eq!(trials[0].1, pattern.transmissivity());
}
