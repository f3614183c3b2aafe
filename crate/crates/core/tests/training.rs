use spectral_attn::classifier::{predict_proba, train, train_with_trace, TrainConfig};
use spectral_attn::data_io::{synthesize, FeatureSource, SyntheticSpec};
use spectral_attn::features::FeatureMatrix;
use spectral_attn::signal_ops::SpectralConfig;

fn features(seed: u64) -> FeatureMatrix {
    let spec = SyntheticSpec {
        n_examples: 40,
        layers: 2,
        heads: 2,
        seed,
        ..Default::default()
    };
    let (_, corpus) = synthesize(&spec).unwrap();
    corpus.extract(&SpectralConfig::default(), 1).unwrap()
}

#[test]
fn objective_never_increases() {
    for seed in 0..5 {
        let (model, trace) = train_with_trace(&features(seed), &TrainConfig::default()).unwrap();
        assert!(model.converged);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]), "seed {seed}: {trace:?}");
        assert_eq!(*trace.last().unwrap(), model.final_objective);
    }
}

#[test]
fn training_is_bitwise_deterministic() {
    let m = features(1);
    let a = train(&m, &TrainConfig::default()).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(3)
        .build()
        .unwrap()
        .install(|| train(&m, &TrainConfig::default()).unwrap());
    assert_eq!(a.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>(), b.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>());
    assert_eq!(a.bias.to_bits(), b.bias.to_bits());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    a.save(&path).unwrap();
    let back = spectral_attn::classifier::LinearModel::load(&path).unwrap();
    assert_eq!(back, a);
    assert_eq!(predict_proba(&back, &m).unwrap(), predict_proba(&a, &m).unwrap());
}

#[test]
fn iteration_cap_is_reported() {
    let cfg = TrainConfig {
        max_iter: 1,
        tol: 0.0,
        ..Default::default()
    };
    let model = train(&features(2), &cfg).unwrap();
    assert!(!model.converged);
    assert_eq!(model.iterations_used, 1);
}
