use rotor_vrae::artifact;
use rotor_vrae::dataset::WindowedDataset;
use rotor_vrae::numerics::SeededRng;
use rotor_vrae::vrae::{
    beta_at, encode_dataset, encoder_forward, evaluate, kl_divergence, train, AnnealSchedule, Checkpoint,
    VraeConfig,
};

fn toy_dataset(n: usize, steps: usize, seed: u64) -> WindowedDataset<f64> {
    let mut rng = SeededRng::new(seed);
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let phase = rng.uniform_range(0.0, 6.0);
        for t in 0..steps {
            let a = 0.3 * t as f64 + phase;
            values.push(0.8 * a.sin());
            values.push(if i % 2 == 0 { 0.5 } else { -0.5 } * a.cos());
        }
        labels.push(i % 2);
    }
    WindowedDataset::new(steps, steps, vec!["a".into(), "b".into()], values, labels).unwrap()
}

fn small_config() -> VraeConfig {
    VraeConfig {
        input_dim: 2,
        hidden_units: 6,
        latent_dim: 3,
        learning_rate: 0.01,
        dropout_rate: 0.1,
        batch_size: 4,
        epochs: 5,
        seed: 3,
        ..VraeConfig::default()
    }
}

#[test]
fn kl_matches_monte_carlo() {
    let mut rng = SeededRng::new(2024);
    for case in 0..10 {
        let mu: Vec<f64> = (0..3).map(|_| rng.uniform_range(-2.0, 2.0)).collect();
        let sigma: Vec<f64> = (0..3).map(|_| rng.uniform_range(0.3, 2.5)).collect();
        let closed = kl_divergence(&mu, &sigma).unwrap();
        // E_q[ln q(z) - ln p(z)] with z = mu + sigma * eps
        let samples = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..samples {
            for k in 0..3 {
                let e = rng.standard_normal();
                let z = mu[k] + sigma[k] * e;
                sum += -sigma[k].ln() - 0.5 * e * e + 0.5 * z * z;
            }
        }
        let mc = sum / samples as f64;
        let rel = (mc - closed).abs() / closed;
        assert!(rel < 0.01, "case {case}: closed {closed}, monte carlo {mc}");
    }
}

#[test]
fn kl_is_zero_only_at_prior() {
    let mut rng = SeededRng::new(5);
    assert!(kl_divergence(&[0.0f64; 4], &[1.0; 4]).unwrap().abs() < 1e-12);
    for _ in 0..1000 {
        let mu: Vec<f64> = (0..2).map(|_| rng.uniform_range(-3.0, 3.0)).collect();
        let sigma: Vec<f64> = (0..2).map(|_| rng.uniform_range(0.01, 4.0)).collect();
        assert!(kl_divergence(&mu, &sigma).unwrap() > 1e-12);
    }
}

#[test]
fn zero_epochs_returns_initialisation() {
    let cfg = VraeConfig { epochs: 0, ..small_config() };
    let data = toy_dataset(4, 6, 0);
    let ckpt = train(&cfg, &data, None).unwrap();
    assert_eq!(ckpt, Checkpoint::initial(&cfg).unwrap());
    assert!(ckpt.history.is_empty());
}

#[test]
fn autoencoder_objective_decreases_on_two_windows() {
    let cfg = VraeConfig {
        epochs: 200,
        batch_size: 2,
        dropout_rate: 0.0,
        anneal: AnnealSchedule::constant(0.0),
        ..small_config()
    };
    let data = toy_dataset(2, 8, 1);
    let init = Checkpoint::<f64>::initial(&cfg).unwrap();
    let before = evaluate(&init.weights, &data, 0.0).unwrap();
    let ckpt = train(&cfg, &data, None).unwrap();
    let after = evaluate(&ckpt.weights, &data, 0.0).unwrap();
    assert!(after.recon < before.recon, "{} !< {}", after.recon, before.recon);
    let h = &ckpt.history;
    assert_eq!(h.len(), 200);
    assert!(h[199].train.recon < h[0].train.recon);
}

#[test]
fn training_is_deterministic_and_checkpoints_round_trip() {
    let cfg = small_config();
    let train_set = toy_dataset(10, 6, 2);
    let val = toy_dataset(4, 6, 3);
    let a = train(&cfg, &train_set, Some(&val)).unwrap();
    let b = train(&cfg, &train_set, Some(&val)).unwrap();
    assert_eq!(a, b);
    assert!(a.history.iter().all(|s| s.validation.is_some()));

    let dir = tempfile::tempdir().unwrap();
    let p1 = dir.path().join("a.json");
    let p2 = dir.path().join("b.json");
    a.save(&p1).unwrap();
    let loaded = Checkpoint::<f64>::load(&p1).unwrap();
    assert_eq!(loaded, a);
    loaded.save(&p2).unwrap();
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());

    let other_seed = train(&VraeConfig { seed: 4, ..cfg }, &train_set, None).unwrap();
    assert_ne!(other_seed.weights, a.weights);
}

#[test]
fn checkpoint_loading_validates_shapes_and_version() {
    let cfg = small_config();
    let ckpt = Checkpoint::<f64>::initial(&cfg).unwrap();
    let text = artifact::to_json_string(&ckpt).unwrap();
    let bumped = text.replacen("\"version\": 1", "\"version\": 99", 1);
    assert!(artifact::from_json_str::<Checkpoint<f64>>(&bumped).is_err());

    let mut broken = ckpt.clone();
    broken.config.hidden_units = 7;
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    broken.save(&p).unwrap();
    assert!(Checkpoint::<f64>::load(&p).is_err());
}

#[test]
fn training_rejects_mismatched_features() {
    let cfg = VraeConfig { input_dim: 3, ..small_config() };
    assert!(train(&cfg, &toy_dataset(4, 5, 0), None).is_err());
}

#[test]
fn nan_input_aborts_with_location() {
    let mut data = toy_dataset(4, 5, 0);
    let mut values = data.values().to_vec();
    values[3] = f64::NAN;
    data = WindowedDataset::new(5, 5, data.feature_names.clone(), values, data.labels.clone()).unwrap();
    let err = train(&small_config(), &data, None).unwrap_err();
    assert!(err.is_numerical());
    assert!(err.to_string().contains("epoch 0, batch 0"), "{err}");
}

#[test]
fn encoding_is_deterministic_and_shaped() {
    let cfg = small_config();
    let data = toy_dataset(6, 5, 9);
    let ckpt = train(&cfg, &data, None).unwrap();
    let dup = data.subset(&[0, 1, 2, 0]);
    let enc = encode_dataset(&ckpt, &dup).unwrap();
    assert_eq!(enc.latents.shape(), (4, 3));
    assert_eq!(enc.labels, dup.labels);
    assert_eq!(enc.latents.row(0), enc.latents.row(3));
    assert_eq!(enc, encode_dataset(&ckpt, &dup).unwrap());
    let h1 = encoder_forward(&ckpt.weights, data.window(0), 5).unwrap();
    let h2 = encoder_forward(&ckpt.weights, data.window(0), 5).unwrap();
    assert_eq!(h1.last_hidden(), h2.last_hidden());

    let two_class = VraeConfig { input_dim: 2, latent_dim: 20, hidden_units: 8, ..small_config() };
    let enc = encode_dataset(&Checkpoint::initial(&two_class).unwrap(), &data).unwrap();
    assert_eq!(enc.latents.shape(), (6, 20));
    let multi = VraeConfig { latent_dim: 5, ..two_class };
    let enc = encode_dataset(&Checkpoint::initial(&multi).unwrap(), &data).unwrap();
    assert_eq!(enc.latents.shape(), (6, 5));
}

#[test]
fn single_precision_training_runs() {
    let data: WindowedDataset<f32> = toy_dataset(6, 5, 4).cast();
    let ckpt = train(&small_config(), &data, None).unwrap();
    assert!(ckpt.weights.is_finite());
    assert_eq!(ckpt.history.len(), 5);
}

#[test]
fn cyclical_beta_within_bounds_across_training_steps() {
    let s = AnnealSchedule::cyclical(4, 0.5, 0.8);
    for step in 0..1000 {
        let b = beta_at(&s, step, 1000).unwrap();
        assert!((0.0..=0.8).contains(&b));
    }
}

