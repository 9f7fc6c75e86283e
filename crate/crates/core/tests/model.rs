use mmtmlp::dataset::{split_and_window, PreparedTake, SplitConfig, SynthSpec, SynthWorld};
use mmtmlp::handpose::NormalizeConfig;
use mmtmlp::model::*;
use mmtmlp::nn::Parameters;
use mmtmlp::par::Execution;
use mmtmlp::sampling::{MultiRateWindow, RateConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn tiny(kind: ModelKind, n_actions: usize) -> ModelConfig {
    ModelConfig {
        kind,
        n_actions,
        d_rgb: 32,
        d_hp: 8,
        hp_hidden: 16,
        head_hidden: 16,
        temporal: TemporalMlpConfig {
            depth: 1,
            ..TemporalMlpConfig::default()
        },
        ..ModelConfig::default()
    }
}

fn windows(
    rates: &RateConfig,
) -> (
    Vec<MultiRateWindow>,
    Vec<MultiRateWindow>,
    Vec<usize>,
    usize,
) {
    let ds = SynthWorld::new(SynthSpec {
        n_takes: 4,
        frames_per_take: 200,
        ..SynthSpec::default()
    })
    .unwrap()
    .dataset();
    let takes: Vec<PreparedTake> = ds
        .takes
        .iter()
        .map(|t| t.prepare(&NormalizeConfig::default()).unwrap())
        .collect();
    let split = SplitConfig {
        stride: 15,
        ..SplitConfig::default()
    };
    let sets = split_and_window(&takes, rates, &split).unwrap();
    (sets.train, sets.val, ds.action_to_verb(), ds.n_actions())
}

#[test]
fn parallel_and_sequential_training_agree_bitwise() {
    let rates = RateConfig::new(10.0, 10.0);
    let (train_set, val, a2v, n) = windows(&rates);
    let mut cfg = TrainConfig {
        epochs: 2,
        batch_size: 7,
        ..TrainConfig::default()
    };
    let par = train(
        tiny(ModelKind::MmTmlp, n),
        rates,
        &train_set,
        &val,
        &a2v,
        &cfg,
    )
    .unwrap();
    cfg.parallel = false;
    let seq = train(
        tiny(ModelKind::MmTmlp, n),
        rates,
        &train_set,
        &val,
        &a2v,
        &cfg,
    )
    .unwrap();
    assert_eq!(par.history, seq.history);
    assert_eq!(par.model.flatten(), seq.model.flatten());
}

#[test]
fn batch_gradient_is_mode_independent() {
    let rates = RateConfig::new(10.0, 10.0);
    let (train_set, _, _, n) = windows(&rates);
    let model = Model::new(
        tiny(ModelKind::MmTmlp, n),
        rates,
        &mut ChaCha8Rng::seed_from_u64(3),
    )
    .unwrap();
    let batch: Vec<&MultiRateWindow> = train_set.iter().take(11).collect();
    let (la, ga) = batch_gradient(&model, &batch, Execution::Parallel).unwrap();
    let (lb, gb) = batch_gradient(&model, &batch, Execution::Sequential).unwrap();
    assert_eq!(la, lb);
    assert_eq!(ga.flatten(), gb.flatten());
}

#[test]
fn checkpoint_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rates = RateConfig::new(10.0, 30.0);
    for kind in ModelKind::ALL {
        let rates = match kind {
            ModelKind::RgbSeq => RateConfig::new(10.0, 0.0),
            ModelKind::HpMlp => RateConfig::new(0.0, 30.0),
            _ => rates,
        };
        let m = Model::new(tiny(kind, 5), rates, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        let p = dir.path().join(format!("{kind}.json"));
        m.save(&p).unwrap();
        assert_eq!(Model::load(&p).unwrap(), m);
    }
}

#[test]
fn kinds_reject_missing_streams() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    assert!(Model::new(
        tiny(ModelKind::MmTmlp, 5),
        RateConfig::new(30.0, 0.0),
        &mut rng
    )
    .is_err());
    assert!(Model::new(
        tiny(ModelKind::HpMlp, 5),
        RateConfig::new(0.0, 0.0),
        &mut rng
    )
    .is_err());
    assert!(Model::new(
        tiny(ModelKind::FusionNet, 5),
        RateConfig::new(0.0, 30.0),
        &mut rng
    )
    .is_err());
}

#[test]
fn training_reduces_loss() {
    let rates = RateConfig::new(10.0, 10.0);
    let (train_set, val, a2v, n) = windows(&rates);
    let cfg = TrainConfig {
        epochs: 4,
        batch_size: 8,
        lr: 3e-3,
        ..TrainConfig::default()
    };
    let out = train(
        tiny(ModelKind::MmTmlp, n),
        rates,
        &train_set,
        &val,
        &a2v,
        &cfg,
    )
    .unwrap();
    assert!(out.history.last().unwrap().train_loss < out.history[0].train_loss);
}

#[test]
fn huge_learning_rate_diverges_with_epoch() {
    let rates = RateConfig::new(10.0, 10.0);
    let (train_set, val, a2v, n) = windows(&rates);
    let cfg = TrainConfig {
        epochs: 3,
        lr: 1e300,
        ..TrainConfig::default()
    };
    match train(
        tiny(ModelKind::MmTmlp, n),
        rates,
        &train_set,
        &val,
        &a2v,
        &cfg,
    ) {
        Err(mmtmlp::Error::Divergence { epoch, .. }) => assert!(epoch >= 1),
        other => panic!("expected divergence, got {:?}", other.map(|o| o.history)),
    }
}
