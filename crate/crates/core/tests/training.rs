mod common;

use common::*;
use mnam::data::split;
use mnam::metrics::{auc, probabilities, scores};
use mnam::monotonicity::{certify, penalty_h1, ConstraintSet, PenaltyConfig};
use mnam::optim::{bce_loss, Optimizer};
use mnam::synthetic;
use mnam::training::{certified_train, train_nam, TrainConfig};
use mnam::{Error, Execution};

fn adam(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        batch_size: 64,
        learning_rate: 0.02,
        optimizer: Optimizer::adam(),
        ..TrainConfig::default()
    }
}

#[test]
fn bce_reference_values() {
    assert!((bce_loss(&[0.5; 4], &[0, 1, 1, 0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
    assert!(bce_loss(&[1.0, 0.0], &[1, 0]).unwrap() <= 1e-11);
    let expected = -0.5 * (0.8f64.ln() + 0.7f64.ln());
    assert!((bce_loss(&[0.8, 0.3], &[1, 0]).unwrap() - expected).abs() < 1e-15);
    assert!(matches!(
        bce_loss(&[0.5], &[1, 0]),
        Err(Error::LengthMismatch { .. })
    ));
}

#[test]
fn constant_feature_learns_the_base_rate() {
    let data = synthetic::constant_feature(400);
    let trained = train_nam(
        &data,
        &ConstraintSet::empty(),
        &TrainConfig::default(),
        0.0,
        0.0,
    )
    .unwrap();
    let p = probabilities(&trained.model, &data);
    let mean = p.iter().sum::<f64>() / p.len() as f64;
    assert!(
        (0.45..=0.55).contains(&mean),
        "mean predicted probability {mean}"
    );
}

#[test]
fn separable_data_is_ranked_perfectly() {
    let data = synthetic::separable(2000, 4);
    // The generator leaves a gap around 0.5, so a threshold separates the sample.
    let max_neg = (0..data.n_rows())
        .filter(|&i| data.labels()[i] == 0)
        .map(|i| data.value(i, 0))
        .fold(0.0, f64::max);
    let min_pos = (0..data.n_rows())
        .filter(|&i| data.labels()[i] == 1)
        .map(|i| data.value(i, 0))
        .fold(1.0, f64::min);
    assert!(max_neg < min_pos);
    let (train, test) = split(&data, 0.75, 4).unwrap();
    let trained = train_nam(&train, &ConstraintSet::empty(), &adam(100), 0.0, 0.0).unwrap();
    let a = auc(&scores(&trained.model, &test), test.labels()).unwrap();
    assert!(a >= 0.99, "test AUC {a}");
}

#[test]
fn full_batch_loss_is_non_increasing_at_small_learning_rate() {
    let data = synthetic::monotone_logistic(100, 8);
    let cfg = TrainConfig {
        epochs: 200,
        batch_size: 100,
        learning_rate: 1e-3,
        ..TrainConfig::default()
    };
    let trained = train_nam(&data, &ConstraintSet::empty(), &cfg, 0.0, 0.0).unwrap();
    for (e, w) in trained.epoch_losses.windows(2).enumerate() {
        assert!(
            w[1] <= w[0],
            "loss rose at epoch {}: {} -> {}",
            e + 1,
            w[0],
            w[1]
        );
    }
}

#[test]
fn monotone_task_certifies_without_escalation() {
    let data = synthetic::monotone_logistic(1500, 2);
    let (train, test) = split(&data, 0.75, 2).unwrap();
    let cs = ConstraintSet::new(vec![0], vec![]).unwrap();
    let run = certified_train(&train, Some(&test), &cs, &adam(60)).unwrap();
    assert_eq!(run.trace.len(), 1);
    assert_eq!((run.trace[0].lambda, run.trace[0].eta), (0.0, 0.0));
    assert!(run.report.pass);
}

#[test]
fn sine_task_escalates_until_certified() {
    let data = synthetic::sine(3000, 11);
    let (train, test) = split(&data, 0.75, 11).unwrap();
    let cs = ConstraintSet::new(vec![0], vec![]).unwrap();
    let cfg = adam(40);
    let unconstrained = train_nam(&train, &ConstraintSet::empty(), &cfg, 0.0, 0.0).unwrap();
    assert!(
        !certify(&unconstrained.model, &cs, &cfg.certification)
            .unwrap()
            .pass
    );

    let run = certified_train(&train, Some(&test), &cs, &cfg).unwrap();
    assert!(run.report.pass);
    let last = run.trace.last().unwrap();
    assert!(last.lambda > 0.0);
    assert!(run.trace.len() <= cfg.max_rounds + 1);
    for w in run.trace.windows(2) {
        assert!(w[1].lambda >= w[0].lambda && w[1].eta >= w[0].eta);
    }
    assert_eq!(
        penalty_h1(&run.model, &cs, &cfg.certification, 0.0).unwrap(),
        0.0
    );
    assert!(run.trace.iter().all(|r| r.test_auc.is_some()));
}

#[test]
fn exhausted_rounds_return_the_trace() {
    let data = synthetic::sine(1000, 12);
    let cs = ConstraintSet::new(vec![0], vec![]).unwrap();
    let cfg = TrainConfig {
        max_rounds: 1,
        multiplier_start: 1e-9,
        ..adam(5)
    };
    match certified_train(&data, None, &cs, &cfg) {
        Err(Error::CertificationFailed(f)) => {
            assert_eq!(f.trace.len(), 2);
            assert!(!f.report.pass);
            assert!(f.to_string().contains("certification failed"));
        }
        other => panic!("expected a certification failure, got {other:?}"),
    }
}

#[test]
fn dominance_pair_is_enforced() {
    let data = synthetic::reversed_dominance(3000, 5);
    let cs = ConstraintSet::new(vec![0, 1, 2], vec![(0, 1)]).unwrap();
    let cfg = adam(40);
    let run = certified_train(&data, None, &cs, &cfg).unwrap();
    assert!(run.report.pass);
    assert!(run.trace.last().unwrap().eta > 0.0);
    let cert = PenaltyConfig {
        grid_size: 4096,
        ..PenaltyConfig::certification()
    };
    for check in certify(&run.model, &cs, &cert).unwrap().pairwise {
        assert!(check.min_gap >= -1e-8, "{check:?}");
    }
}

#[test]
fn training_is_deterministic_across_execution_modes() {
    let data = synthetic::sine_with_driver(700, 3);
    let cs = ConstraintSet::new(vec![0, 1], vec![]).unwrap();
    let mut cfg = adam(8);
    cfg.execution = Execution::Sequential;
    let a = certified_train(&data, None, &cs, &cfg).unwrap();
    cfg.execution = Execution::Parallel;
    let b = certified_train(&data, None, &cs, &cfg).unwrap();
    let c = certified_train(&data, None, &cs, &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(b.model, c.model);
    assert_eq!(a.trace, b.trace);
    let bits = |m: &mnam::NamModel| {
        mnam::Trainable::params(m)
            .iter()
            .map(|v| v.to_bits())
            .collect::<Vec<_>>()
    };
    assert_eq!(bits(&a.model), bits(&c.model));
}

#[test]
fn seeds_change_the_result() {
    let data = synthetic::monotone_logistic(300, 1);
    let cfg = adam(3);
    let a = train_nam(&data, &ConstraintSet::empty(), &cfg, 0.0, 0.0).unwrap();
    let b = train_nam(
        &data,
        &ConstraintSet::empty(),
        &TrainConfig { seed: 1, ..cfg },
        0.0,
        0.0,
    )
    .unwrap();
    assert_ne!(a.model, b.model);
    let _ = rng(0);
}
