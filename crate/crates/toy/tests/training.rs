use phid_toy::train::train_model;
use phid_toy::{train, Intervention, TaskSpec, ToyConfig, ToyModel, TrainConfig};

fn config(task: TaskSpec, layers: usize, steps: usize) -> ToyConfig {
    ToyConfig {
        layers,
        heads: 2,
        d_model: 32,
        d_mlp: 64,
        seed: 5,
        task,
        train: TrainConfig {
            steps,
            batch_size: 64,
            warmup: 20,
            train_fraction: 0.8,
            eval_every: 2,
            ..TrainConfig::default()
        },
    }
}

#[test]
fn identical_seeds_give_identical_curves() {
    let cfg = config(TaskSpec::ModAdd { p: 11 }, 2, 30);
    let (m1, _, r1) = train(cfg.clone()).unwrap();
    let (m2, _, r2) = train(cfg.clone()).unwrap();
    assert_eq!(r1, r2);
    assert_eq!(m1.params, m2.params);
    let mut other = cfg;
    other.seed += 1;
    assert_ne!(train(other).unwrap().2.curve, r1.curve);
}

#[test]
fn one_layer_model_learns_the_copy_task() {
    let mut cfg = config(TaskSpec::Copy { vocab: 16, len: 6, examples: 2048 }, 1, 5_000);
    cfg.train.target_accuracy = 0.995;
    let (model, data, report) = train(cfg).unwrap();
    assert!(report.steps <= 5_000);
    assert!(report.train.accuracy >= 0.99, "{:?}", report.train);
    let holdout = model.evaluate(&data.holdout, &Intervention::None).unwrap();
    assert!(holdout.accuracy >= 0.99, "{holdout:?}");
}

#[test]
fn zero_budget_returns_the_initial_model_at_chance() {
    let cfg = config(TaskSpec::ModAdd { p: 97 }, 2, 0);
    let (model, data, report) = train(cfg.clone()).unwrap();
    assert_eq!(report.steps, 0);
    assert_eq!(model.params, ToyModel::new(cfg).unwrap().params);
    let all: Vec<_> = data.train.iter().chain(&data.holdout).cloned().collect();
    let acc = model.evaluate(&all, &Intervention::None).unwrap().accuracy;
    assert!(acc < 3.0 / 97.0, "accuracy {acc}");
}

#[test]
fn training_continues_from_a_given_model() {
    let cfg = config(TaskSpec::ModAdd { p: 7 }, 1, 10);
    let data = cfg.task.dataset(cfg.train.train_fraction, cfg.seed);
    let start = ToyModel::new(cfg.clone()).unwrap();
    let (trained, report) = train_model(start.clone(), &data).unwrap();
    assert_eq!(report.steps, 10);
    assert_ne!(trained.params, start.params);
    assert!(report.curve.windows(2).all(|w| w[0].step < w[1].step));
}

#[test]
fn empty_training_split_is_rejected() {
    let cfg = config(TaskSpec::ModAdd { p: 7 }, 1, 10);
    let mut data = cfg.task.dataset(cfg.train.train_fraction, cfg.seed);
    data.train.clear();
    assert!(train_model(ToyModel::new(cfg).unwrap(), &data).is_err());
}
