use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::ToyConfig;
use crate::model::{Eval, Intervention, ToyModel};
use crate::optim::AdamW;
use crate::params::Params;
use crate::tasks::{Dataset, Example};
use phid_core::{par, Error, Result};

/// Offset between the initialisation stream and the batch-order stream.
const ORDER_STREAM: u64 = 0x6f72_6465_72;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Optimizer steps completed at the end of the epoch.
    pub step: usize,
    pub lr: f64,
    /// Running means over the epoch's batches, measured before each update.
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub holdout_loss: Option<f64>,
    pub holdout_accuracy: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub curve: Vec<EpochRecord>,
    pub steps: usize,
    pub stopped_early: bool,
    pub train: Eval,
    pub holdout: Option<Eval>,
}

/// Train a fresh model on the configured task.
pub fn train(config: ToyConfig) -> Result<(ToyModel, Dataset, TrainReport)> {
    let model = ToyModel::new(config)?;
    let cfg = &model.config;
    let data = cfg.task.dataset(cfg.train.train_fraction, cfg.seed);
    let (model, report) = train_model(model, &data)?;
    Ok((model, data, report))
}

/// Shard the batch, sum gradients in shard order, return the mean gradient.
fn batch_gradient(model: &ToyModel, batch: &[Example], shards: usize) -> Result<(f64, usize, Params)> {
    let size = batch.len().div_ceil(shards.min(batch.len()));
    let pieces: Vec<&[Example]> = batch.chunks(size).collect();
    let mut total: Option<(f64, usize, Params)> = None;
    for part in par::map(&pieces, |p| model.loss_and_grad(p)) {
        let (l, c, g) = part?;
        total = Some(match total {
            None => (l, c, g),
            Some((tl, tc, mut tg)) => {
                tg.add_assign(&g);
                (tl + l, tc + c, tg)
            }
        });
    }
    let (loss, correct, mut grads) = total.expect("non-empty batch");
    grads.scale(1.0 / batch.len() as f64);
    Ok((loss, correct, grads))
}

pub fn train_model(mut model: ToyModel, data: &Dataset) -> Result<(ToyModel, TrainReport)> {
    let tc = model.config.train.clone();
    if data.train.is_empty() {
        return Err(Error::Validation("empty training set".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.config.seed ^ ORDER_STREAM);
    let mut opt = AdamW::new(&model.params);
    let mut order: Vec<usize> = (0..data.train.len()).collect();
    let mut curve = Vec::new();
    let mut step = 0;
    let mut stopped_early = false;
    let mut last_finite = f64::NAN;
    while step < tc.steps {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut correct, mut seen) = (0.0, 0, 0);
        let mut lr = 0.0;
        for idx in order.chunks(tc.batch_size) {
            if step >= tc.steps {
                break;
            }
            let batch: Vec<Example> = idx.iter().map(|&i| data.train[i].clone()).collect();
            let (loss, c, grads) = batch_gradient(&model, &batch, tc.shards)?;
            if !loss.is_finite() || !grads.is_finite() {
                return Err(Error::Numerical(format!(
                    "training diverged at step {step}: batch loss {loss}, last finite mean loss {last_finite}, lr {lr}"
                )));
            }
            last_finite = loss / batch.len() as f64;
            lr = opt.update(&mut model.params, &grads, &tc);
            step += 1;
            loss_sum += loss;
            correct += c;
            seen += batch.len();
        }
        if seen == 0 {
            break;
        }
        let epoch = curve.len() + 1;
        let train_accuracy = correct as f64 / seen as f64;
        let holdout = if epoch % tc.eval_every == 0 && !data.holdout.is_empty() {
            Some(model.evaluate(&data.holdout, &Intervention::None)?)
        } else {
            None
        };
        log::info!(
            "epoch {epoch} step {step} loss {:.4} acc {:.4}{}",
            loss_sum / seen as f64,
            train_accuracy,
            holdout.map_or(String::new(), |h| format!(" holdout acc {:.4}", h.accuracy))
        );
        curve.push(EpochRecord {
            epoch,
            step,
            lr,
            train_loss: loss_sum / seen as f64,
            train_accuracy,
            holdout_loss: holdout.map(|h| h.loss),
            holdout_accuracy: holdout.map(|h| h.accuracy),
        });
        if train_accuracy >= tc.target_accuracy {
            stopped_early = true;
            break;
        }
    }
    let train = model.evaluate(&data.train, &Intervention::None)?;
    let holdout = if data.holdout.is_empty() {
        None
    } else {
        Some(model.evaluate(&data.holdout, &Intervention::None)?)
    };
    Ok((
        model,
        TrainReport {
            curve,
            steps: step,
            stopped_early,
            train,
            holdout,
        },
    ))
}
