use serde::{Deserialize, Serialize};

use crate::tasks::TaskSpec;
use phid_core::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToyConfig {
    pub layers: usize,
    pub heads: usize,
    pub d_model: usize,
    pub d_mlp: usize,
    pub seed: u64,
    pub task: TaskSpec,
    #[serde(default)]
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Maximum optimizer steps.
    pub steps: usize,
    pub batch_size: usize,
    pub lr: f64,
    /// Linear warmup length in steps.
    pub warmup: usize,
    pub weight_decay: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    /// Share of the task's examples used for training; the rest is holdout.
    pub train_fraction: f64,
    /// Stop once an epoch's training accuracy reaches this.
    pub target_accuracy: f64,
    /// Holdout evaluation interval in epochs.
    pub eval_every: usize,
    /// Gradient shards per batch, summed in a fixed order.
    pub shards: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 50_000,
            batch_size: 256,
            lr: 1e-3,
            warmup: 1000,
            weight_decay: 0.1,
            beta1: 0.9,
            beta2: 0.98,
            eps: 1e-8,
            train_fraction: 0.5,
            target_accuracy: 0.995,
            eval_every: 5,
            shards: 4,
        }
    }
}

impl ToyConfig {
    /// Modular addition mod 97 with four layers of four heads.
    pub fn modular_addition() -> Self {
        Self {
            layers: 4,
            heads: 4,
            d_model: 128,
            d_mlp: 512,
            seed: 0,
            task: TaskSpec::ModAdd { p: 97 },
            train: TrainConfig::default(),
        }
    }

    pub fn d_head(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn vocab(&self) -> usize {
        self.task.vocab()
    }

    pub fn max_seq(&self) -> usize {
        self.task.seq_len()
    }

    pub fn total_heads(&self) -> usize {
        self.layers * self.heads
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers == 0 || self.heads == 0 || self.d_model == 0 || self.d_mlp == 0 {
            return Err(Error::Validation("model dimensions must be positive".into()));
        }
        if self.d_model % self.heads != 0 {
            return Err(Error::Validation(format!(
                "d_model {} is not a multiple of {} heads",
                self.d_model, self.heads
            )));
        }
        self.task.validate()?;
        let t = &self.train;
        if t.batch_size == 0 || t.shards == 0 || t.eval_every == 0 {
            return Err(Error::Validation("batch_size, shards and eval_every must be positive".into()));
        }
        if !(t.train_fraction > 0.0 && t.train_fraction <= 1.0) {
            return Err(Error::Validation(format!("train_fraction {} outside (0, 1]", t.train_fraction)));
        }
        if !(t.lr > 0.0) || !(0.0..1.0).contains(&t.beta1) || !(0.0..1.0).contains(&t.beta2) || !(t.eps > 0.0) {
            return Err(Error::Validation("invalid optimizer hyperparameters".into()));
        }
        if t.weight_decay < 0.0 {
            return Err(Error::Validation("weight_decay must be non-negative".into()));
        }
        Ok(())
    }
}
