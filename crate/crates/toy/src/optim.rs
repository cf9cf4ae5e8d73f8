//! Adaptive-moment optimizer with decoupled weight decay.

use crate::config::TrainConfig;
use crate::params::Params;

#[derive(Debug, Clone)]
pub struct AdamW {
    m: Params,
    v: Params,
    decay: Vec<bool>,
    step: usize,
}

impl AdamW {
    pub fn new(params: &Params) -> Self {
        Self {
            m: params.zeros_like(),
            v: params.zeros_like(),
            decay: params.infos().into_iter().map(|i| i.decay).collect(),
            step: 0,
        }
    }

    pub fn steps_taken(&self) -> usize {
        self.step
    }

    /// Linear warmup to `cfg.lr` over `cfg.warmup` steps, then constant.
    pub fn learning_rate(cfg: &TrainConfig, step: usize) -> f64 {
        if cfg.warmup == 0 {
            cfg.lr
        } else {
            cfg.lr * (step as f64 / cfg.warmup as f64).min(1.0)
        }
    }

    /// One update with the gradient of the mean loss; returns the rate used.
    pub fn update(&mut self, params: &mut Params, grads: &Params, cfg: &TrainConfig) -> f64 {
        self.step += 1;
        let lr = Self::learning_rate(cfg, self.step);
        let bc1 = 1.0 - cfg.beta1.powi(self.step as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.step as i32);
        let tensors = params
            .slices_mut()
            .into_iter()
            .zip(grads.slices())
            .zip(self.m.slices_mut())
            .zip(self.v.slices_mut())
            .zip(&self.decay);
        for ((((w, g), m), v), &decay) in tensors {
            for i in 0..w.len() {
                m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
                v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
                let update = (m[i] / bc1) / ((v[i] / bc2).sqrt() + cfg.eps);
                if decay {
                    w[i] -= lr * cfg.weight_decay * w[i];
                }
                w[i] -= lr * update;
            }
        }
        lr
    }
}
