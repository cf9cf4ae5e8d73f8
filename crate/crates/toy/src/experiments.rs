//! Residual-stream measurements and intervention experiments.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Intervention, ToyModel};
use crate::tasks::Example;
use phid_core::headscore::HeadScoreTable;
use phid_core::traces::ResidualTrace;
use phid_core::{Error, Result};

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `None` when either vector has zero norm.
pub fn cosine(x: &[f64], y: &[f64]) -> Option<f64> {
    let (nx, ny) = (norm(x), norm(y));
    if nx == 0.0 || ny == 0.0 {
        return None;
    }
    Some(x.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / (nx * ny))
}

/// Mean of the defined values and the number of undefined ones.
fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, usize) {
    let (mut sum, mut n, mut skipped) = (0.0, 0usize, 0usize);
    for v in values {
        match v {
            Some(x) => {
                sum += x;
                n += 1;
            }
            None => skipped += 1,
        }
    }
    ((n > 0).then(|| sum / n as f64), skipped)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCosine {
    pub layer: usize,
    /// Mean `cos(a_l, h_l)`.
    pub attention: Option<f64>,
    /// Mean `cos(m_l, ĥ_l)` with `ĥ_l = h_l + a_l`.
    pub mlp: Option<f64>,
    /// Mean `cos(h_{l+1} − h_l, h_l)`.
    pub layer_total: Option<f64>,
    /// Steps skipped for a zero-norm vector, per column.
    pub skipped: [usize; 3],
}

/// Per-layer mean cosine between each sub-layer's write and the stream it reads.
pub fn cosine_contributions(rt: &ResidualTrace) -> Vec<LayerCosine> {
    (0..rt.layers())
        .map(|l| {
            let steps = 0..rt.steps();
            let (attention, s0) = mean_defined(steps.clone().map(|t| cosine(rt.a(t, l), rt.h(t, l))));
            let (mlp, s1) = mean_defined(steps.clone().map(|t| {
                let hhat: Vec<f64> = rt.h(t, l).iter().zip(rt.a(t, l)).map(|(h, a)| h + a).collect();
                cosine(rt.m(t, l), &hhat)
            }));
            let (layer_total, s2) = mean_defined(steps.map(|t| {
                let delta: Vec<f64> = rt.h(t, l + 1).iter().zip(rt.h(t, l)).map(|(n, h)| n - h).collect();
                cosine(&delta, rt.h(t, l))
            }));
            LayerCosine {
                layer: l,
                attention,
                mlp,
                layer_total,
                skipped: [s0, s1, s2],
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerEnergy {
    /// `l` in `1..=L`, comparing `h_l` with `h_{l−1}`.
    pub layer: usize,
    pub energy: Option<f64>,
    /// Steps with a zero-norm predecessor.
    pub skipped: usize,
}

/// `E = ‖x_l‖/‖x_{l−1}‖ · (1 − cos(x_l, x_{l−1}))` with `x_l = h_l`, averaged over steps.
pub fn energy(x: &[f64], prev: &[f64]) -> Option<f64> {
    let (n, np) = (norm(x), norm(prev));
    if np == 0.0 {
        return None;
    }
    if n == 0.0 {
        return Some(0.0);
    }
    let cos = x.iter().zip(prev).map(|(a, b)| a * b).sum::<f64>() / (n * np);
    Some(n / np * (1.0 - cos))
}

pub fn energy_profile(rt: &ResidualTrace) -> Vec<LayerEnergy> {
    (1..=rt.layers())
        .map(|l| {
            let (energy, skipped) = mean_defined((0..rt.steps()).map(|t| energy(rt.h(t, l), rt.h(t, l - 1))));
            LayerEnergy { layer: l, energy, skipped }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkipReport {
    pub skipped_layer: usize,
    /// Indexed by layer `l`; defined only for `l > s` with a non-zero contribution.
    pub disturbance: Vec<Option<f64>>,
    /// Steps skipped per layer because `h_{l+1} − h_l = 0` in the full run.
    pub undefined_steps: Vec<usize>,
}

impl SkipReport {
    /// Mean over the defined downstream layers.
    pub fn mean(&self) -> Option<f64> {
        mean_defined(self.disturbance.iter().copied().filter(Option::is_some)).0
    }
}

/// `‖Δ_l − Δ̄_l‖ / ‖Δ_l‖` with `Δ_l = h_{l+1} − h_l` from the full run and
/// `Δ̄_l` from the run skipping layer `s`, averaged over positions, for `l > s`.
pub fn skip_disturbance(model: &ToyModel, tokens: &[Vec<usize>], s: usize) -> Result<SkipReport> {
    let layers = model.config.layers;
    if s >= layers {
        return Err(Error::Validation(format!("skip layer {s} outside {layers} layers")));
    }
    let full = model.forward(tokens, &Intervention::None)?.residual;
    let cut = model.forward(tokens, &Intervention::SkipLayer { layer: s })?.residual;
    let mut disturbance = vec![None; layers];
    let mut undefined_steps = vec![0; layers];
    for l in s + 1..layers {
        let (mean, skipped) = mean_defined((0..full.steps()).map(|t| {
            let mut num = 0.0;
            let mut den = 0.0;
            for j in 0..full.d_model() {
                let d = full.h(t, l + 1)[j] - full.h(t, l)[j];
                let db = cut.h(t, l + 1)[j] - cut.h(t, l)[j];
                num += (d - db) * (d - db);
                den += d * d;
            }
            (den > 0.0).then(|| (num / den).sqrt())
        }));
        disturbance[l] = mean;
        undefined_steps[l] = skipped;
    }
    Ok(SkipReport {
        skipped_layer: s,
        disturbance,
        undefined_steps,
    })
}

/// Order in which heads are cumulatively ablated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AblationOrder {
    /// Largest `abstract − memory` first.
    AbsFirst,
    MemFirst,
    Random { seed: u64 },
}

impl AblationOrder {
    pub fn heads(&self, scores: &HeadScoreTable) -> Vec<usize> {
        match *self {
            AblationOrder::AbsFirst => scores.ranked(),
            AblationOrder::MemFirst => scores.ranked().into_iter().rev().collect(),
            AblationOrder::Random { seed } => {
                let mut h: Vec<usize> = (0..scores.heads()).collect();
                h.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
                h
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            AblationOrder::AbsFirst => "abs_first".into(),
            AblationOrder::MemFirst => "mem_first".into(),
            AblationOrder::Random { seed } => format!("random:{seed}"),
        }
    }
}

impl std::str::FromStr for AblationOrder {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "abs_first" => Ok(AblationOrder::AbsFirst),
            "mem_first" => Ok(AblationOrder::MemFirst),
            _ => s
                .strip_prefix("random:")
                .and_then(|x| x.parse().ok())
                .map(|seed| AblationOrder::Random { seed })
                .ok_or_else(|| format!("unknown ablation order {s:?} (abs_first, mem_first, random:<seed>)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationPoint {
    pub k: usize,
    pub heads: Vec<usize>,
    pub loss: f64,
    pub accuracy: f64,
    /// Loss relative to the unablated model.
    pub loss_ratio: f64,
}

/// Zero the first `k` heads of `order` for each `k` and evaluate on `eval`.
pub fn ablate_and_eval(
    model: &ToyModel,
    scores: &HeadScoreTable,
    order: AblationOrder,
    ks: &[usize],
    eval: &[Example],
) -> Result<Vec<AblationPoint>> {
    let n = model.config.total_heads();
    if scores.heads() != n || scores.heads_per_layer() != model.config.heads {
        return Err(Error::Validation(format!(
            "scores cover {} heads, model has {n}",
            scores.heads()
        )));
    }
    if let Some(&k) = ks.iter().find(|&&k| k > n) {
        return Err(Error::Validation(format!("cannot ablate {k} of {n} heads")));
    }
    let heads = order.heads(scores);
    let base = model.evaluate(eval, &Intervention::None)?;
    ks.iter()
        .map(|&k| {
            let chosen = heads[..k].to_vec();
            let e = model.evaluate(eval, &Intervention::AblateHeads { heads: chosen.clone() })?;
            Ok(AblationPoint {
                k,
                heads: chosen,
                loss: e.loss,
                accuracy: e.accuracy,
                loss_ratio: e.loss / base.loss,
            })
        })
        .collect()
}
