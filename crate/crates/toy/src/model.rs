use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backward;
use crate::config::ToyConfig;
use crate::params::{LayerParams, Params};
use crate::tasks::Example;
use phid_core::traces::{ResidualTrace, TraceTensor};
use phid_core::{par, Error, Result};

pub const NORM_EPS: f64 = 1e-6;
/// Examples per chunk in batched evaluation.
pub const EVAL_CHUNK: usize = 512;

const GELU_C: f64 = 0.797_884_560_802_865_4;
const GELU_K: f64 = 0.044_715;

pub(crate) fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_K * x * x * x)).tanh())
}

pub(crate) fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_K * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_K * x * x)
}

/// `y = g ⊙ x / r` with `r = √(mean(x²) + ε)` per row.
pub(crate) fn rms_norm(x: &Array2<f64>, gain: &Array1<f64>) -> (Array2<f64>, Vec<f64>) {
    let d = x.ncols() as f64;
    let mut y = x.clone();
    let mut rs = Vec::with_capacity(x.nrows());
    for mut row in y.axis_iter_mut(Axis(0)) {
        let r = (row.iter().map(|v| v * v).sum::<f64>() / d + NORM_EPS).sqrt();
        row.iter_mut().zip(gain).for_each(|(v, g)| *v = *v / r * g);
        rs.push(r);
    }
    (y, rs)
}

/// What to change in a forward pass.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Intervention {
    #[default]
    None,
    /// Layer `s` contributes nothing: `a_s = m_s = 0`.
    SkipLayer { layer: usize },
    /// Listed heads have their pre-projection output zeroed.
    AblateHeads { heads: Vec<usize> },
}

pub(crate) struct LayerCache {
    pub h: Array2<f64>,
    pub r1: Vec<f64>,
    pub n1: Array2<f64>,
    pub q: Array2<f64>,
    pub k: Array2<f64>,
    pub v: Array2<f64>,
    /// `[B, H, T, T]`, causal rows.
    pub probs: Vec<f64>,
    pub z: Array2<f64>,
    pub a: Array2<f64>,
    pub hhat: Array2<f64>,
    pub r2: Vec<f64>,
    pub n2: Array2<f64>,
    pub u: Array2<f64>,
    pub g: Array2<f64>,
    pub m: Array2<f64>,
    pub skipped: bool,
    pub ablated: Vec<bool>,
}

pub(crate) struct Cache {
    pub batch: usize,
    pub seq: usize,
    pub layers: Vec<LayerCache>,
    pub h_final: Array2<f64>,
    pub rf: Vec<f64>,
    pub nf: Array2<f64>,
    pub logits: Array2<f64>,
    /// Flat token ids, absent when the embedding was supplied directly.
    pub tokens: Option<Vec<usize>>,
}

/// Full capture of one forward pass over a batch of equal-length sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct Capture {
    /// Logits at the last position of every sequence, `[B, V]`.
    pub logits: Array2<f64>,
    /// Every position is a step; a boundary starts each sequence.
    pub residual: ResidualTrace,
    /// `‖z_h‖` per position and head, heads ordered layer-major.
    pub heads: TraceTensor,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eval {
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToyModel {
    pub config: ToyConfig,
    pub params: Params,
}

impl ToyModel {
    /// Freshly initialised from `config.seed`.
    pub fn new(config: ToyConfig) -> Result<Self> {
        config.validate()?;
        let params = Params::init(&config, &mut ChaCha8Rng::seed_from_u64(config.seed));
        Ok(Self { config, params })
    }

    pub fn from_params(config: ToyConfig, params: Params) -> Result<Self> {
        config.validate()?;
        let want = Params::init(&config, &mut ChaCha8Rng::seed_from_u64(0)).infos();
        if params.infos() != want {
            return Err(Error::Validation("parameter shapes do not match the config".into()));
        }
        if !params.is_finite() {
            return Err(Error::Numerical("non-finite model weights".into()));
        }
        Ok(Self { config, params })
    }

    pub(crate) fn check_tokens(&self, tokens: &[Vec<usize>]) -> Result<usize> {
        let t = tokens.first().map_or(0, Vec::len);
        if tokens.is_empty() || t == 0 {
            return Err(Error::Validation("empty batch".into()));
        }
        if t > self.config.max_seq() {
            return Err(Error::Validation(format!(
                "sequence length {t} exceeds the model maximum {}",
                self.config.max_seq()
            )));
        }
        let v = self.config.vocab();
        for seq in tokens {
            if seq.len() != t {
                return Err(Error::Validation("sequences in a batch must share a length".into()));
            }
            if let Some(&bad) = seq.iter().find(|&&x| x >= v) {
                return Err(Error::Validation(format!("token {bad} outside vocabulary of {v}")));
            }
        }
        Ok(t)
    }

    pub(crate) fn check_intervention(&self, iv: &Intervention) -> Result<()> {
        match iv {
            Intervention::None => Ok(()),
            Intervention::SkipLayer { layer } if *layer >= self.config.layers => Err(Error::Validation(
                format!("skip layer {layer} outside {} layers", self.config.layers),
            )),
            Intervention::AblateHeads { heads } => match heads.iter().find(|&&h| h >= self.config.total_heads()) {
                Some(h) => Err(Error::Validation(format!(
                    "head {h} outside {} heads",
                    self.config.total_heads()
                ))),
                None => Ok(()),
            },
            _ => Ok(()),
        }
    }

    /// Gathered token embeddings, `[B·T, d]`.
    pub(crate) fn embed(&self, tokens: &[Vec<usize>]) -> Array2<f64> {
        let d = self.config.d_model;
        let t = tokens[0].len();
        let mut x = Array2::zeros((tokens.len() * t, d));
        for (row, &tok) in tokens.iter().flatten().enumerate() {
            x.row_mut(row).assign(&self.params.tok_emb.row(tok));
        }
        x
    }

    /// Forward pass from token embeddings `x_tok` (`[B·T, d]`); positional
    /// embeddings are always added.
    pub(crate) fn run(
        &self,
        x_tok: Array2<f64>,
        batch: usize,
        seq: usize,
        iv: &Intervention,
        tokens: Option<Vec<usize>>,
    ) -> Cache {
        let cfg = &self.config;
        let p = &self.params;
        let mut h = x_tok;
        for (row, mut r) in h.axis_iter_mut(Axis(0)).enumerate() {
            r += &p.pos_emb.row(row % seq);
        }
        let mut ablated = vec![false; cfg.total_heads()];
        if let Intervention::AblateHeads { heads } = iv {
            heads.iter().for_each(|&x| ablated[x] = true);
        }
        let mut layers = Vec::with_capacity(cfg.layers);
        for (l, lp) in p.layers.iter().enumerate() {
            let skipped = matches!(iv, Intervention::SkipLayer { layer } if *layer == l);
            let abl = ablated[l * cfg.heads..(l + 1) * cfg.heads].to_vec();
            let cache = layer_forward(cfg, lp, h, batch, seq, skipped, abl);
            h = &cache.hhat + &cache.m;
            layers.push(cache);
        }
        let (nf, rf) = rms_norm(&h, &p.final_norm);
        let logits = nf.dot(&p.w_out);
        Cache {
            batch,
            seq,
            layers,
            h_final: h,
            rf,
            nf,
            logits,
            tokens,
        }
    }

    pub(crate) fn run_tokens(&self, tokens: &[Vec<usize>], iv: &Intervention) -> Result<Cache> {
        let t = self.check_tokens(tokens)?;
        self.check_intervention(iv)?;
        let flat = tokens.iter().flatten().copied().collect();
        Ok(self.run(self.embed(tokens), tokens.len(), t, iv, Some(flat)))
    }

    /// Logits at the last position of each sequence, `[B, V]`.
    pub fn logits(&self, tokens: &[Vec<usize>], iv: &Intervention) -> Result<Array2<f64>> {
        let c = self.run_tokens(tokens, iv)?;
        Ok(last_rows(&c.logits, c.batch, c.seq))
    }

    /// Logits with residual and head-norm captures.
    pub fn forward(&self, tokens: &[Vec<usize>], iv: &Intervention) -> Result<Capture> {
        let c = self.run_tokens(tokens, iv)?;
        let cfg = &self.config;
        let (rows, d, l_count) = (c.batch * c.seq, cfg.d_model, cfg.layers);
        let mut h = Vec::with_capacity(rows * (l_count + 1) * d);
        let mut a = Vec::with_capacity(rows * l_count * d);
        let mut m = Vec::with_capacity(rows * l_count * d);
        let mut norms = Vec::with_capacity(rows * cfg.total_heads());
        let dh = cfg.d_head();
        for r in 0..rows {
            for lc in &c.layers {
                h.extend(lc.h.row(r).iter());
                a.extend(lc.a.row(r).iter());
                m.extend(lc.m.row(r).iter());
            }
            h.extend(c.h_final.row(r).iter());
            for lc in &c.layers {
                let z = lc.z.row(r);
                for head in 0..cfg.heads {
                    let zs = z.slice(s![head * dh..(head + 1) * dh]);
                    norms.push(zs.dot(&zs).sqrt());
                }
            }
        }
        let boundaries: Vec<usize> = (0..c.batch).map(|b| b * c.seq).collect();
        let model_id = format!("toy-L{}H{}d{}-seed{}", cfg.layers, cfg.heads, cfg.d_model, cfg.seed);
        let label = cfg.task.label();
        let residual =
            ResidualTrace::new(rows, l_count, d, h, a, m, &model_id, &label, boundaries.clone())?;
        let heads = TraceTensor::with_boundaries(norms, rows, l_count, cfg.heads, model_id, label, boundaries)?;
        Ok(Capture {
            logits: last_rows(&c.logits, c.batch, c.seq),
            residual,
            heads,
        })
    }

    /// Mean cross-entropy and accuracy of the last-position prediction.
    pub fn evaluate(&self, examples: &[Example], iv: &Intervention) -> Result<Eval> {
        if examples.is_empty() {
            return Err(Error::Validation("no examples to evaluate".into()));
        }
        let chunks: Vec<&[Example]> = examples.chunks(EVAL_CHUNK).collect();
        let parts = par::map(&chunks, |chunk| -> Result<(f64, usize)> {
            let tokens: Vec<Vec<usize>> = chunk.iter().map(|e| e.tokens.clone()).collect();
            let logits = self.logits(&tokens, iv)?;
            let targets: Vec<usize> = chunk.iter().map(|e| e.target).collect();
            let (loss, correct, _) = cross_entropy(&logits, &targets);
            Ok((loss, correct))
        });
        let mut loss = 0.0;
        let mut correct = 0;
        for p in parts {
            let (l, c) = p?;
            loss += l;
            correct += c;
        }
        let n = examples.len() as f64;
        Ok(Eval {
            loss: loss / n,
            accuracy: correct as f64 / n,
        })
    }

    /// Summed loss, correct count and gradient of the summed loss.
    pub fn loss_and_grad(&self, examples: &[Example]) -> Result<(f64, usize, Params)> {
        let tokens: Vec<Vec<usize>> = examples.iter().map(|e| e.tokens.clone()).collect();
        let cache = self.run_tokens(&tokens, &Intervention::None)?;
        let targets: Vec<usize> = examples.iter().map(|e| e.target).collect();
        let last = last_rows(&cache.logits, cache.batch, cache.seq);
        let (loss, correct, dlast) = cross_entropy(&last, &targets);
        let mut dlogits = Array2::zeros(cache.logits.raw_dim());
        for b in 0..cache.batch {
            dlogits.row_mut(b * cache.seq + cache.seq - 1).assign(&dlast.row(b));
        }
        let (grads, _) = backward::backward(self, &cache, &dlogits);
        Ok((loss, correct, grads))
    }
}

pub(crate) fn last_rows(x: &Array2<f64>, batch: usize, seq: usize) -> Array2<f64> {
    let idx: Vec<usize> = (0..batch).map(|b| b * seq + seq - 1).collect();
    x.select(Axis(0), &idx)
}

/// Summed cross-entropy, correct count (ties to the lower class) and
/// gradient of the summed loss with respect to the logits.
pub(crate) fn cross_entropy(logits: &Array2<f64>, targets: &[usize]) -> (f64, usize, Array2<f64>) {
    let mut grad = Array2::zeros(logits.raw_dim());
    let mut loss = 0.0;
    let mut correct = 0;
    for ((row, mut g), &y) in logits.axis_iter(Axis(0)).zip(grad.axis_iter_mut(Axis(0))).zip(targets) {
        let (lse, argmax) = log_sum_exp(row);
        loss += lse - row[y];
        if argmax == y {
            correct += 1;
        }
        g.iter_mut().zip(row).for_each(|(gi, &x)| *gi = (x - lse).exp());
        g[y] -= 1.0;
    }
    (loss, correct, grad)
}

fn log_sum_exp(row: ArrayView1<f64>) -> (f64, usize) {
    let mut argmax = 0;
    for (i, &x) in row.iter().enumerate() {
        if x > row[argmax] {
            argmax = i;
        }
    }
    let max = row[argmax];
    (max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln(), argmax)
}

fn layer_forward(
    cfg: &ToyConfig,
    lp: &LayerParams,
    h: Array2<f64>,
    batch: usize,
    seq: usize,
    skipped: bool,
    ablated: Vec<bool>,
) -> LayerCache {
    let rows = h.nrows();
    let (n1, r1) = rms_norm(&h, &lp.attn_norm);
    let q = n1.dot(&lp.wq);
    let k = n1.dot(&lp.wk);
    let v = n1.dot(&lp.wv);
    let (probs, z) = attention(cfg, &q, &k, &v, batch, seq, &ablated);
    let a = if skipped {
        Array2::zeros((rows, cfg.d_model))
    } else {
        z.dot(&lp.wo)
    };
    let hhat = &h + &a;
    let (n2, r2) = rms_norm(&hhat, &lp.mlp_norm);
    let mut u = n2.dot(&lp.w1);
    u += &lp.b1;
    let g = u.mapv(gelu);
    let m = if skipped {
        Array2::zeros((rows, cfg.d_model))
    } else {
        let mut m = g.dot(&lp.w2);
        m += &lp.b2;
        m
    };
    LayerCache {
        h,
        r1,
        n1,
        q,
        k,
        v,
        probs,
        z,
        a,
        hhat,
        r2,
        n2,
        u,
        g,
        m,
        skipped,
        ablated,
    }
}

/// Causal multi-head attention; ablated heads output zeros.
fn attention(
    cfg: &ToyConfig,
    q: &Array2<f64>,
    k: &Array2<f64>,
    v: &Array2<f64>,
    batch: usize,
    seq: usize,
    ablated: &[bool],
) -> (Vec<f64>, Array2<f64>) {
    let (d, dh, nh) = (cfg.d_model, cfg.d_head(), cfg.heads);
    let scale = 1.0 / (dh as f64).sqrt();
    let (qs, ks, vs) = (q.as_slice().unwrap(), k.as_slice().unwrap(), v.as_slice().unwrap());
    let mut probs = vec![0.0; batch * nh * seq * seq];
    let mut z = Array2::zeros((batch * seq, d));
    let zs = z.as_slice_mut().unwrap();
    for b in 0..batch {
        for h in 0..nh {
            let off = h * dh;
            for i in 0..seq {
                let qi = &qs[(b * seq + i) * d + off..][..dh];
                let p = &mut probs[((b * nh + h) * seq + i) * seq..][..seq];
                let mut max = f64::NEG_INFINITY;
                for j in 0..=i {
                    let kj = &ks[(b * seq + j) * d + off..][..dh];
                    p[j] = qi.iter().zip(kj).map(|(x, y)| x * y).sum::<f64>() * scale;
                    max = max.max(p[j]);
                }
                let mut total = 0.0;
                for pj in p[..=i].iter_mut() {
                    *pj = (*pj - max).exp();
                    total += *pj;
                }
                p[..=i].iter_mut().for_each(|pj| *pj /= total);
                if ablated[h] {
                    continue;
                }
                let zi = &mut zs[(b * seq + i) * d + off..][..dh];
                for j in 0..=i {
                    let vj = &vs[(b * seq + j) * d + off..][..dh];
                    zi.iter_mut().zip(vj).for_each(|(o, x)| *o += p[j] * x);
                }
            }
        }
    }
    (probs, z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::TaskSpec;
    use crate::TrainConfig;

    #[test]
    fn attention_rows_are_causal_distributions() {
        let cfg = ToyConfig {
            layers: 2,
            heads: 3,
            d_model: 12,
            d_mlp: 16,
            seed: 9,
            task: TaskSpec::Copy { vocab: 6, len: 5, examples: 8 },
            train: TrainConfig::default(),
        };
        let model = ToyModel::new(cfg).unwrap();
        let tokens: Vec<Vec<usize>> = (0..4).map(|b| (0..5).map(|i| (b + 2 * i) % 6).collect()).collect();
        let cache = model.run_tokens(&tokens, &Intervention::None).unwrap();
        let seq = cache.seq;
        for lc in &cache.layers {
            for row in lc.probs.chunks(seq).enumerate() {
                let (r, p) = row;
                let i = r % seq;
                assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-6);
                assert!(p[..=i].iter().all(|&x| x > 0.0));
                assert!(p[i + 1..].iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn gelu_gradient_matches_difference_quotient() {
        for x in [-3.0, -0.7, 0.0, 0.4, 2.5] {
            let h = 1e-5;
            let fd = (gelu(x + h) - gelu(x - h)) / (2.0 * h);
            assert!((fd - gelu_grad(x)).abs() < 1e-8);
        }
    }
}
