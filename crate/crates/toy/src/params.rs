use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::ToyConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub attn_norm: Array1<f64>,
    /// `[d_model, d_model]`; head `h` owns columns `h·d_head..(h+1)·d_head`.
    pub wq: Array2<f64>,
    pub wk: Array2<f64>,
    pub wv: Array2<f64>,
    /// `[d_model, d_model]`; head `h` owns rows `h·d_head..(h+1)·d_head`.
    pub wo: Array2<f64>,
    pub mlp_norm: Array1<f64>,
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

/// Every trainable tensor. Gradients and optimizer moments share this type.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub tok_emb: Array2<f64>,
    pub pos_emb: Array2<f64>,
    pub layers: Vec<LayerParams>,
    pub final_norm: Array1<f64>,
    pub w_out: Array2<f64>,
}

/// Name, shape and whether weight decay applies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorInfo {
    pub name: String,
    pub shape: Vec<usize>,
    pub decay: bool,
}

fn gaussian(rng: &mut impl Rng, rows: usize, cols: usize, sd: f64) -> Array2<f64> {
    let dist = Normal::new(0.0, sd).expect("positive sd");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

impl Params {
    /// Unit-variance embeddings, `1/√fan_in` projections, residual-writing
    /// projections further scaled by `1/√(2L)`, unit gains, zero biases.
    pub fn init(cfg: &ToyConfig, rng: &mut impl Rng) -> Self {
        let (d, dm, v, t) = (cfg.d_model, cfg.d_mlp, cfg.vocab(), cfg.max_seq());
        let proj = 1.0 / (d as f64).sqrt();
        let resid = 1.0 / (2.0 * cfg.layers as f64).sqrt();
        let tok_emb = gaussian(rng, v, d, 1.0);
        let pos_emb = gaussian(rng, t, d, 1.0);
        let layers = (0..cfg.layers)
            .map(|_| LayerParams {
                attn_norm: Array1::ones(d),
                wq: gaussian(rng, d, d, proj),
                wk: gaussian(rng, d, d, proj),
                wv: gaussian(rng, d, d, proj),
                wo: gaussian(rng, d, d, proj * resid),
                mlp_norm: Array1::ones(d),
                w1: gaussian(rng, d, dm, proj),
                b1: Array1::zeros(dm),
                w2: gaussian(rng, dm, d, resid / (dm as f64).sqrt()),
                b2: Array1::zeros(d),
            })
            .collect();
        Self {
            tok_emb,
            pos_emb,
            layers,
            final_norm: Array1::ones(d),
            w_out: gaussian(rng, d, v, proj),
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        z.slices_mut().into_iter().for_each(|s| s.fill(0.0));
        z
    }

    pub fn infos(&self) -> Vec<TensorInfo> {
        let m = |name: String, a: &Array2<f64>| TensorInfo {
            name,
            shape: a.shape().to_vec(),
            decay: true,
        };
        let v = |name: String, a: &Array1<f64>| TensorInfo {
            name,
            shape: a.shape().to_vec(),
            decay: false,
        };
        let mut out = vec![m("tok_emb".into(), &self.tok_emb), m("pos_emb".into(), &self.pos_emb)];
        for (l, p) in self.layers.iter().enumerate() {
            out.extend([
                v(format!("layers.{l}.attn_norm"), &p.attn_norm),
                m(format!("layers.{l}.wq"), &p.wq),
                m(format!("layers.{l}.wk"), &p.wk),
                m(format!("layers.{l}.wv"), &p.wv),
                m(format!("layers.{l}.wo"), &p.wo),
                v(format!("layers.{l}.mlp_norm"), &p.mlp_norm),
                m(format!("layers.{l}.w1"), &p.w1),
                v(format!("layers.{l}.b1"), &p.b1),
                m(format!("layers.{l}.w2"), &p.w2),
                v(format!("layers.{l}.b2"), &p.b2),
            ]);
        }
        out.push(v("final_norm".into(), &self.final_norm));
        out.push(m("w_out".into(), &self.w_out));
        out
    }

    /// Tensors in the order of [`Params::infos`].
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![as_slice(&self.tok_emb), as_slice(&self.pos_emb)];
        for p in &self.layers {
            out.extend([
                as_slice(&p.attn_norm),
                as_slice(&p.wq),
                as_slice(&p.wk),
                as_slice(&p.wv),
                as_slice(&p.wo),
                as_slice(&p.mlp_norm),
                as_slice(&p.w1),
                as_slice(&p.b1),
                as_slice(&p.w2),
                as_slice(&p.b2),
            ]);
        }
        out.push(as_slice(&self.final_norm));
        out.push(as_slice(&self.w_out));
        out
    }

    pub fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = vec![as_slice_mut(&mut self.tok_emb), as_slice_mut(&mut self.pos_emb)];
        for p in &mut self.layers {
            out.extend([
                as_slice_mut(&mut p.attn_norm),
                as_slice_mut(&mut p.wq),
                as_slice_mut(&mut p.wk),
                as_slice_mut(&mut p.wv),
                as_slice_mut(&mut p.wo),
                as_slice_mut(&mut p.mlp_norm),
                as_slice_mut(&mut p.w1),
                as_slice_mut(&mut p.b1),
                as_slice_mut(&mut p.w2),
                as_slice_mut(&mut p.b2),
            ]);
        }
        out.push(as_slice_mut(&mut self.final_norm));
        out.push(as_slice_mut(&mut self.w_out));
        out
    }

    pub fn count(&self) -> usize {
        self.slices().iter().map(|s| s.len()).sum()
    }

    pub fn add_assign(&mut self, other: &Params) {
        for (a, b) in self.slices_mut().into_iter().zip(other.slices()) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.slices_mut()
            .into_iter()
            .for_each(|a| a.iter_mut().for_each(|x| *x *= s));
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|s| s.iter().all(|x| x.is_finite()))
    }

    pub fn norm(&self) -> f64 {
        self.slices()
            .iter()
            .flat_map(|s| s.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }
}

fn as_slice<D: ndarray::Dimension>(a: &ndarray::Array<f64, D>) -> &[f64] {
    a.as_slice().expect("parameters are contiguous")
}

fn as_slice_mut<D: ndarray::Dimension>(a: &mut ndarray::Array<f64, D>) -> &mut [f64] {
    a.as_slice_mut().expect("parameters are contiguous")
}
