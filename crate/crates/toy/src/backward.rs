//! Reverse-mode gradients for the forward pass in [`crate::model`].

use ndarray::{Array1, Array2, Axis};

use crate::config::ToyConfig;
use crate::model::{gelu_grad, Cache, LayerCache, ToyModel};
use crate::params::{LayerParams, Params};

/// Gradients of `Σ dlogits ⊙ logits` with respect to every parameter and to
/// the token-embedding input rows.
pub(crate) fn backward(model: &ToyModel, cache: &Cache, dlogits: &Array2<f64>) -> (Params, Array2<f64>) {
    let p = &model.params;
    let cfg = &model.config;
    let mut grads = p.zeros_like();
    grads.w_out = cache.nf.t().dot(dlogits);
    let dnf = dlogits.dot(&p.w_out.t());
    let (mut dh, dgain) = rms_back(&cache.h_final, &cache.rf, &p.final_norm, &dnf);
    grads.final_norm = dgain;
    for l in (0..cfg.layers).rev() {
        dh = layer_backward(cfg, &p.layers[l], &cache.layers[l], dh, &mut grads.layers[l], cache.batch, cache.seq);
    }
    for (row, d) in dh.axis_iter(Axis(0)).enumerate() {
        let mut pos = grads.pos_emb.row_mut(row % cache.seq);
        pos += &d;
    }
    if let Some(tokens) = &cache.tokens {
        for (&tok, d) in tokens.iter().zip(dh.axis_iter(Axis(0))) {
            let mut e = grads.tok_emb.row_mut(tok);
            e += &d;
        }
    }
    (grads, dh)
}

/// Backward through `y = g ⊙ x / r`.
fn rms_back(x: &Array2<f64>, rs: &[f64], gain: &Array1<f64>, dy: &Array2<f64>) -> (Array2<f64>, Array1<f64>) {
    let d = x.ncols() as f64;
    let mut dx = Array2::zeros(x.raw_dim());
    let mut dgain = Array1::zeros(gain.len());
    for (((xr, dyr), mut dxr), &r) in x.axis_iter(Axis(0)).zip(dy.axis_iter(Axis(0))).zip(dx.axis_iter_mut(Axis(0))).zip(rs) {
        let mut dot = 0.0;
        for j in 0..xr.len() {
            dgain[j] += dyr[j] * xr[j] / r;
            dot += gain[j] * dyr[j] * xr[j];
        }
        let c = dot / (d * r * r * r);
        for j in 0..xr.len() {
            dxr[j] = gain[j] * dyr[j] / r - xr[j] * c;
        }
    }
    (dx, dgain)
}

fn layer_backward(
    cfg: &ToyConfig,
    lp: &LayerParams,
    lc: &LayerCache,
    dh_out: Array2<f64>,
    grads: &mut LayerParams,
    batch: usize,
    seq: usize,
) -> Array2<f64> {
    if lc.skipped {
        return dh_out;
    }
    let dm = &dh_out;
    grads.w2 = lc.g.t().dot(dm);
    grads.b2 = dm.sum_axis(Axis(0));
    let mut du = dm.dot(&lp.w2.t());
    du.zip_mut_with(&lc.u, |d, &u| *d *= gelu_grad(u));
    grads.w1 = lc.n2.t().dot(&du);
    grads.b1 = du.sum_axis(Axis(0));
    let dn2 = du.dot(&lp.w1.t());
    let (dx, dgain) = rms_back(&lc.hhat, &lc.r2, &lp.mlp_norm, &dn2);
    grads.mlp_norm = dgain;
    let dhhat = dh_out + dx;
    grads.wo = lc.z.t().dot(&dhhat);
    let dz = dhhat.dot(&lp.wo.t());
    let (dq, dk, dv) = attention_back(cfg, lc, &dz, batch, seq);
    grads.wq = lc.n1.t().dot(&dq);
    grads.wk = lc.n1.t().dot(&dk);
    grads.wv = lc.n1.t().dot(&dv);
    let dn1 = dq.dot(&lp.wq.t()) + dk.dot(&lp.wk.t()) + dv.dot(&lp.wv.t());
    let (dx, dgain) = rms_back(&lc.h, &lc.r1, &lp.attn_norm, &dn1);
    grads.attn_norm = dgain;
    dhhat + dx
}

fn attention_back(
    cfg: &ToyConfig,
    lc: &LayerCache,
    dz: &Array2<f64>,
    batch: usize,
    seq: usize,
) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let (d, dh, nh) = (cfg.d_model, cfg.d_head(), cfg.heads);
    let scale = 1.0 / (dh as f64).sqrt();
    let rows = batch * seq;
    let mut dq = Array2::zeros((rows, d));
    let mut dk = Array2::zeros((rows, d));
    let mut dv = Array2::zeros((rows, d));
    let (qs, ks, vs) = (lc.q.as_slice().unwrap(), lc.k.as_slice().unwrap(), lc.v.as_slice().unwrap());
    let dzs = dz.as_slice().unwrap();
    let (dqs, dks, dvs) = (dq.as_slice_mut().unwrap(), dk.as_slice_mut().unwrap(), dv.as_slice_mut().unwrap());
    let mut dp = vec![0.0; seq];
    for b in 0..batch {
        for h in (0..nh).filter(|&h| !lc.ablated[h]) {
            let off = h * dh;
            for i in 0..seq {
                let p = &lc.probs[((b * nh + h) * seq + i) * seq..][..seq];
                let ri = (b * seq + i) * d + off;
                let dzi = &dzs[ri..ri + dh];
                let mut weighted = 0.0;
                for j in 0..=i {
                    let rj = (b * seq + j) * d + off;
                    dp[j] = dzi.iter().zip(&vs[rj..rj + dh]).map(|(x, y)| x * y).sum();
                    weighted += p[j] * dp[j];
                    dvs[rj..rj + dh].iter_mut().zip(dzi).for_each(|(o, x)| *o += p[j] * x);
                }
                for j in 0..=i {
                    let ds = p[j] * (dp[j] - weighted) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    let rj = (b * seq + j) * d + off;
                    for c in 0..dh {
                        dqs[ri + c] += ds * ks[rj + c];
                        dks[rj + c] += ds * qs[ri + c];
                    }
                }
            }
        }
    }
    (dq, dk, dv)
}
