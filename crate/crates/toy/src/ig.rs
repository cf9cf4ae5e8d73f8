//! Integrated gradients over the token-embedding input.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::backward;
use crate::model::{Intervention, ToyModel};
use phid_core::{Error, Result};

pub const MIN_IG_STEPS: usize = 8;

/// `(x − x') ⊙ (1/m) Σ_{k=1..m} ∇F(x' + (k/m)(x − x'))`, given the gradients
/// at the `m` right-endpoint path points.
pub fn riemann_attribution(x: &[f64], baseline: &[f64], path_grads: &[Vec<f64>]) -> Vec<f64> {
    let m = path_grads.len() as f64;
    (0..x.len())
        .map(|i| (x[i] - baseline[i]) * path_grads.iter().map(|g| g[i]).sum::<f64>() / m)
        .collect()
}

/// Path points `x' + (k/m)(x − x')` for `k = 1..=m`.
pub fn path_points(x: &[f64], baseline: &[f64], m: usize) -> Vec<Vec<f64>> {
    (1..=m)
        .map(|k| {
            let a = k as f64 / m as f64;
            x.iter().zip(baseline).map(|(xi, bi)| bi + a * (xi - bi)).collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgReport {
    pub tokens: Vec<usize>,
    pub target: usize,
    pub m_steps: usize,
    pub seq: usize,
    pub d_model: usize,
    /// `[T × d]`, row-major by position.
    pub attributions: Vec<f64>,
    /// Target logit at the input and at the zero-embedding baseline.
    pub f_input: f64,
    pub f_baseline: f64,
    pub attribution_sum: f64,
    /// `|Σ IG − (F(x) − F(x'))| / |F(x) − F(x')|`.
    pub completeness_residual: f64,
}

impl IgReport {
    pub fn per_position(&self) -> Vec<f64> {
        self.attributions.chunks(self.d_model).map(|r| r.iter().sum()).collect()
    }

    pub fn per_dimension(&self) -> Vec<f64> {
        (0..self.d_model)
            .map(|j| (0..self.seq).map(|t| self.attributions[t * self.d_model + j]).sum())
            .collect()
    }
}

/// Attribution of the target logit at the last position to the token
/// embeddings, against a zero baseline; positional embeddings stay fixed.
pub fn integrated_gradients(model: &ToyModel, tokens: &[usize], target: usize, m_steps: usize) -> Result<IgReport> {
    if m_steps < MIN_IG_STEPS {
        return Err(Error::Validation(format!("integrated gradients need at least {MIN_IG_STEPS} steps")));
    }
    let seqs = vec![tokens.to_vec()];
    let seq = model.check_tokens(&seqs)?;
    if target >= model.config.vocab() {
        return Err(Error::Validation(format!("target {target} outside vocabulary")));
    }
    let d = model.config.d_model;
    let x: Vec<f64> = model.embed(&seqs).into_raw_vec_and_offset().0;
    let baseline = vec![0.0; x.len()];
    let points = path_points(&x, &baseline, m_steps);
    // Path points plus the baseline as one batch.
    let mut rows: Vec<f64> = points.iter().flatten().copied().collect();
    rows.extend(&baseline);
    let batch = m_steps + 1;
    let input = Array2::from_shape_vec((batch * seq, d), rows).expect("consistent shape");
    let cache = model.run(input, batch, seq, &Intervention::None, None);
    let mut dlogits = Array2::zeros(cache.logits.raw_dim());
    for b in 0..m_steps {
        dlogits[[b * seq + seq - 1, target]] = 1.0;
    }
    let (_, dx) = backward::backward(model, &cache, &dlogits);
    let path_grads: Vec<Vec<f64>> = (0..m_steps)
        .map(|b| dx.rows().into_iter().skip(b * seq).take(seq).flatten().copied().collect())
        .collect();
    let attributions = riemann_attribution(&x, &baseline, &path_grads);
    let f_input = cache.logits[[(m_steps - 1) * seq + seq - 1, target]];
    let f_baseline = cache.logits[[m_steps * seq + seq - 1, target]];
    let attribution_sum: f64 = attributions.iter().sum();
    let gap = f_input - f_baseline;
    let completeness_residual = if gap == 0.0 {
        if attribution_sum == 0.0 { 0.0 } else { f64::INFINITY }
    } else {
        (attribution_sum - gap).abs() / gap.abs()
    };
    Ok(IgReport {
        tokens: tokens.to_vec(),
        target,
        m_steps,
        seq,
        d_model: d,
        attributions,
        f_input,
        f_baseline,
        attribution_sum,
        completeness_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact_for_any_m() {
        let w = [0.5, -2.0, 3.0];
        let x = [1.0, 2.0, -1.0];
        let base = [0.2, 0.0, 0.5];
        for m in [1, 8, 33] {
            let grads = vec![w.to_vec(); m];
            let ig = riemann_attribution(&x, &base, &grads);
            for i in 0..3 {
                assert!((ig[i] - w[i] * (x[i] - base[i])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn path_ends_at_the_input() {
        let p = path_points(&[2.0, 4.0], &[0.0, 0.0], 4);
        assert_eq!(p[0], vec![0.5, 1.0]);
        assert_eq!(p[3], vec![2.0, 4.0]);
    }
}
