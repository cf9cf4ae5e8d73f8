use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::scores::HeadScoreTable;
use crate::par::compensated_sum;
use crate::{Error, Result};

/// Per-layer mean diff with a least-squares quadratic over layer index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerProfile {
    pub mean_diff: Vec<f64>,
    /// `[c0, c1, c2]` of `c0 + c1·l + c2·l²`.
    pub coefficients: [f64; 3],
    pub fitted: Vec<f64>,
    /// Quadratic coefficient; negative means an inverted U.
    pub curvature: f64,
    /// Layer with the largest fitted value.
    pub peak_layer: usize,
    /// Layer with the largest observed mean diff.
    pub observed_peak_layer: usize,
}

impl LayerProfile {
    pub fn from_means(mean_diff: Vec<f64>) -> Result<Self> {
        let l = mean_diff.len();
        if l < 3 {
            return Err(Error::validation(format!(
                "a quadratic layer profile needs at least 3 layers, got {l}"
            )));
        }
        if mean_diff.iter().any(|v| !v.is_finite()) {
            return Err(Error::numerical("non-finite layer mean"));
        }
        // Fit on a centred, scaled abscissa and map back; keeps the design well conditioned.
        let mid = (l - 1) as f64 / 2.0;
        let scale = mid.max(1.0);
        let x = DMatrix::from_fn(l, 3, |r, c| ((r as f64 - mid) / scale).powi(c as i32));
        let y = DVector::from_column_slice(&mean_diff);
        let beta = x
            .clone()
            .svd(true, true)
            .solve(&y, 1e-12)
            .map_err(|e| Error::numerical(format!("quadratic fit failed: {e}")))?;
        let (b0, b1, b2) = (beta[0], beta[1] / scale, beta[2] / (scale * scale));
        let coefficients = [b0 - b1 * mid + b2 * mid * mid, b1 - 2.0 * b2 * mid, b2];
        let fitted: Vec<f64> = (x * beta).iter().copied().collect();
        Ok(Self {
            peak_layer: argmax(&fitted),
            observed_peak_layer: argmax(&mean_diff),
            curvature: coefficients[2],
            coefficients,
            fitted,
            mean_diff,
        })
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub fn layer_means(table: &HeadScoreTable) -> Vec<f64> {
    let hpl = table.heads_per_layer();
    table
        .rows()
        .chunks(hpl)
        .map(|layer| compensated_sum(layer.iter().map(|r| r.diff)) / hpl as f64)
        .collect()
}

pub fn layer_profile(table: &HeadScoreTable) -> Result<LayerProfile> {
    LayerProfile::from_means(layer_means(table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_quadratic_is_recovered() {
        let y: Vec<f64> = (0..7).map(|l| 1.0 + 0.5 * l as f64 - 0.25 * (l * l) as f64).collect();
        let p = LayerProfile::from_means(y).unwrap();
        for (got, want) in p.coefficients.iter().zip([1.0, 0.5, -0.25]) {
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
        assert_eq!(p.peak_layer, 1);
    }

    #[test]
    fn rise_then_fall_is_concave() {
        let p = LayerProfile::from_means(vec![-0.2, 0.1, 0.3, 0.25, -0.1]).unwrap();
        assert!(p.curvature < 0.0);
        assert_eq!(p.observed_peak_layer, 2);
    }

    #[test]
    fn constant_profile_is_flat() {
        let p = LayerProfile::from_means(vec![0.7; 12]).unwrap();
        assert!(p.curvature.abs() < 1e-9);
    }

    #[test]
    fn inverted_u_peaks_in_middle_third() {
        let l = 36;
        let y: Vec<f64> = (0..l)
            .map(|i| {
                let x = i as f64 / (l - 1) as f64;
                -0.3 + 0.9 * (std::f64::consts::PI * x).sin() + 0.05 * ((7 * i) % 5) as f64 / 5.0
            })
            .collect();
        let p = LayerProfile::from_means(y).unwrap();
        assert!(p.curvature < 0.0);
        assert!((l / 3..2 * l / 3).contains(&p.peak_layer), "{}", p.peak_layer);
    }

    #[test]
    fn too_few_layers() {
        assert!(matches!(LayerProfile::from_means(vec![0.0, 1.0]), Err(Error::Validation(_))));
    }

    #[test]
    fn means_per_layer() {
        let t = HeadScoreTable::from_scores(2, &[(1.0, 0.0, 1), (3.0, 0.0, 1), (0.0, 1.0, 1), (0.0, 0.0, 1)]).unwrap();
        assert_eq!(layer_means(&t), vec![2.0, -0.5]);
    }
}
