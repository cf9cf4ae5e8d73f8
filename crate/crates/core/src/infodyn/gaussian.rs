//! Gaussian (and Gaussian-copula) mutual information for real-valued samples.

use nalgebra::DMatrix;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

/// Diagonal ridge added to covariance matrices before taking determinants.
pub const DEFAULT_RIDGE: f64 = 1e-8;

/// Relative spread below which a series counts as constant.
const CONSTANT_TOL: f64 = 1e-12;

/// Z-score with population variance; `None` for a constant series.
pub fn zscore(x: &[f64]) -> Option<Vec<f64>> {
    if x.is_empty() {
        return None;
    }
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if !sd.is_finite() || sd <= CONSTANT_TOL * mean.abs().max(1.0) {
        return None;
    }
    Some(x.iter().map(|v| (v - mean) / sd).collect())
}

/// Rank-transform to standard normal scores, Φ⁻¹(rank / (n + 1)).
///
/// Tied values share their average rank.
pub fn copula_normal_scores(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[order[j]] == x[order[i]] {
            j += 1;
        }
        // ranks are 1-based: positions i..j share (i+1 + j) / 2
        let avg = (i + 1 + j) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = avg;
        }
        i = j;
    }
    let normal = Normal::standard();
    let denom = n as f64 + 1.0;
    ranks.iter().map(|r| normal.inverse_cdf(r / denom)).collect()
}

/// Population covariance (1/n) of equally long columns.
pub fn covariance_matrix(columns: &[&[f64]]) -> Result<DMatrix<f64>> {
    let p = columns.len();
    let n = columns.first().map_or(0, |c| c.len());
    if p == 0 || n == 0 {
        return Err(Error::validation("covariance of empty data"));
    }
    if columns.iter().any(|c| c.len() != n) {
        return Err(Error::validation("columns differ in length"));
    }
    if columns.iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::validation("non-finite sample"));
    }
    let means: Vec<f64> = columns.iter().map(|c| c.iter().sum::<f64>() / n as f64).collect();
    let mut cov = DMatrix::zeros(p, p);
    for a in 0..p {
        for b in a..p {
            let s: f64 = columns[a]
                .iter()
                .zip(columns[b])
                .map(|(x, y)| (x - means[a]) * (y - means[b]))
                .sum();
            cov[(a, b)] = s / n as f64;
            cov[(b, a)] = cov[(a, b)];
        }
    }
    Ok(cov)
}

fn log_det(cov: &DMatrix<f64>, idx: &[usize]) -> Result<f64> {
    let sub = cov.select_rows(idx).select_columns(idx);
    let chol = sub.cholesky().ok_or_else(|| {
        Error::numerical(format!(
            "covariance block over variables {idx:?} is not positive definite (diagonal {:?})",
            cov.diagonal().as_slice()
        ))
    })?;
    Ok(2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
}

/// I(A;B) = ½ ln(det Σ_A · det Σ_B / det Σ_AB) for index sets into `cov`.
///
/// Round-off negatives are clamped to 0.
pub fn gaussian_mi_from_covariance(cov: &DMatrix<f64>, a: &[usize], b: &[usize]) -> Result<f64> {
    let ab: Vec<usize> = a.iter().chain(b).copied().collect();
    let mi = 0.5 * (log_det(cov, a)? + log_det(cov, b)? - log_det(cov, &ab)?);
    if !mi.is_finite() {
        return Err(Error::numerical(format!("non-finite Gaussian MI between {a:?} and {b:?}")));
    }
    Ok(mi.max(0.0))
}

/// Gaussian MI in nats between the column groups `a` (p columns) and `b`
/// (q columns); `ridge` is added to the covariance diagonal.
pub fn mutual_information_gaussian(a: &[&[f64]], b: &[&[f64]], ridge: f64) -> Result<f64> {
    let (p, q) = (a.len(), b.len());
    if p == 0 || q == 0 {
        return Err(Error::validation("both variable groups need at least one column"));
    }
    let n = a[0].len();
    if n <= p.max(q) + 2 {
        return Err(Error::validation(format!(
            "{n} samples is too few for a {p}×{q} Gaussian MI estimate"
        )));
    }
    let columns: Vec<&[f64]> = a.iter().chain(b).copied().collect();
    let mut cov = covariance_matrix(&columns)?;
    for i in 0..p + q {
        cov[(i, i)] += ridge;
    }
    let ia: Vec<usize> = (0..p).collect();
    let ib: Vec<usize> = (p..p + q).collect();
    gaussian_mi_from_covariance(&cov, &ia, &ib)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn independent_streams_near_zero() {
        let x = normals(1, 10_000);
        let y = normals(2, 10_000);
        let mi = mutual_information_gaussian(&[&x], &[&y], DEFAULT_RIDGE).unwrap();
        assert!(mi < 0.01, "{mi}");
    }

    fn correlated_mi(rho: f64, seed: u64, n: usize) -> f64 {
        let x = normals(2 * seed, n);
        let e = normals(2 * seed + 1, n);
        let y: Vec<f64> = x
            .iter()
            .zip(&e)
            .map(|(a, b)| rho * a + (1.0 - rho * rho).sqrt() * b)
            .collect();
        mutual_information_gaussian(&[&x], &[&y], DEFAULT_RIDGE).unwrap()
    }

    #[test]
    fn correlated_pair_matches_closed_form() {
        let rho: f64 = 0.9;
        let truth = -0.5 * (1.0 - rho * rho).ln();
        assert!((truth - 0.830_365_603_410_825_5).abs() < 1e-15);
        // Single-run relative sd is ~1% at T = 1e4; compare the 20-seed mean.
        let mean = (0..20).map(|s| correlated_mi(rho, s, 10_000)).sum::<f64>() / 20.0;
        assert!((mean - truth).abs() / truth < 0.02, "{mean} vs {truth}");
    }

    #[test]
    fn duplicate_column_is_capped_by_ridge() {
        let x = zscore(&normals(5, 2_000)).unwrap();
        let at = |eps: f64| mutual_information_gaussian(&[&x], &[&x], eps).unwrap();
        // Closed form for unit-variance copies: ½ ln((1+ε)² / ((1+ε)² − 1)).
        let expected = 8.863_766_794_734_946;
        assert!((at(1e-8) - expected).abs() < 1e-6, "{}", at(1e-8));
        assert!(at(1e-10) > at(1e-8) && at(1e-8) > at(1e-6) && at(1e-6) > at(1e-4));
    }

    #[test]
    fn too_few_samples_rejected() {
        let x = [1.0, 2.0, 3.0];
        assert!(matches!(
            mutual_information_gaussian(&[&x], &[&x], DEFAULT_RIDGE),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn singular_without_ridge_is_numerical_error() {
        let x: Vec<f64> = (0..50).map(|i| i as f64).collect();
        let err = mutual_information_gaussian(&[&x, &x], &[&x], 0.0).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)), "{err}");
    }

    #[test]
    fn zscore_and_constant_detection() {
        let z = zscore(&[1.0, 2.0, 3.0]).unwrap();
        let mean: f64 = z.iter().sum::<f64>() / 3.0;
        let var: f64 = z.iter().map(|v| v * v).sum::<f64>() / 3.0;
        assert!(mean.abs() < 1e-15 && (var - 1.0).abs() < 1e-15);
        assert!(zscore(&[5.0, 5.0, 5.0]).is_none());
    }

    #[test]
    fn copula_scores_are_monotone_and_tie_aware() {
        let s = copula_normal_scores(&[3.0, 1.0, 2.0, 2.0]);
        assert!(s[1] < s[2] && s[2] == s[3] && s[3] < s[0]);
        // symmetric ranks map to symmetric quantiles
        let t = copula_normal_scores(&[10.0, 20.0, 30.0]);
        assert!((t[0] + t[2]).abs() < 1e-12 && t[1].abs() < 1e-12);
    }
}
