use serde::{Deserialize, Serialize};

use super::profile::layer_means;
use super::scores::HeadScoreTable;
use crate::{Error, Result};

/// Silhouette of the top-q versus bottom-q heads by diff in a 2-D layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub silhouette: f64,
    pub q: f64,
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
    pub layer_mean_diff: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationComparison {
    pub easy: SeparationReport,
    pub hard: SeparationReport,
    /// `hard.silhouette − easy.silhouette`.
    pub difference: f64,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Mean silhouette coefficient; points alone in their cluster score 0.
pub fn silhouette(points: &[[f64; 2]], labels: &[usize]) -> Result<f64> {
    if points.len() != labels.len() {
        return Err(Error::validation("points and labels differ in length"));
    }
    let k = labels.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; k];
    for &c in labels {
        sizes[c] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(Error::validation("silhouette needs at least two non-empty clusters"));
    }
    let mut total = 0.0;
    for (i, &p) in points.iter().enumerate() {
        let own = labels[i];
        if sizes[own] == 1 {
            continue;
        }
        let mut sums = vec![0.0; k];
        for (j, &q) in points.iter().enumerate() {
            if i != j {
                sums[labels[j]] += distance(p, q);
            }
        }
        let a = sums[own] / (sizes[own] - 1) as f64;
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / points.len() as f64)
}

/// `floor(q·N)` heads (at least one) from each end of the diff ranking.
pub fn separation_report(
    scores: &HeadScoreTable,
    layout: &[[f64; 2]],
    q: f64,
) -> Result<SeparationReport> {
    let n = scores.heads();
    if layout.len() != n {
        return Err(Error::validation(format!(
            "layout has {} points for {n} heads",
            layout.len()
        )));
    }
    if !(q > 0.0 && q <= 0.5) {
        return Err(Error::validation(format!("q = {q} outside (0, 0.5]")));
    }
    if layout.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::numerical("non-finite layout coordinate"));
    }
    let g = ((q * n as f64).floor() as usize).max(1);
    let ranked = scores.ranked();
    let top = ranked[..g].to_vec();
    let bottom = ranked[n - g..].to_vec();
    let points: Vec<[f64; 2]> = top.iter().chain(&bottom).map(|&h| layout[h]).collect();
    let labels: Vec<usize> = (0..2 * g).map(|i| usize::from(i >= g)).collect();
    Ok(SeparationReport {
        silhouette: silhouette(&points, &labels)?,
        q,
        top,
        bottom,
        layer_mean_diff: layer_means(scores),
    })
}

/// The same separation statistic on an easy and a hard condition.
pub fn separation_statistic(
    easy: &HeadScoreTable,
    easy_layout: &[[f64; 2]],
    hard: &HeadScoreTable,
    hard_layout: &[[f64; 2]],
    q: f64,
) -> Result<SeparationComparison> {
    if !easy.same_heads(hard) {
        return Err(Error::validation(format!(
            "head sets differ: {} heads ({} per layer) vs {} heads ({} per layer)",
            easy.heads(),
            easy.heads_per_layer(),
            hard.heads(),
            hard.heads_per_layer()
        )));
    }
    let easy = separation_report(easy, easy_layout, q)?;
    let hard = separation_report(hard, hard_layout, q)?;
    Ok(SeparationComparison {
        difference: hard.silhouette - easy.silhouette,
        easy,
        hard,
    })
}
