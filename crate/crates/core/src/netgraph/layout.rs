use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::graph::HeadGraph;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayoutParams {
    pub area: f64,
    pub c: f64,
    pub iterations: usize,
    /// Initial temperature as a multiple of `√area`.
    pub temperature_fraction: f64,
    pub seed: u64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        Self {
            area: 1.0,
            c: 1.0,
            iterations: 500,
            temperature_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayoutState {
    pub positions: Vec<[f64; 2]>,
    pub area: f64,
    pub c: f64,
    /// Ideal distance `C·√(area/N)`.
    pub k: f64,
    /// Temperature after the last iteration.
    pub temperature: f64,
    pub iterations: usize,
    /// Displacement cap used at each iteration.
    pub temperatures: Vec<f64>,
}

impl LayoutState {
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.positions[i], self.positions[j]);
        (a[0] - b[0]).hypot(a[1] - b[1])
    }

    pub fn centroid(&self, nodes: &[usize]) -> [f64; 2] {
        let mut c = [0.0; 2];
        for &i in nodes {
            c[0] += self.positions[i][0];
            c[1] += self.positions[i][1];
        }
        let n = nodes.len().max(1) as f64;
        [c[0] / n, c[1] / n]
    }
}

/// Force-directed layout with repulsion `k²/d` between every pair and
/// attraction `w·d²/k` along positive edges.
///
/// Each node moves along its net force by at most the current temperature,
/// which cools linearly from `temperature_fraction·√area` to 0.
pub fn force_layout(g: &HeadGraph, params: &LayoutParams) -> Result<LayoutState> {
    let n = g.n();
    if n < 2 {
        return Err(Error::validation("layout needs at least 2 nodes"));
    }
    if !(params.area > 0.0 && params.area.is_finite()) || !(params.c > 0.0) {
        return Err(Error::validation("layout area and C must be positive"));
    }
    let side = params.area.sqrt();
    let k = params.c * (params.area / n as f64).sqrt();
    let t0 = params.temperature_fraction * side;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut pos: Vec<[f64; 2]> = (0..n)
        .map(|_| [rng.random_range(-0.5..0.5) * side, rng.random_range(-0.5..0.5) * side])
        .collect();
    let mut temperatures = Vec::with_capacity(params.iterations);
    let mut disp = vec![[0.0f64; 2]; n];
    for it in 0..params.iterations {
        let t = t0 * (1.0 - it as f64 / params.iterations as f64);
        temperatures.push(t);
        disp.iter_mut().for_each(|d| *d = [0.0; 2]);
        for i in 0..n {
            for j in i + 1..n {
                let mut delta = [pos[i][0] - pos[j][0], pos[i][1] - pos[j][1]];
                let mut d = delta[0].hypot(delta[1]);
                if d < 1e-12 {
                    // Coincident nodes separate along a fixed axis.
                    delta = [1e-9, 0.0];
                    d = 1e-9;
                }
                let w = g.weight(i, j);
                let f = k * k / d - w * d * d / k;
                let u = [delta[0] / d * f, delta[1] / d * f];
                disp[i][0] += u[0];
                disp[i][1] += u[1];
                disp[j][0] -= u[0];
                disp[j][1] -= u[1];
            }
        }
        for (p, d) in pos.iter_mut().zip(&disp) {
            let len = d[0].hypot(d[1]);
            if len > 0.0 {
                let step = len.min(t) / len;
                p[0] += d[0] * step;
                p[1] += d[1] * step;
            }
        }
    }
    if pos.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::numerical("layout diverged"));
    }
    Ok(LayoutState {
        positions: pos,
        area: params.area,
        c: params.c,
        k,
        temperature: if params.iterations == 0 { t0 } else { 0.0 },
        iterations: params.iterations,
        temperatures,
    })
}
