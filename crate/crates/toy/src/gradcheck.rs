//! Analytic gradients against central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::model::{Intervention, ToyModel};
use crate::tasks::Example;
use phid_core::Result;

/// Denominator floor so coordinates with vanishing gradients compare absolutely.
pub const REL_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordCheck {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
    /// `|a − n| / max(|a|, |n|, REL_FLOOR)`.
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheck {
    pub coords: Vec<CoordCheck>,
    pub max_rel_error: f64,
}

fn summed_loss(model: &ToyModel, batch: &[Example]) -> Result<f64> {
    Ok(model.evaluate(batch, &Intervention::None)?.loss * batch.len() as f64)
}

/// Check `count` coordinates, each drawn by picking a tensor uniformly and
/// then an entry uniformly.
pub fn gradient_check(model: &ToyModel, batch: &[Example], count: usize, step: f64, seed: u64) -> Result<GradCheck> {
    let (_, _, grads) = model.loss_and_grad(batch)?;
    let infos = model.params.infos();
    let grad_slices = grads.slices();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = model.clone();
    let mut coords = Vec::with_capacity(count);
    for _ in 0..count {
        let t = rng.random_range(0..infos.len());
        let i = rng.random_range(0..grad_slices[t].len());
        let original = model.params.slices()[t][i];
        probe.params.slices_mut()[t][i] = original + step;
        let plus = summed_loss(&probe, batch)?;
        probe.params.slices_mut()[t][i] = original - step;
        let minus = summed_loss(&probe, batch)?;
        probe.params.slices_mut()[t][i] = original;
        let numeric = (plus - minus) / (2.0 * step);
        let analytic = grad_slices[t][i];
        let rel_error = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR);
        coords.push(CoordCheck {
            tensor: infos[t].name.clone(),
            index: i,
            analytic,
            numeric,
            rel_error,
        });
    }
    let max_rel_error = coords.iter().map(|c| c.rel_error).fold(0.0, f64::max);
    Ok(GradCheck { coords, max_rel_error })
}
