use super::container::payload_f32;
use super::tensor::normalize_boundaries;
use super::{TraceHeader, FORMAT_VERSION, KIND_RESIDUAL};
use crate::error::ParseError;
use crate::{Error, Result};

/// Full residual-stream capture: `h_l` at every layer boundary and the
/// attention (`a_l`) and MLP (`m_l`) sub-layer outputs, per step.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTrace {
    steps: usize,
    layers: usize,
    d_model: usize,
    /// `[T × (L+1) × d]`
    h: Vec<f64>,
    /// `[T × L × d]`
    a: Vec<f64>,
    /// `[T × L × d]`
    m: Vec<f64>,
    model_id: String,
    task_label: String,
    boundaries: Vec<usize>,
}

fn norm(v: impl Iterator<Item = f64>) -> f64 {
    v.map(|x| x * x).sum::<f64>().sqrt()
}

impl ResidualTrace {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        steps: usize,
        layers: usize,
        d_model: usize,
        h: Vec<f64>,
        a: Vec<f64>,
        m: Vec<f64>,
        model_id: impl Into<String>,
        task_label: impl Into<String>,
        boundaries: Vec<usize>,
    ) -> Result<Self> {
        if steps == 0 || layers == 0 || d_model == 0 {
            return Err(Error::validation(format!(
                "residual dims [{steps}, {layers}, {d_model}] contain zero"
            )));
        }
        if h.len() != steps * (layers + 1) * d_model
            || a.len() != steps * layers * d_model
            || m.len() != steps * layers * d_model
        {
            return Err(Error::validation("residual buffers do not match declared dims"));
        }
        let boundaries = normalize_boundaries(boundaries, steps)?;
        Ok(Self {
            steps,
            layers,
            d_model,
            h,
            a,
            m,
            model_id: model_id.into(),
            task_label: task_label.into(),
            boundaries,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn d_model(&self) -> usize {
        self.d_model
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn task_label(&self) -> &str {
        &self.task_label
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    /// Residual entering layer `layer` (`layer == L` is the final stream).
    pub fn h(&self, step: usize, layer: usize) -> &[f64] {
        let d = self.d_model;
        let off = (step * (self.layers + 1) + layer) * d;
        &self.h[off..off + d]
    }

    pub fn a(&self, step: usize, layer: usize) -> &[f64] {
        let d = self.d_model;
        let off = (step * self.layers + layer) * d;
        &self.a[off..off + d]
    }

    pub fn m(&self, step: usize, layer: usize) -> &[f64] {
        let d = self.d_model;
        let off = (step * self.layers + layer) * d;
        &self.m[off..off + d]
    }

    /// max over steps and layers of ‖h_{l+1} − h_l − a_l − m_l‖ / ‖h_{l+1}‖.
    pub fn additivity_error(&self) -> f64 {
        let mut worst = 0.0_f64;
        for t in 0..self.steps {
            for l in 0..self.layers {
                let next = self.h(t, l + 1);
                let resid = norm(
                    next.iter()
                        .zip(self.h(t, l))
                        .zip(self.a(t, l))
                        .zip(self.m(t, l))
                        .map(|(((n, h), a), m)| n - h - a - m),
                );
                let denom = norm(next.iter().copied());
                if denom > 0.0 {
                    worst = worst.max(resid / denom);
                } else if resid > 0.0 {
                    worst = f64::INFINITY;
                }
            }
        }
        worst
    }

    pub(crate) fn to_parts(&self) -> (TraceHeader, Vec<f64>) {
        let mut payload = Vec::with_capacity(self.h.len() + 2 * self.a.len());
        payload.extend_from_slice(&self.h);
        payload.extend_from_slice(&self.a);
        payload.extend_from_slice(&self.m);
        (
            TraceHeader {
                version: FORMAT_VERSION,
                kind: KIND_RESIDUAL.into(),
                dims: vec![self.steps, self.layers, self.d_model],
                layer_of_head: Vec::new(),
                model_id: self.model_id.clone(),
                task_label: self.task_label.clone(),
                boundaries: self.boundaries.clone(),
            },
            payload,
        )
    }

    pub(crate) fn from_parts(header: TraceHeader, payload: &[u8]) -> Result<Self> {
        let [steps, layers, d] = header.dims[..] else {
            return Err(ParseError::Header(format!(
                "residual dims must be [T, L, d_model], got {:?}",
                header.dims
            ))
            .into());
        };
        if steps == 0 || layers == 0 || d == 0 {
            return Err(Error::validation(format!("residual dims {:?} contain zero", header.dims)));
        }
        let nh = steps * (layers + 1) * d;
        let na = steps * layers * d;
        let values: Vec<f64> = payload_f32(payload, nh + 2 * na)?
            .into_iter()
            .map(f64::from)
            .collect();
        let h = values[..nh].to_vec();
        let a = values[nh..nh + na].to_vec();
        let m = values[nh + na..].to_vec();
        let boundaries = if header.boundaries.is_empty() {
            vec![0]
        } else {
            header.boundaries
        };
        Self::new(steps, layers, d, h, a, m, header.model_id, header.task_label, boundaries)
    }
}
