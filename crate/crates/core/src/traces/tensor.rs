use super::container::payload_f32;
use super::{TraceHeader, FORMAT_VERSION, KIND_HEAD_NORMS};
use crate::error::ParseError;
use crate::infodyn::zscore;
use crate::{Error, Result};

/// Minimum number of steps for ΦID analysis of a trace.
pub const MIN_ANALYSIS_STEPS: usize = 16;

/// Per-head scalar activations over time: `values[t * heads + i]`.
///
/// Heads are ordered layer-major, so head `i` sits in layer
/// `i / heads_per_layer` at position `i % heads_per_layer`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTensor {
    steps: usize,
    layers: usize,
    heads_per_layer: usize,
    values: Vec<f64>,
    model_id: String,
    task_label: String,
    boundaries: Vec<usize>,
}

impl TraceTensor {
    pub fn new(
        values: Vec<f64>,
        steps: usize,
        layers: usize,
        heads_per_layer: usize,
        model_id: impl Into<String>,
        task_label: impl Into<String>,
    ) -> Result<Self> {
        Self::with_boundaries(values, steps, layers, heads_per_layer, model_id, task_label, vec![0])
    }

    pub fn with_boundaries(
        values: Vec<f64>,
        steps: usize,
        layers: usize,
        heads_per_layer: usize,
        model_id: impl Into<String>,
        task_label: impl Into<String>,
        boundaries: Vec<usize>,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::validation("trace has zero steps"));
        }
        if layers == 0 || heads_per_layer == 0 {
            return Err(Error::validation("trace needs at least one layer and one head"));
        }
        let heads = layers * heads_per_layer;
        if values.len() != steps * heads {
            return Err(Error::validation(format!(
                "{} values for a {steps} × {heads} trace",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("trace contains non-finite values"));
        }
        let boundaries = normalize_boundaries(boundaries, steps)?;
        Ok(Self {
            steps,
            layers,
            heads_per_layer,
            values,
            model_id: model_id.into(),
            task_label: task_label.into(),
            boundaries,
        })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn heads(&self) -> usize {
        self.layers * self.heads_per_layer
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn heads_per_layer(&self) -> usize {
        self.heads_per_layer
    }

    pub fn layer_of_head(&self, head: usize) -> usize {
        head / self.heads_per_layer
    }

    pub fn head_index(&self, head: usize) -> usize {
        head % self.heads_per_layer
    }

    pub fn layer_of_heads(&self) -> Vec<usize> {
        (0..self.heads()).map(|i| self.layer_of_head(i)).collect()
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn task_label(&self) -> &str {
        &self.task_label
    }

    /// First step of every concatenated segment; always starts with 0.
    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, step: usize, head: usize) -> f64 {
        self.values[step * self.heads() + head]
    }

    pub fn head_series(&self, head: usize) -> Vec<f64> {
        let n = self.heads();
        self.values.iter().skip(head).step_by(n).copied().collect()
    }

    /// Error unless the trace is long and wide enough for pairwise ΦID.
    pub fn ensure_analyzable(&self) -> Result<()> {
        if self.steps < MIN_ANALYSIS_STEPS {
            return Err(Error::validation(format!(
                "trace has {} steps, analysis needs at least {MIN_ANALYSIS_STEPS}",
                self.steps
            )));
        }
        if self.heads() < 2 {
            return Err(Error::validation("analysis needs at least two heads"));
        }
        Ok(())
    }

    /// Z-score every head series (population variance).
    ///
    /// Constant heads are set to 0 and returned in the second element.
    pub fn standardize(&self) -> (TraceTensor, Vec<usize>) {
        let n = self.heads();
        let mut values = vec![0.0; self.values.len()];
        let mut degenerate = Vec::new();
        for head in 0..n {
            match zscore(&self.head_series(head)) {
                Some(z) => {
                    for (t, v) in z.into_iter().enumerate() {
                        values[t * n + head] = v;
                    }
                }
                None => degenerate.push(head),
            }
        }
        let out = TraceTensor {
            values,
            ..self.clone()
        };
        (out, degenerate)
    }

    /// Zero out the given heads at every step.
    pub fn with_heads_zeroed(&self, heads: &[usize]) -> TraceTensor {
        let n = self.heads();
        let mut out = self.clone();
        for t in 0..self.steps {
            for &h in heads {
                out.values[t * n + h] = 0.0;
            }
        }
        out
    }

    /// Concatenate traces of the same model shape, recording segment starts.
    pub fn concat(parts: &[TraceTensor]) -> Result<TraceTensor> {
        let first = parts
            .first()
            .ok_or_else(|| Error::validation("nothing to concatenate"))?;
        let mut values = Vec::new();
        let mut boundaries = Vec::new();
        let mut steps = 0;
        for p in parts {
            if (p.layers, p.heads_per_layer) != (first.layers, first.heads_per_layer) {
                return Err(Error::validation("cannot concatenate traces of different shapes"));
            }
            boundaries.extend(p.boundaries.iter().map(|b| b + steps));
            values.extend_from_slice(&p.values);
            steps += p.steps;
        }
        Self::with_boundaries(
            values,
            steps,
            first.layers,
            first.heads_per_layer,
            first.model_id.clone(),
            first.task_label.clone(),
            boundaries,
        )
    }

    pub(crate) fn to_parts(&self) -> (TraceHeader, Vec<f64>) {
        (
            TraceHeader {
                version: FORMAT_VERSION,
                kind: KIND_HEAD_NORMS.into(),
                dims: vec![self.steps, self.heads()],
                layer_of_head: self.layer_of_heads(),
                model_id: self.model_id.clone(),
                task_label: self.task_label.clone(),
                boundaries: self.boundaries.clone(),
            },
            self.values.clone(),
        )
    }

    pub(crate) fn from_parts(header: TraceHeader, payload: &[u8]) -> Result<Self> {
        let [steps, heads] = header.dims[..] else {
            return Err(ParseError::Header(format!(
                "head_norms dims must be [T, N], got {:?}",
                header.dims
            ))
            .into());
        };
        if steps == 0 || heads == 0 {
            return Err(Error::validation(format!("trace dims {:?} contain zero", header.dims)));
        }
        if header.layer_of_head.len() != heads {
            return Err(ParseError::ShapeMismatch(format!(
                "layer_of_head has {} entries for {heads} heads",
                header.layer_of_head.len()
            ))
            .into());
        }
        let layers = header.layer_of_head.iter().max().map_or(0, |m| m + 1);
        if heads % layers != 0 {
            return Err(ParseError::ShapeMismatch(format!(
                "{heads} heads do not split evenly over {layers} layers"
            ))
            .into());
        }
        let per_layer = heads / layers;
        if header
            .layer_of_head
            .iter()
            .enumerate()
            .any(|(i, &l)| l != i / per_layer)
        {
            return Err(ParseError::ShapeMismatch(
                "layer_of_head must list heads layer by layer".into(),
            )
            .into());
        }
        let values = payload_f32(payload, steps * heads)?
            .into_iter()
            .map(f64::from)
            .collect();
        let boundaries = if header.boundaries.is_empty() {
            vec![0]
        } else {
            header.boundaries
        };
        Self::with_boundaries(
            values,
            steps,
            layers,
            per_layer,
            header.model_id,
            header.task_label,
            boundaries,
        )
    }
}

pub(crate) fn normalize_boundaries(mut boundaries: Vec<usize>, steps: usize) -> Result<Vec<usize>> {
    if boundaries.is_empty() {
        boundaries.push(0);
    }
    if boundaries[0] != 0 {
        boundaries.insert(0, 0);
    }
    if boundaries.windows(2).any(|w| w[0] >= w[1]) || boundaries.iter().any(|&b| b >= steps) {
        return Err(Error::validation(format!(
            "boundaries {boundaries:?} must be strictly increasing and below {steps}"
        )));
    }
    Ok(boundaries)
}
