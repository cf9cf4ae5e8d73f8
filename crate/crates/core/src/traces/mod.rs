//! Activation traces and their on-disk format.
//!
//! A trace file is a `PHID` container:
//!
//! | bytes            | content                                        |
//! |------------------|------------------------------------------------|
//! | 4                | magic `PHID`                                   |
//! | 1                | format version, `1`                            |
//! | 4                | header length `n`, u32 little-endian           |
//! | n                | UTF-8 JSON header                              |
//! | rest             | payload, f32 little-endian                     |
//!
//! The header object carries `version`, `kind`, `dims`, `layer_of_head`,
//! `model_id`, `task_label` and `boundaries` (first step of every
//! concatenated prompt). Head-norm traces (`kind = "head_norms"`) have
//! `dims = [T, N]` and a row-major `T × N` payload. Residual traces
//! (`kind = "residual"`) have `dims = [T, L, d_model]` and store `h`
//! (`T × (L+1) × d_model`), then `a` and `m` (each `T × L × d_model`).

pub mod container;
mod residual;
mod tensor;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use container::{FORMAT_VERSION, MAGIC};
pub use residual::ResidualTrace;
pub use tensor::{TraceTensor, MIN_ANALYSIS_STEPS};

use crate::error::ParseError;
use crate::{Error, Result};

/// Either kind of trace stored in a `PHID` file.
#[derive(Debug, Clone, PartialEq)]
pub enum Trace {
    HeadNorms(TraceTensor),
    Residual(ResidualTrace),
}

impl From<TraceTensor> for Trace {
    fn from(t: TraceTensor) -> Self {
        Trace::HeadNorms(t)
    }
}

impl From<ResidualTrace> for Trace {
    fn from(t: ResidualTrace) -> Self {
        Trace::Residual(t)
    }
}

impl Trace {
    pub fn into_head_norms(self) -> Result<TraceTensor> {
        match self {
            Trace::HeadNorms(t) => Ok(t),
            Trace::Residual(_) => Err(Error::validation("expected a head_norms trace, found residual")),
        }
    }

    pub fn into_residual(self) -> Result<ResidualTrace> {
        match self {
            Trace::Residual(t) => Ok(t),
            Trace::HeadNorms(_) => Err(Error::validation("expected a residual trace, found head_norms")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub(crate) struct TraceHeader {
    pub version: u8,
    pub kind: String,
    pub dims: Vec<usize>,
    #[serde(default)]
    pub layer_of_head: Vec<usize>,
    #[serde(default)]
    pub model_id: String,
    #[serde(default)]
    pub task_label: String,
    #[serde(default)]
    pub boundaries: Vec<usize>,
}

pub(crate) const KIND_HEAD_NORMS: &str = "head_norms";
pub(crate) const KIND_RESIDUAL: &str = "residual";

/// Serialize a trace to container bytes.
pub fn encode_trace(trace: &Trace) -> Vec<u8> {
    let (header, payload) = match trace {
        Trace::HeadNorms(t) => t.to_parts(),
        Trace::Residual(r) => r.to_parts(),
    };
    let header = serde_json::to_value(header).expect("trace header serializes");
    container::encode(&header, payload.iter().map(|&v| v as f32))
}

/// Parse container bytes into a trace.
pub fn decode_trace(bytes: &[u8]) -> Result<Trace> {
    let (header, payload) = container::split(bytes)?;
    let header: TraceHeader =
        serde_json::from_value(header).map_err(|e| ParseError::Header(e.to_string()))?;
    if header.version != FORMAT_VERSION {
        return Err(ParseError::UnsupportedVersion(header.version).into());
    }
    match header.kind.as_str() {
        KIND_HEAD_NORMS => TraceTensor::from_parts(header, payload).map(Trace::HeadNorms),
        KIND_RESIDUAL => ResidualTrace::from_parts(header, payload).map(Trace::Residual),
        other => Err(ParseError::Header(format!("unknown trace kind {other:?}")).into()),
    }
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_trace(&bytes)
}

pub fn write_trace(trace: &Trace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_trace(trace)).map_err(|e| Error::io(path, e))
}
