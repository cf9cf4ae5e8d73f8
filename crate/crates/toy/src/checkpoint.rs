//! Model checkpoints in the `PHID` container with `kind = "checkpoint"`.
//!
//! The header holds the full config and the name and shape of every tensor;
//! the payload is the tensors in header order as f32.

use std::path::Path;

use serde_json::json;

use crate::config::ToyConfig;
use crate::model::ToyModel;
use crate::params::Params;
use phid_core::error::ParseError;
use phid_core::traces::container;
use phid_core::{Error, Result};

pub const KIND_CHECKPOINT: &str = "checkpoint";

pub fn encode_checkpoint(model: &ToyModel) -> Vec<u8> {
    let tensors: Vec<_> = model
        .params
        .infos()
        .into_iter()
        .map(|i| json!({"name": i.name, "shape": i.shape}))
        .collect();
    let header = json!({
        "version": container::FORMAT_VERSION,
        "kind": KIND_CHECKPOINT,
        "config": model.config,
        "tensors": tensors,
    });
    let slices = model.params.slices();
    container::encode(&header, slices.into_iter().flatten().map(|&x| x as f32))
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<ToyModel> {
    let (header, payload) = container::split(bytes)?;
    let bad = |m: String| Error::from(ParseError::Header(m));
    if header.get("kind").and_then(|k| k.as_str()) != Some(KIND_CHECKPOINT) {
        return Err(bad(format!("expected kind {KIND_CHECKPOINT:?}, header {header}")));
    }
    let config: ToyConfig = serde_json::from_value(header.get("config").cloned().unwrap_or_default())
        .map_err(|e| bad(format!("bad config: {e}")))?;
    config.validate()?;
    let mut model = ToyModel::new(config)?;
    let infos = model.params.infos();
    let declared = header
        .get("tensors")
        .and_then(|t| t.as_array())
        .ok_or_else(|| bad("missing tensor list".into()))?;
    if declared.len() != infos.len() {
        return Err(Error::from(ParseError::ShapeMismatch(format!(
            "{} tensors declared, config implies {}",
            declared.len(),
            infos.len()
        ))));
    }
    for (d, i) in declared.iter().zip(&infos) {
        let shape: Vec<usize> = serde_json::from_value(d.get("shape").cloned().unwrap_or_default())
            .map_err(|e| bad(format!("bad shape: {e}")))?;
        if d.get("name").and_then(|n| n.as_str()) != Some(i.name.as_str()) || shape != i.shape {
            return Err(Error::from(ParseError::ShapeMismatch(format!(
                "tensor {d} does not match {} {:?}",
                i.name, i.shape
            ))));
        }
    }
    let values = container::payload_f32(payload, model.params.count())?;
    let mut it = values.into_iter();
    for s in model.params.slices_mut() {
        s.iter_mut().for_each(|x| *x = it.next().expect("count checked") as f64);
    }
    let params: Params = model.params;
    model = ToyModel::from_params(model.config, params)?;
    Ok(model)
}

pub fn save_checkpoint(model: &ToyModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ToyModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}
