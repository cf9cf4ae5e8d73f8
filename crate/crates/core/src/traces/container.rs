//! The `PHID` binary container shared by traces and model checkpoints.

use crate::error::ParseError;
use crate::Result;

pub const MAGIC: &[u8; 4] = b"PHID";
pub const FORMAT_VERSION: u8 = 1;

const PREFIX_LEN: usize = 4 + 1 + 4;

/// Encode a JSON header and an f32 payload.
pub fn encode(header: &serde_json::Value, payload: impl IntoIterator<Item = f32>) -> Vec<u8> {
    let header = serde_json::to_vec(header).expect("JSON value serializes");
    let payload = payload.into_iter();
    let mut out = Vec::with_capacity(PREFIX_LEN + header.len() + 4 * payload.size_hint().0);
    out.extend_from_slice(MAGIC);
    out.push(FORMAT_VERSION);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Split container bytes into the parsed header and the raw payload bytes.
pub fn split(bytes: &[u8]) -> Result<(serde_json::Value, &[u8])> {
    if bytes.len() < PREFIX_LEN {
        return Err(ParseError::Truncated {
            section: "prefix",
            expected: PREFIX_LEN,
            actual: bytes.len(),
        }
        .into());
    }
    let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
    if &magic != MAGIC {
        return Err(ParseError::BadMagic { found: magic }.into());
    }
    if bytes[4] != FORMAT_VERSION {
        return Err(ParseError::UnsupportedVersion(bytes[4]).into());
    }
    let header_len = u32::from_le_bytes(bytes[5..9].try_into().expect("4 bytes")) as usize;
    let rest = &bytes[PREFIX_LEN..];
    if rest.len() < header_len {
        return Err(ParseError::Truncated {
            section: "header",
            expected: header_len,
            actual: rest.len(),
        }
        .into());
    }
    let header = std::str::from_utf8(&rest[..header_len])
        .map_err(|e| ParseError::Header(format!("header is not UTF-8: {e}")))?;
    let header: serde_json::Value =
        serde_json::from_str(header).map_err(|e| ParseError::Header(e.to_string()))?;
    if !header.is_object() {
        return Err(ParseError::Header("header is not a JSON object".into()).into());
    }
    Ok((header, &rest[header_len..]))
}

/// Decode exactly `count` little-endian f32 values.
pub fn payload_f32(payload: &[u8], count: usize) -> Result<Vec<f32>> {
    let expected = count * 4;
    if payload.len() < expected {
        return Err(ParseError::Truncated {
            section: "payload",
            expected,
            actual: payload.len(),
        }
        .into());
    }
    if payload.len() > expected {
        return Err(ParseError::ShapeMismatch(format!(
            "payload has {} bytes, header declares {expected}",
            payload.len()
        ))
        .into());
    }
    Ok(payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect())
}
