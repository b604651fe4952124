//! Flat binary feature cache.
//!
//! Layout, all little-endian:
//!
//! | offset | size  | field                         |
//! |--------|-------|-------------------------------|
//! | 0      | 4     | magic `XVFT`                  |
//! | 4      | 8     | `T`, frame count (u64)        |
//! | 12     | 8     | column count, always 40 (u64) |
//! | 20     | 8·T·40| frames, row-major `f64`       |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::numcore::Matrix;

use super::logmel::{FeatureSequence, N_MELS};

pub const FEATURE_MAGIC: &[u8; 4] = b"XVFT";
const HEADER_LEN: usize = 20;

pub fn encode_features(f: &FeatureSequence) -> Vec<u8> {
    let m = &f.frames;
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * m.len());
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for v in m.as_slice() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_features(bytes: &[u8], source: &str) -> Result<FeatureSequence> {
    let bad = |d: &str| Error::format(source, d.to_string());
    if bytes.len() < HEADER_LEN || &bytes[..4] != FEATURE_MAGIC {
        return Err(bad("missing XVFT header"));
    }
    let t = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[12..20].try_into().unwrap()) as usize;
    if cols != N_MELS {
        return Err(bad(&format!("{cols} columns, expected {N_MELS}")));
    }
    let body = &bytes[HEADER_LEN..];
    if t.checked_mul(cols * 8) != Some(body.len()) {
        return Err(bad("body length does not match header"));
    }
    let data = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureSequence::new(Matrix::from_vec(t, cols, data)?, source)
}

pub fn write_features(path: &Path, f: &FeatureSequence) -> Result<()> {
    fs::write(path, encode_features(f))?;
    Ok(())
}

pub fn read_features(path: &Path) -> Result<FeatureSequence> {
    let bytes = fs::read(path)?;
    let source = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_features(&bytes, &source).map_err(|e| match e {
        Error::Format { detail, .. } => Error::format(path, detail),
        other => other,
    })
}
