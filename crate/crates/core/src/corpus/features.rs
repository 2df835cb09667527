//! Binary feature files.
//!
//! Layout (all little-endian): magic `b"DSVS"`, `u32` version (= 1), `u32`
//! rows, `u32` cols, then `rows × cols` `f32` values in row-major order.

use std::fs;
use std::path::Path;

use super::{FeatureKind, FeatureMatrix};
use crate::error::{Error, Result};

pub const FEATURE_MAGIC: [u8; 4] = *b"DSVS";
pub const FEATURE_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn encode(matrix: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + matrix.values().len() * 4);
    out.extend_from_slice(&FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.extend_from_slice(&(matrix.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(matrix.cols() as u32).to_le_bytes());
    for v in matrix.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8], name: &str, kind: FeatureKind, path: &Path) -> Result<FeatureMatrix> {
    let bad = |reason: String| Error::FeatureFormat {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if bytes[0..4] != FEATURE_MAGIC {
        return Err(bad(format!("bad magic {:?}", &bytes[0..4])));
    }
    let word = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != FEATURE_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let rows = word(8) as usize;
    let cols = word(12) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(4))
        .ok_or_else(|| bad("dimensions overflow".into()))?;
    let body = &bytes[HEADER_LEN..];
    if body.len() != expected {
        return Err(bad(format!(
            "{rows}×{cols} needs {expected} payload bytes, found {}",
            body.len()
        )));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
        .collect();
    FeatureMatrix::new(name, kind, rows, cols, values)
}

pub fn read_feature_file(path: &Path, name: &str, kind: FeatureKind) -> Result<FeatureMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, name, kind, path)
}

pub fn write_feature_file(path: &Path, matrix: &FeatureMatrix) -> Result<()> {
    fs::write(path, encode(matrix)).map_err(|e| Error::io(path, e))
}
