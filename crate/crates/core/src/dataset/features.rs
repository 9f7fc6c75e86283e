//! Precomputed per-frame RGB feature files.
//!
//! Little-endian layout:
//!
//! | offset | size | field                         |
//! |--------|------|-------------------------------|
//! | 0      | 4    | magic `b"RGBF"`               |
//! | 4      | 4    | version, `u32` = 1            |
//! | 8      | 4    | `n_frames`, `u32`             |
//! | 12     | 4    | `dim`, `u32`                  |
//! | 16     | 4·n·d | `n_frames × dim` `f32` values, row-major |

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::Matrix;

pub const FEATURE_MAGIC: [u8; 4] = *b"RGBF";
pub const FEATURE_VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

pub fn encode_features(features: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * features.data().len());
    out.extend_from_slice(&FEATURE_MAGIC);
    out.extend_from_slice(&FEATURE_VERSION.to_le_bytes());
    out.extend_from_slice(&(features.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(features.cols() as u32).to_le_bytes());
    for &v in features.data() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_features(bytes: &[u8], path: &Path) -> Result<Matrix> {
    let bad = |msg: String| Error::Data(format!("{}: {msg}", path.display()));
    if bytes.len() < HEADER_LEN {
        return Err(bad(format!(
            "{} bytes is shorter than the header",
            bytes.len()
        )));
    }
    if bytes[..4] != FEATURE_MAGIC {
        return Err(bad("bad magic, not an RGB feature file".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let version = word(4);
    if version != FEATURE_VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let (n, d) = (word(8) as usize, word(12) as usize);
    let expected = HEADER_LEN + 4 * n * d;
    if bytes.len() != expected {
        return Err(bad(format!(
            "{n} frames of dim {d} need {expected} bytes, file has {}",
            bytes.len()
        )));
    }
    let data = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")) as f64)
        .collect();
    Matrix::from_vec(n, d, data)
}

pub fn write_feature_file(path: &Path, features: &Matrix) -> Result<()> {
    fs::write(path, encode_features(features)).map_err(|e| Error::io(path, e))
}

pub fn read_feature_file(path: &Path) -> Result<Matrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_features(&bytes, path)
}
