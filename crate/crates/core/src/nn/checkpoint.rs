//! Versioned JSON checkpoints.
//!
//! ```json
//! {
//!   "format": "mmtmlp-checkpoint",
//!   "version": 1,
//!   "header": { ... },
//!   "params": [ { "name": "head.fc1.weight", "shape": [64, 160], "data": [ ... ] }, ... ]
//! }
//! ```
//!
//! `header` is caller-defined (model kind and dimensions for model
//! checkpoints). `params` lists arrays in the owner's traversal order; `data`
//! is row-major. Values are written with shortest round-trip formatting, so a
//! save/load cycle is bit-exact.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::params::Parameters;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "mmtmlp-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedArray {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<H> {
    pub format: String,
    pub version: u32,
    pub header: H,
    pub params: Vec<NamedArray>,
}

impl<H: Serialize + DeserializeOwned> Checkpoint<H> {
    pub fn capture<P: Parameters>(header: H, params: &P) -> Self {
        let mut arrays = Vec::new();
        params.visit("", &mut |name, shape, data| {
            arrays.push(NamedArray {
                name: name.to_string(),
                shape: shape.to_vec(),
                data: data.to_vec(),
            })
        });
        Self {
            format: CHECKPOINT_FORMAT.to_string(),
            version: CHECKPOINT_VERSION,
            header,
            params: arrays,
        }
    }

    /// Copies stored arrays into `params`; names and shapes must match exactly.
    pub fn restore<P: Parameters>(&self, params: &mut P) -> Result<()> {
        let mut idx = 0;
        let mut err = None;
        params.visit_mut("", &mut |name, shape, data| {
            if err.is_some() {
                return;
            }
            match self.params.get(idx) {
                Some(a) if a.name == name && a.shape == shape && a.data.len() == data.len() => {
                    data.copy_from_slice(&a.data)
                }
                Some(a) => {
                    err = Some(Error::Dimension(format!(
                        "checkpoint array {idx} is {} {:?}, model expects {name} {shape:?}",
                        a.name, a.shape
                    )))
                }
                None => err = Some(Error::Data(format!("checkpoint is missing array {name}"))),
            }
            idx += 1;
        });
        if let Some(e) = err {
            return Err(e);
        }
        if idx != self.params.len() {
            return Err(Error::Data(format!(
                "checkpoint has {} arrays, model has {idx}",
                self.params.len()
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(self).map_err(|e| Error::Serde(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let ckpt: Self = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        if ckpt.format != CHECKPOINT_FORMAT || ckpt.version != CHECKPOINT_VERSION {
            return Err(Error::Data(format!(
                "{}: unsupported checkpoint {} v{}",
                path.display(),
                ckpt.format,
                ckpt.version
            )));
        }
        Ok(ckpt)
    }
}
