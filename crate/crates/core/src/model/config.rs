use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::Activation;

/// The four model families compared in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    /// RGB stream only, with temporal mixing.
    RgbSeq,
    /// Both streams with temporal mixing.
    MmTmlp,
    /// Single-frame fusion of both extractors.
    FusionNet,
    /// Single-frame hand-pose MLP.
    HpMlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::RgbSeq,
        ModelKind::MmTmlp,
        ModelKind::FusionNet,
        ModelKind::HpMlp,
    ];

    pub fn uses_rgb(self) -> bool {
        !matches!(self, ModelKind::HpMlp)
    }

    pub fn uses_hp(self) -> bool {
        !matches!(self, ModelKind::RgbSeq)
    }

    pub fn is_sequence(self) -> bool {
        matches!(self, ModelKind::RgbSeq | ModelKind::MmTmlp)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::RgbSeq => "rgb_seq",
            ModelKind::MmTmlp => "mm_tmlp",
            ModelKind::FusionNet => "fusionnet",
            ModelKind::HpMlp => "hp_mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown model kind {s:?}")))
    }
}

/// Backend producing per-frame RGB features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RgbBackend {
    /// Inputs already are feature vectors; passed through unchanged.
    Precomputed,
    /// Patch-flatten a small image, run a two-layer MLP on every patch and
    /// average the results.
    Reference,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReferenceExtractorConfig {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub patch: usize,
    pub hidden: usize,
}

impl Default for ReferenceExtractorConfig {
    fn default() -> Self {
        Self {
            channels: 3,
            height: 32,
            width: 32,
            patch: 4,
            hidden: 256,
        }
    }
}

impl ReferenceExtractorConfig {
    pub fn input_dim(&self) -> usize {
        self.channels * self.height * self.width
    }

    /// Values in one flattened patch.
    pub fn patch_dim(&self) -> usize {
        self.channels * self.patch * self.patch
    }

    pub fn patches(&self) -> usize {
        (self.height / self.patch) * (self.width / self.patch)
    }

    /// Mirrors a flattened `C×H×W` image left-to-right in place.
    pub fn flip_image(&self, image: &mut [f64]) {
        let (c, h, w) = (self.channels, self.height, self.width);
        for ch in 0..c {
            for y in 0..h {
                image[ch * h * w + y * w..ch * h * w + (y + 1) * w].reverse();
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels == 0 || self.height == 0 || self.width == 0 || self.hidden == 0 {
            return Err(Error::Config("reference extractor dims must be > 0".into()));
        }
        if self.patch == 0 || self.height % self.patch != 0 || self.width % self.patch != 0 {
            return Err(Error::Config(format!(
                "patch size {} must divide the {}x{} image",
                self.patch, self.height, self.width
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemporalMlpConfig {
    pub depth: usize,
    pub time_hidden_ratio: f64,
    pub channel_hidden_ratio: f64,
    pub activation: Activation,
}

impl Default for TemporalMlpConfig {
    fn default() -> Self {
        Self {
            depth: 2,
            time_hidden_ratio: 2.0,
            channel_hidden_ratio: 2.0,
            activation: Activation::Gelu,
        }
    }
}

impl TemporalMlpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.time_hidden_ratio > 0.0 && self.channel_hidden_ratio > 0.0) {
            return Err(Error::Config("temporal hidden ratios must be > 0".into()));
        }
        Ok(())
    }
}

pub(crate) fn hidden_width(dim: usize, ratio: f64) -> usize {
    ((dim as f64 * ratio).round() as usize).max(1)
}

/// Architecture of one model. Sequence lengths come from the rate config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub kind: ModelKind,
    /// Number of action classes, background included.
    pub n_actions: usize,
    pub rgb_backend: RgbBackend,
    pub d_rgb: usize,
    pub d_hp: usize,
    pub hp_hidden: usize,
    pub head_hidden: usize,
    pub activation: Activation,
    pub temporal: TemporalMlpConfig,
    pub reference: ReferenceExtractorConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            kind: ModelKind::MmTmlp,
            n_actions: 37,
            rgb_backend: RgbBackend::Precomputed,
            d_rgb: 512,
            d_hp: 128,
            hp_hidden: 256,
            head_hidden: 256,
            activation: Activation::Gelu,
            temporal: TemporalMlpConfig::default(),
            reference: ReferenceExtractorConfig::default(),
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_actions < 2 {
            return Err(Error::Config(format!(
                "n_actions must be >= 2, got {}",
                self.n_actions
            )));
        }
        for (name, v) in [
            ("d_rgb", self.d_rgb),
            ("d_hp", self.d_hp),
            ("hp_hidden", self.hp_hidden),
            ("head_hidden", self.head_hidden),
        ] {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        self.temporal.validate()?;
        if self.rgb_backend == RgbBackend::Reference {
            self.reference.validate()?;
        }
        Ok(())
    }

    /// Length of one RGB input row for the configured backend.
    pub fn rgb_input_dim(&self) -> usize {
        match self.rgb_backend {
            RgbBackend::Precomputed => self.d_rgb,
            RgbBackend::Reference => self.reference.input_dim(),
        }
    }

    /// Horizontal-flip hook for one RGB input row. Precomputed features
    /// have no spatial layout left to flip and stay unchanged.
    pub fn flip_rgb_input(&self, row: &mut [f64]) {
        if self.rgb_backend == RgbBackend::Reference {
            self.reference.flip_image(row);
        }
    }

    pub fn with_kind(self, kind: ModelKind) -> Self {
        Self { kind, ..self }
    }
}
