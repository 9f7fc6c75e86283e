//! Run configuration: a TOML file plus `--set key=value` overrides.

use std::fs;
use std::path::{Path, PathBuf};

use mmtmlp::bench::{grid_product, CpuConfig, GridPoint, SweepConfig};
use mmtmlp::dataset::{check_augmentations, Augmentation, SplitConfig, SynthSpec};
use mmtmlp::model::{ModelConfig, ModelKind, RgbBackend, TrainConfig};
use mmtmlp::sampling::RateConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every key with its default. Printed by `--help` and by `mmtmlp config`.
pub const CONFIG_REFERENCE: &str = r#"CONFIGURATION
  A TOML file passed with --config; any key can be overridden with
  --set section.key=value (values use TOML syntax, bare words are strings).
  Unknown keys are rejected. Relative paths resolve against the working
  directory.

  [dataset]
    path = "data"                   dataset root (written by synth, read by the rest)
  [dataset.synth]                   synthetic generator
    n_takes = 24                    takes (must be >= 1)
    frames_per_take = 600           native frames per take
    n_verbs = 4                     verbs, encoded in right-hand finger motion only
    n_objects = 3                   objects, encoded in RGB features only
    motion_noise = 0.08             per-joint flexion noise, radians
    feature_noise = 0.3             per-dimension RGB feature noise
    feature_dim = 32                RGB feature width
    left_dropout = 0.1              probability that the left hand is missing
    seed = 0
  [normalize]
    reference_lengths = ""          bone-length file (parent child length); empty
                                    means per-edge means over the training takes
    unit_lengths = false            use unit bone lengths instead
  [model]
    kind = "mm_tmlp"                rgb_seq | mm_tmlp | fusion_net | hp_mlp
    n_actions = <from dataset>      classes including background
    rgb_backend = "precomputed"     precomputed | reference
    d_rgb = 512                     RGB feature width per frame; train and sweep
                                    take it from the dataset unless set
    d_hp = 128                      hand-pose feature width per frame
    hp_hidden = 256                 hand-pose extractor hidden width
    head_hidden = 256               classifier hidden width
    activation = "gelu"             gelu | relu
  [model.temporal]
    depth = 2                       Temporal MLP blocks per stream
    time_hidden_ratio = 2.0
    channel_hidden_ratio = 2.0
    activation = "gelu"
  [model.reference]                 reference RGB extractor (image input)
    channels = 3
    height = 32
    width = 32
    patch = 4                       square patch side; must divide height and width
    hidden = 256                    per-patch MLP width; patch outputs are averaged
  [rates]
    native_hz = 30.0
    f_rgb = 30.0                    0 disables the RGB stream
    f_hp = 30.0                     0 disables the hand-pose stream
    window_seconds = 2.0
  [grid]                            sweep points: kinds x f_rgb x f_hp, plus points
    kinds = ["mm_tmlp"]
    f_rgb = []
    f_hp = []
    points = []                     e.g. [{ kind = "rgb_seq", f_rgb = 30.0, f_hp = 0.0 }]
  [train]
    epochs = 20
    batch_size = 32
    lr = 0.001
    beta1 = 0.9
    beta2 = 0.999
    eps = 1e-8
    seed = 0
    parallel = true                 batch-parallel gradients (results are identical)
  [augment]
    ops = []                        flip | jitter[:max] | keypoint_noise:std | feature_dropout:p
    copies = 0                      augmented copies of each training window
  [split]
    val_fraction = 0.25             share of takes held out
    seed = 0
    stride = 5                      native frames between window ends
    background_keep = 1.0           share of background training windows kept
  [bench]
    reps = 15                       measured repetitions (>= 5)
    warmup = 3
    threads = 1                     must be 1
    source = "measured"             measured | model (MACs / macs_per_second, noise free)
    macs_per_second = 1e9
    min_rep_seconds = 0.002         repeat short forwards until a rep lasts this long
    seed = 0
  [output]
    dir = "runs"                    all command outputs go here
"#;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DatasetSection {
    pub path: PathBuf,
    pub synth: SynthSpec,
}

impl Default for DatasetSection {
    fn default() -> Self {
        Self {
            path: PathBuf::from("data"),
            synth: SynthSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NormalizeSection {
    pub reference_lengths: Option<PathBuf>,
    pub unit_lengths: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointSpec {
    pub kind: ModelKind,
    pub f_rgb: f64,
    pub f_hp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub kinds: Vec<ModelKind>,
    pub f_rgb: Vec<f64>,
    pub f_hp: Vec<f64>,
    pub points: Vec<PointSpec>,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            kinds: vec![ModelKind::MmTmlp],
            f_rgb: Vec::new(),
            f_hp: Vec::new(),
            points: Vec::new(),
        }
    }
}

impl GridSection {
    pub fn points(&self) -> Vec<GridPoint> {
        let mut g = grid_product(&self.kinds, &self.f_rgb, &self.f_hp);
        g.extend(
            self.points
                .iter()
                .map(|p| GridPoint::new(p.kind, p.f_rgb, p.f_hp)),
        );
        g
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentSection {
    pub ops: Vec<String>,
    pub copies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("runs"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dataset: DatasetSection,
    pub normalize: NormalizeSection,
    pub model: ModelConfig,
    pub rates: RateConfig,
    pub grid: GridSection,
    pub train: TrainConfig,
    pub augment: AugmentSection,
    pub split: SplitConfig,
    pub bench: CpuConfig,
    pub output: OutputSection,
    /// True when `model.n_actions` was given explicitly.
    #[serde(skip)]
    pub n_actions_set: bool,
    /// True when `model.d_rgb` was given explicitly.
    #[serde(skip)]
    pub d_rgb_set: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSection::default(),
            normalize: NormalizeSection::default(),
            model: ModelConfig::default(),
            rates: RateConfig::default(),
            grid: GridSection::default(),
            train: TrainConfig::default(),
            augment: AugmentSection::default(),
            split: SplitConfig::default(),
            bench: CpuConfig::default(),
            output: OutputSection::default(),
            n_actions_set: false,
            d_rgb_set: false,
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Parses `value` as a TOML value, falling back to a plain string.
fn parse_value(value: &str) -> toml::Value {
    let doc = format!("v = {value}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key just written"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

/// Applies one `a.b.c=value` override to `table`.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), CliError> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| config_err(format!("override {assignment:?} is not key=value")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(config_err(format!("bad key {key:?}")));
    }
    let mut t = table;
    for p in &parts[..parts.len() - 1] {
        let entry = t
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry
            .as_table_mut()
            .ok_or_else(|| config_err(format!("{key}: {p} is not a table")))?;
    }
    t.insert(
        parts[parts.len() - 1].to_string(),
        parse_value(value.trim()),
    );
    Ok(())
}

impl RunConfig {
    /// Reads `path` (or starts empty), applies overrides, deserializes and
    /// validates every section.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self, CliError> {
        let mut table = match path {
            Some(p) => fs::read_to_string(p)
                .map_err(|e| config_err(format!("{}: {e}", p.display())))?
                .parse::<toml::Table>()
                .map_err(|e| config_err(format!("{}: {e}", p.display())))?,
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let model = table.get("model").and_then(|m| m.as_table());
        let (n_actions_set, d_rgb_set) = (
            model.is_some_and(|m| m.contains_key("n_actions")),
            model.is_some_and(|m| m.contains_key("d_rgb")),
        );
        let mut cfg: RunConfig = toml::Value::Table(table).try_into().map_err(config_err)?;
        cfg.n_actions_set = n_actions_set;
        cfg.d_rgb_set = d_rgb_set;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.dataset.synth.validate()?;
        self.rates.validate()?;
        self.train.validate()?;
        self.split.validate()?;
        self.bench.validate()?;
        if self.n_actions_set {
            self.model.validate()?;
        } else {
            ModelConfig {
                n_actions: 2,
                ..self.model
            }
            .validate()?;
        }
        self.check_augment_for(self.model.kind)?;
        if self.normalize.unit_lengths && self.normalize.reference_lengths.is_some() {
            return Err(config_err(
                "normalize.unit_lengths and normalize.reference_lengths are exclusive",
            ));
        }
        Ok(())
    }

    pub fn augmentations(&self) -> Result<Vec<Augmentation>, CliError> {
        self.augment
            .ops
            .iter()
            .map(|s| s.parse::<Augmentation>().map_err(CliError::from))
            .collect()
    }

    /// Modality-private augmentations are refused for two-stream kinds.
    pub fn check_augment_for(&self, kind: ModelKind) -> Result<(), CliError> {
        let ops = self.augmentations()?;
        Ok(check_augmentations(
            &ops,
            kind.uses_rgb() && kind.uses_hp(),
        )?)
    }

    /// Sweep settings with `n_actions` and, for precomputed features,
    /// `d_rgb` resolved against the dataset.
    pub fn sweep_config(&self, n_actions: usize, rgb_dim: usize) -> Result<SweepConfig, CliError> {
        let mut model = self.model;
        if model.rgb_backend == RgbBackend::Precomputed {
            if !self.d_rgb_set {
                model.d_rgb = rgb_dim;
            } else if model.d_rgb != rgb_dim {
                return Err(CliError::Data(format!(
                    "model.d_rgb = {} but the dataset stores {rgb_dim}-wide RGB features",
                    model.d_rgb
                )));
            }
        }
        if !self.n_actions_set {
            model.n_actions = n_actions;
        } else if model.n_actions < n_actions {
            return Err(CliError::Data(format!(
                "model.n_actions = {} but the dataset has {n_actions} classes",
                model.n_actions
            )));
        }
        Ok(SweepConfig {
            model,
            rates: self.rates,
            train: self.train,
            split: self.split,
            cpu: self.bench,
            augment: self.augmentations()?,
            augment_copies: self.augment.copies,
            checkpoint_dir: None,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).unwrap_or_else(|e| format!("# cannot render config: {e}\n"))
    }
}
