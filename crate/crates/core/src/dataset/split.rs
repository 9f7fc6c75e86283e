//! Take-level train/val split and window enumeration.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::augment::{augment, check_augmentations, Augmentation};
use super::labels::BACKGROUND;
use super::take::{PreparedTake, Take};
use crate::error::{Error, Result};
use crate::handpose::{Point, SkeletonTopology};
use crate::sampling::{build_window, MultiRateWindow, RateConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    /// Fraction of takes held out for validation.
    pub val_fraction: f64,
    pub seed: u64,
    /// Native frames between consecutive window ends.
    pub stride: usize,
    /// Probability of keeping a background-labeled training window.
    pub background_keep: f64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            val_fraction: 0.25,
            seed: 0,
            stride: 5,
            background_keep: 1.0,
        }
    }
}

impl SplitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config(format!(
                "val_fraction must lie in [0, 1), got {}",
                self.val_fraction
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.background_keep) {
            return Err(Error::Config(format!(
                "background_keep must lie in [0, 1], got {}",
                self.background_keep
            )));
        }
        Ok(())
    }
}

/// Shuffles take indices with the split seed and holds out
/// `round(val_fraction * n)` of them, keeping at least one training take.
/// Both halves come back sorted.
pub fn split_takes(n_takes: usize, cfg: &SplitConfig) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n_takes).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let mut n_val = (cfg.val_fraction * n_takes as f64).round() as usize;
    if cfg.val_fraction > 0.0 && n_takes >= 2 {
        n_val = n_val.max(1);
    }
    n_val = n_val.min(n_takes.saturating_sub(1));
    let mut val = idx[..n_val].to_vec();
    let mut train = idx[n_val..].to_vec();
    val.sort_unstable();
    train.sort_unstable();
    (train, val)
}

/// Every window ending at `w-1, w-1+stride, ...`.
pub fn enumerate_windows(
    take: &PreparedTake,
    cfg: &RateConfig,
    stride: usize,
) -> Result<Vec<MultiRateWindow>> {
    let w = cfg.window_frames();
    let streams = take.streams();
    (w.saturating_sub(1)..take.n_frames())
        .step_by(stride.max(1))
        .map(|end| build_window(&streams, end, cfg))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowSets {
    pub train: Vec<MultiRateWindow>,
    pub val: Vec<MultiRateWindow>,
    pub train_takes: Vec<String>,
    pub val_takes: Vec<String>,
}

pub fn split_and_window(
    takes: &[PreparedTake],
    cfg: &RateConfig,
    split: &SplitConfig,
) -> Result<WindowSets> {
    split.validate()?;
    cfg.validate()?;
    let shortest = takes
        .iter()
        .map(PreparedTake::n_frames)
        .min()
        .ok_or_else(|| Error::Config("no takes to split".into()))?;
    let w = cfg.window_frames();
    if w > shortest {
        return Err(Error::Config(format!(
            "window of {w} frames is longer than the shortest take ({shortest} frames)"
        )));
    }
    let (train_idx, val_idx) = split_takes(takes.len(), split);
    let mut rng = ChaCha8Rng::seed_from_u64(split.seed ^ 0xb4c6);
    let mut train = Vec::new();
    for &i in &train_idx {
        for win in enumerate_windows(&takes[i], cfg, split.stride)? {
            // always draw so the kept set is stable across background_keep values
            let keep = rng.gen::<f64>() < split.background_keep;
            if win.label != BACKGROUND || keep {
                train.push(win);
            }
        }
    }
    let mut val = Vec::new();
    for &i in &val_idx {
        val.extend(enumerate_windows(&takes[i], cfg, split.stride)?);
    }
    Ok(WindowSets {
        train,
        val,
        train_takes: train_idx.iter().map(|&i| takes[i].id.clone()).collect(),
        val_takes: val_idx.iter().map(|&i| takes[i].id.clone()).collect(),
    })
}

/// Appends `copies` augmented versions of every training window. Each copy
/// draws its own seed from `seed`.
pub fn augment_training_set(
    takes: &[PreparedTake],
    windows: &mut Vec<MultiRateWindow>,
    cfg: &RateConfig,
    ops: &[Augmentation],
    copies: usize,
    rgb_flip: &dyn Fn(&mut [f64]),
    seed: u64,
) -> Result<()> {
    if ops.is_empty() || copies == 0 {
        return Ok(());
    }
    if let Some(w) = windows.first() {
        check_augmentations(ops, w.is_multimodal())?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let originals = windows.len();
    for _ in 0..copies {
        for i in 0..originals {
            let take = takes
                .iter()
                .find(|t| t.id == windows[i].source.take)
                .ok_or_else(|| {
                    Error::Data(format!(
                        "window from unknown take {}",
                        windows[i].source.take
                    ))
                })?;
            let aug = augment(&take.streams(), &windows[i], cfg, ops, rgb_flip, rng.gen())?;
            windows.push(aug);
        }
    }
    Ok(())
}

/// Per-edge mean bone length over all valid hands of `takes`.
pub fn compute_reference_lengths<'a>(
    takes: impl IntoIterator<Item = &'a Take>,
) -> Result<Vec<f64>> {
    let topo = SkeletonTopology::hand_unit();
    let hands: Vec<&[Point]> = takes
        .into_iter()
        .flat_map(|t| t.hp_frames.iter())
        .flat_map(|f| {
            [(f.left_valid, &f.left), (f.right_valid, &f.right)]
                .into_iter()
                .filter(|(v, _)| *v)
                .map(|(_, h)| h.as_slice())
        })
        .collect();
    topo.mean_lengths(hands)
}
