//! Window augmentations.
//!
//! Shared ops (flip, temporal jitter) act on both modalities consistently
//! and are always allowed. Modality-private ops (keypoint noise, feature
//! dropout) would break cross-modal consistency, so they are refused on
//! windows that carry both streams.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::handpose::NormalizedHandFrame;
use crate::sampling::{build_window, MultiRateWindow, NativeStreams, RateConfig};

/// Largest temporal jitter, in native frames.
pub const MAX_JITTER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Augmentation {
    /// Mirror left/right on both streams.
    Flip,
    /// Move the window end by a uniform draw from `[-max, max]` frames.
    Jitter(usize),
    /// Gaussian noise on valid keypoints (hand-pose-only runs).
    KeypointNoise(f64),
    /// Zero each RGB input value with this probability (RGB-only runs).
    FeatureDropout(f64),
}

impl Augmentation {
    pub fn is_shared(&self) -> bool {
        matches!(self, Augmentation::Flip | Augmentation::Jitter(_))
    }
}

impl fmt::Display for Augmentation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Augmentation::Flip => write!(f, "flip"),
            Augmentation::Jitter(m) => write!(f, "jitter:{m}"),
            Augmentation::KeypointNoise(s) => write!(f, "keypoint_noise:{s}"),
            Augmentation::FeatureDropout(p) => write!(f, "feature_dropout:{p}"),
        }
    }
}

/// Parses `flip`, `jitter[:max]`, `keypoint_noise:std`, `feature_dropout:p`.
impl FromStr for Augmentation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let num = |a: Option<&str>| -> Result<f64> {
            a.ok_or_else(|| {
                Error::Config(format!(
                    "augmentation {name:?} needs a value, e.g. {name}:0.1"
                ))
            })?
            .parse::<f64>()
            .map_err(|e| Error::Config(format!("augmentation {s:?}: {e}")))
        };
        match name {
            "flip" if arg.is_none() => Ok(Augmentation::Flip),
            "jitter" => {
                let max = match arg {
                    None => MAX_JITTER,
                    Some(a) => a.parse().map_err(|e| Error::Config(format!("augmentation {s:?}: {e}")))?,
                };
                if max > MAX_JITTER {
                    return Err(Error::Config(format!("jitter is limited to {MAX_JITTER} frames, got {max}")));
                }
                Ok(Augmentation::Jitter(max))
            }
            "keypoint_noise" => {
                let v = num(arg)?;
                if !(v >= 0.0) {
                    return Err(Error::Config(format!("keypoint noise must be >= 0, got {v}")));
                }
                Ok(Augmentation::KeypointNoise(v))
            }
            "feature_dropout" => {
                let v = num(arg)?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::Config(format!("dropout must lie in [0, 1], got {v}")));
                }
                Ok(Augmentation::FeatureDropout(v))
            }
            _ => Err(Error::Config(format!(
                "unknown augmentation {s:?}; expected flip, jitter[:max], keypoint_noise:std or feature_dropout:p"
            ))),
        }
    }
}

/// Refuses private ops on multimodal windows.
pub fn check_augmentations(ops: &[Augmentation], multimodal: bool) -> Result<()> {
    if multimodal {
        if let Some(op) = ops.iter().find(|o| !o.is_shared()) {
            return Err(Error::Config(format!(
                "augmentation {op} is modality-private and not allowed when both streams are used"
            )));
        }
    }
    Ok(())
}

/// Rebuilds `window` with its end moved by `delta` native frames. The label
/// is read at the new end.
pub fn shift_window(
    streams: &NativeStreams<'_>,
    window: &MultiRateWindow,
    cfg: &RateConfig,
    delta: isize,
) -> Result<MultiRateWindow> {
    let end = window.source.end as isize + delta;
    if end < 0 {
        return Err(Error::WindowBounds(format!(
            "shift by {delta} moves the window before frame 0"
        )));
    }
    let shifted = build_window(streams, end as usize, cfg)?;
    Ok(shifted.restrict(window.rgb.is_some(), window.hp.is_some()))
}

/// Mirrors both streams. `rgb_flip` is the RGB backend's flip hook.
pub fn flip_window(window: &MultiRateWindow, rgb_flip: &dyn Fn(&mut [f64])) -> MultiRateWindow {
    let mut out = window.clone();
    if let Some(rgb) = &mut out.rgb {
        for r in 0..rgb.rows() {
            rgb_flip(rgb.row_mut(r));
        }
    }
    if let Some(hp) = &mut out.hp {
        hp.iter_mut().for_each(|f| *f = f.flipped());
    }
    out
}

/// Applies `ops` in order. Jitter needs the take's native streams; the
/// shift is clamped so the window stays inside the take.
pub fn augment(
    streams: &NativeStreams<'_>,
    window: &MultiRateWindow,
    cfg: &RateConfig,
    ops: &[Augmentation],
    rgb_flip: &dyn Fn(&mut [f64]),
    seed: u64,
) -> Result<MultiRateWindow> {
    check_augmentations(ops, window.is_multimodal())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = window.clone();
    for op in ops {
        out = match *op {
            Augmentation::Flip => flip_window(&out, rgb_flip),
            Augmentation::Jitter(max) => {
                let w = cfg.window_frames() as isize;
                let end = out.source.end as isize;
                let lo = (-(max as isize)).max(w - 1 - end);
                let hi = (max as isize).min(streams.len() as isize - 1 - end);
                let delta = if lo <= hi { rng.gen_range(lo..=hi) } else { 0 };
                shift_window(streams, &out, cfg, delta)?
            }
            Augmentation::KeypointNoise(std) => {
                let noise = Normal::new(0.0, std).map_err(|e| Error::Config(e.to_string()))?;
                if let Some(hp) = &mut out.hp {
                    for f in hp.iter_mut() {
                        let mut frame = *f.frame();
                        for (hand, valid) in [
                            (&mut frame.left, frame.left_valid),
                            (&mut frame.right, frame.right_valid),
                        ] {
                            if valid {
                                hand.iter_mut()
                                    .flatten()
                                    .for_each(|c| *c += noise.sample(&mut rng));
                            }
                        }
                        *f = NormalizedHandFrame(frame);
                    }
                }
                out
            }
            Augmentation::FeatureDropout(p) => {
                if let Some(rgb) = &mut out.rgb {
                    rgb.data_mut().iter_mut().for_each(|v| {
                        if rng.gen_bool(p) {
                            *v = 0.0;
                        }
                    });
                }
                out
            }
        };
    }
    Ok(out)
}
