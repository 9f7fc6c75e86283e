//! Multi-rate window construction.
//!
//! Each modality is sampled from the native-rate stream at its own
//! frequency. Sampling is anchored on the most recent frame: the last index
//! of every enabled stream is the window's final native frame.

use serde::{Deserialize, Serialize};

use crate::dataset::FrameLabel;
use crate::error::{Error, Result};
use crate::handpose::NormalizedHandFrame;
use crate::nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RateConfig {
    pub native_hz: f64,
    pub f_rgb: f64,
    /// Zero disables the hand-pose stream.
    pub f_hp: f64,
    pub window_seconds: f64,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            native_hz: 30.0,
            f_rgb: 30.0,
            f_hp: 30.0,
            window_seconds: 2.0,
        }
    }
}

impl RateConfig {
    pub fn new(f_rgb: f64, f_hp: f64) -> Self {
        Self {
            f_rgb,
            f_hp,
            ..Self::default()
        }
    }

    pub fn with_window_seconds(self, window_seconds: f64) -> Self {
        Self {
            window_seconds,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let native = self.native_hz;
        if !(native > 0.0 && native.is_finite()) {
            return Err(Error::Config(format!(
                "native_hz must be > 0, got {native}"
            )));
        }
        if !(self.f_rgb >= 0.0 && self.f_rgb <= native) {
            return Err(Error::Config(format!(
                "f_rgb must lie in [0, {native}], got {}",
                self.f_rgb
            )));
        }
        if !(self.f_hp >= 0.0 && self.f_hp <= native) {
            return Err(Error::Config(format!(
                "f_hp must lie in [0, {native}], got {}",
                self.f_hp
            )));
        }
        if !self.rgb_enabled() && !self.hp_enabled() {
            return Err(Error::Config("f_rgb and f_hp are both zero".into()));
        }
        let frames = self.window_seconds * native;
        if !(frames >= 1.0) || (frames - frames.round()).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "window of {} s at {native} Hz is not a whole number of frames",
                self.window_seconds
            )));
        }
        Ok(())
    }

    pub fn window_frames(&self) -> usize {
        (self.window_seconds * self.native_hz).round() as usize
    }

    pub fn rgb_enabled(&self) -> bool {
        self.f_rgb > 0.0
    }

    pub fn hp_enabled(&self) -> bool {
        self.f_hp > 0.0
    }

    /// Zero when the RGB stream is disabled.
    pub fn rgb_len(&self) -> usize {
        if self.rgb_enabled() {
            steps(self.window_frames(), self.f_rgb, self.native_hz)
        } else {
            0
        }
    }

    /// Zero when the hand stream is disabled.
    pub fn hp_len(&self) -> usize {
        if self.hp_enabled() {
            steps(self.window_frames(), self.f_hp, self.native_hz)
        } else {
            0
        }
    }
}

fn steps(window_frames: usize, f: f64, native_hz: f64) -> usize {
    ((window_frames as f64 * f / native_hz).round() as usize).max(1)
}

/// Indices into a window of `window_frames` native frames for a stream
/// sampled at `f`. `T = max(1, round(W f / native))` and index `k` is
/// `ceil((k + 1) W / T) - 1`, so the last index is always `W - 1`.
pub fn sample_indices(native_hz: f64, f: f64, window_frames: usize) -> Result<Vec<usize>> {
    if !(f > 0.0) {
        return Err(Error::Config(format!(
            "sampling frequency must be > 0, got {f}"
        )));
    }
    if f > native_hz {
        return Err(Error::Config(format!(
            "sampling frequency {f} exceeds native rate {native_hz}"
        )));
    }
    if window_frames == 0 {
        return Err(Error::Config("window must span at least one frame".into()));
    }
    let t = steps(window_frames, f, native_hz);
    Ok((0..t)
        .map(|k| ((k + 1) * window_frames).div_ceil(t) - 1)
        .collect())
}

/// Where a window came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSource {
    pub take: String,
    /// Native index of the final frame.
    pub end: usize,
}

/// One sample: per-modality sequences plus the label of the final frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiRateWindow {
    /// `T_rgb` rows of extractor input (precomputed features or flattened
    /// images, depending on the RGB backend).
    pub rgb: Option<Matrix>,
    pub hp: Option<Vec<NormalizedHandFrame>>,
    pub label: usize,
    pub verb: usize,
    pub source: WindowSource,
}

impl MultiRateWindow {
    pub fn hp_matrix(&self) -> Option<Matrix> {
        self.hp.as_ref().map(|frames| {
            let data = frames.iter().flat_map(|f| f.flatten()).collect();
            Matrix::from_vec(frames.len(), crate::handpose::FRAME_DIM, data).expect("sized")
        })
    }

    pub fn is_multimodal(&self) -> bool {
        self.rgb.is_some() && self.hp.is_some()
    }

    /// Keeps only the streams a model consumes.
    pub fn restrict(mut self, rgb: bool, hp: bool) -> Self {
        if !rgb {
            self.rgb = None;
        }
        if !hp {
            self.hp = None;
        }
        self
    }
}

/// Native-rate streams of one take.
#[derive(Debug, Clone, Copy)]
pub struct NativeStreams<'a> {
    pub take: &'a str,
    pub rgb: &'a Matrix,
    pub hp: &'a [NormalizedHandFrame],
    pub labels: &'a [FrameLabel],
}

impl NativeStreams<'_> {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Slices the native window ending at `end` and samples each stream.
pub fn build_window(
    streams: &NativeStreams<'_>,
    end: usize,
    cfg: &RateConfig,
) -> Result<MultiRateWindow> {
    cfg.validate()?;
    let w = cfg.window_frames();
    let n = streams.len();
    if end + 1 < w {
        return Err(Error::WindowBounds(format!(
            "window of {w} frames ending at {end} needs {} earlier frames",
            w - 1
        )));
    }
    if end >= n
        || (cfg.rgb_enabled() && streams.rgb.rows() < n)
        || (cfg.hp_enabled() && streams.hp.len() < n)
    {
        return Err(Error::WindowBounds(format!(
            "end frame {end} beyond take {} ({n} labels, {} rgb, {} hand frames)",
            streams.take,
            streams.rgb.rows(),
            streams.hp.len()
        )));
    }
    let start = end + 1 - w;
    let rgb = if cfg.rgb_enabled() {
        let idx: Vec<usize> = sample_indices(cfg.native_hz, cfg.f_rgb, w)?
            .into_iter()
            .map(|i| start + i)
            .collect();
        Some(streams.rgb.select_rows(&idx)?)
    } else {
        None
    };
    let hp = if cfg.hp_enabled() {
        let idx = sample_indices(cfg.native_hz, cfg.f_hp, w)?;
        Some(idx.into_iter().map(|i| streams.hp[start + i]).collect())
    } else {
        None
    };
    let label = streams.labels[end];
    Ok(MultiRateWindow {
        rgb,
        hp,
        label: label.action,
        verb: label.verb,
        source: WindowSource {
            take: streams.take.to_string(),
            end,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::handpose::HandFrame;

    #[test]
    fn index_formula_examples() {
        assert_eq!(
            sample_indices(30.0, 30.0, 60).unwrap(),
            (0..60).collect::<Vec<_>>()
        );
        let ten = sample_indices(30.0, 10.0, 60).unwrap();
        assert_eq!(ten.len(), 20);
        assert_eq!(ten, (0..20).map(|k| 3 * k + 2).collect::<Vec<_>>());
        assert_eq!(sample_indices(30.0, 1.0, 60).unwrap(), vec![29, 59]);
    }

    #[test]
    fn rejects_nonpositive_frequency() {
        assert!(matches!(
            sample_indices(30.0, 0.0, 60),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            sample_indices(30.0, 31.0, 60),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn config_validation() {
        assert!(RateConfig::default().validate().is_ok());
        assert!(RateConfig::new(30.0, 0.0).validate().is_ok());
        assert!(RateConfig::new(0.0, 30.0).validate().is_ok());
        assert!(RateConfig::new(0.0, 0.0).validate().is_err());
        assert!(RateConfig::default()
            .with_window_seconds(0.05)
            .validate()
            .is_err());
        assert!(RateConfig::default()
            .with_window_seconds(1.0 / 30.0)
            .validate()
            .is_ok());
    }

    struct Fixture {
        rgb: Matrix,
        hp: Vec<NormalizedHandFrame>,
        labels: Vec<FrameLabel>,
    }

    fn fixture(n: usize) -> Fixture {
        let rgb = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        let hp = (0..n)
            .map(|i| {
                let mut f = HandFrame::invalid();
                f.right_valid = true;
                f.right[0][0] = i as f64;
                NormalizedHandFrame(f)
            })
            .collect();
        let labels = (0..n)
            .map(|i| FrameLabel {
                action: i % 5,
                verb: i % 3,
            })
            .collect();
        Fixture { rgb, hp, labels }
    }

    impl Fixture {
        fn streams(&self) -> NativeStreams<'_> {
            NativeStreams {
                take: "t",
                rgb: &self.rgb,
                hp: &self.hp,
                labels: &self.labels,
            }
        }
    }

    fn rgb_frames(w: &MultiRateWindow) -> Vec<usize> {
        w.rgb
            .as_ref()
            .unwrap()
            .data()
            .iter()
            .map(|&v| v as usize)
            .collect()
    }

    fn hp_frames(w: &MultiRateWindow) -> Vec<usize> {
        w.hp.as_ref()
            .unwrap()
            .iter()
            .map(|f| f.frame().right[0][0] as usize)
            .collect()
    }

    #[test]
    fn full_rate_window() {
        let fx = fixture(100);
        let w = build_window(&fx.streams(), 59, &RateConfig::default()).unwrap();
        assert_eq!(rgb_frames(&w), (0..60).collect::<Vec<_>>());
        assert_eq!(hp_frames(&w).len(), 60);
        assert_eq!(w.label, fx.labels[59].action);
        assert_eq!(w.verb, fx.labels[59].verb);
    }

    #[test]
    fn disabled_hand_stream() {
        let fx = fixture(100);
        let w = build_window(&fx.streams(), 70, &RateConfig::new(30.0, 0.0)).unwrap();
        assert!(w.hp.is_none());
        assert!(!w.is_multimodal());
    }

    #[test]
    fn mixed_rates_share_final_frame() {
        let fx = fixture(100);
        let w = build_window(&fx.streams(), 59, &RateConfig::new(10.0, 30.0)).unwrap();
        let rgb = rgb_frames(&w);
        let hp = hp_frames(&w);
        assert_eq!((rgb.len(), hp.len()), (20, 60));
        assert_eq!((*rgb.last().unwrap(), *hp.last().unwrap()), (59, 59));
    }

    #[test]
    fn insufficient_history() {
        let fx = fixture(100);
        assert!(matches!(
            build_window(&fx.streams(), 58, &RateConfig::default()),
            Err(Error::WindowBounds(_))
        ));
        assert!(matches!(
            build_window(&fx.streams(), 100, &RateConfig::default()),
            Err(Error::WindowBounds(_))
        ));
    }

    #[test]
    fn consecutive_ends_shift_by_one() {
        let fx = fixture(100);
        let cfg = RateConfig::new(10.0, 3.0);
        let a = build_window(&fx.streams(), 70, &cfg).unwrap();
        let b = build_window(&fx.streams(), 71, &cfg).unwrap();
        let shift = |v: Vec<usize>| v.into_iter().map(|i| i + 1).collect::<Vec<_>>();
        assert_eq!(shift(rgb_frames(&a)), rgb_frames(&b));
        assert_eq!(shift(hp_frames(&a)), hp_frames(&b));
    }
}
