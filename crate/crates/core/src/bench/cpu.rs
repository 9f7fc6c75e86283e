//! Single-thread CPU cost of one-second-window inference.
//!
//! Time-mixing weights are sized by the sequence length, so the cost is
//! taken on a fresh model of the same architecture built for a one-second
//! window. The RGB stream always runs the reference extractor here, so
//! per-frame feature extraction is part of the measured cost even when
//! training used precomputed features. Single-frame models run one
//! inference per sampled frame within the window.

use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::handpose::FRAME_DIM;
use crate::model::{Model, ModelConfig, RgbBackend};
use crate::nn::Matrix;
use crate::sampling::RateConfig;

/// Serializes all measurements within the process.
static MEASURE_LOCK: Mutex<()> = Mutex::new(());

/// Where CPU numbers come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CpuSource {
    /// Thread CPU time of real forwards.
    Measured,
    /// Multiply-accumulate count divided by `macs_per_second`. Noise free,
    /// so repeated runs give identical numbers.
    Model,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CpuConfig {
    pub reps: usize,
    pub warmup: usize,
    /// Must be 1.
    pub threads: usize,
    pub source: CpuSource,
    pub macs_per_second: f64,
    /// Each measured rep repeats the forward until it spans at least this
    /// much CPU time, then reports the per-forward mean.
    pub min_rep_seconds: f64,
    pub seed: u64,
}

impl Default for CpuConfig {
    fn default() -> Self {
        Self {
            reps: 15,
            warmup: 3,
            threads: 1,
            source: CpuSource::Measured,
            macs_per_second: 1e9,
            min_rep_seconds: 2e-3,
            seed: 0,
        }
    }
}

impl CpuConfig {
    pub fn validate(&self) -> Result<()> {
        if self.threads != 1 {
            return Err(Error::MeasurementContract(format!(
                "CPU cost is defined for a single thread, {} requested",
                self.threads
            )));
        }
        if self.reps < 5 {
            return Err(Error::MeasurementContract(format!(
                "at least 5 reps needed, got {}",
                self.reps
            )));
        }
        if !(self.macs_per_second > 0.0) || !(self.min_rep_seconds >= 0.0) {
            return Err(Error::Config(
                "macs_per_second must be > 0 and min_rep_seconds >= 0".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CpuStats {
    pub median_cpu_seconds: f64,
    pub p10: f64,
    pub p90: f64,
    pub reps: usize,
    pub warmup: usize,
    pub thread_count: usize,
}

impl CpuStats {
    /// Linear-interpolated quantiles of per-rep samples.
    pub fn from_samples(samples: &[f64], warmup: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("no CPU samples".into()));
        }
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let x = p * (s.len() - 1) as f64;
            let (lo, hi) = (x.floor() as usize, x.ceil() as usize);
            s[lo] + (s[hi] - s[lo]) * (x - lo as f64)
        };
        Ok(Self {
            median_cpu_seconds: q(0.5),
            p10: q(0.1),
            p90: q(0.9),
            reps: samples.len(),
            warmup,
            thread_count: 1,
        })
    }
}

/// CPU time consumed by the calling thread, in seconds.
#[cfg(unix)]
pub fn thread_cpu_seconds() -> f64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    // SAFETY: `ts` is a valid, writable timespec.
    let rc = unsafe { libc::clock_gettime(libc::CLOCK_THREAD_CPUTIME_ID, &mut ts) };
    assert_eq!(rc, 0, "clock_gettime(CLOCK_THREAD_CPUTIME_ID) failed");
    ts.tv_sec as f64 + ts.tv_nsec as f64 * 1e-9
}

#[cfg(not(unix))]
pub fn thread_cpu_seconds() -> f64 {
    use std::sync::OnceLock;
    use std::time::Instant;
    static START: OnceLock<Instant> = OnceLock::new();
    START.get_or_init(Instant::now).elapsed().as_secs_f64()
}

/// The architecture of `config` at `rates`, rebuilt for a one-second window
/// with the reference RGB extractor.
pub fn measurement_model(config: &ModelConfig, rates: &RateConfig, seed: u64) -> Result<Model> {
    let config = ModelConfig {
        rgb_backend: RgbBackend::Reference,
        ..*config
    };
    let rates = rates.with_window_seconds(1.0);
    Model::new(config, rates, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Fixed pseudo-random inputs for every forward of one window.
struct Workload {
    inferences: usize,
    rgb: Option<Matrix>,
    hp: Option<Matrix>,
}

impl Workload {
    fn new(model: &Model, seed: u64) -> Result<Self> {
        if (model.rates.window_seconds - 1.0).abs() > 1e-12 {
            return Err(Error::MeasurementContract(format!(
                "model must be built for a one-second window, got {} s",
                model.rates.window_seconds
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seq = model.kind().is_sequence();
        let lens = [
            model.rgb.as_ref().map(|_| model.rates.rgb_len()),
            model.hp.as_ref().map(|_| model.rates.hp_len()),
        ];
        let inferences = if seq {
            1
        } else {
            lens.iter().flatten().copied().max().unwrap_or(1)
        };
        let mut input = |rows: usize, cols: usize| {
            let data = (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Matrix::from_vec(rows, cols, data)
        };
        let rows = |len: usize| if seq { len } else { 1 };
        let rgb = match (&model.rgb, lens[0]) {
            (Some(s), Some(t)) => Some(input(rows(t), s.extractor.input_dim())?),
            _ => None,
        };
        let hp = match (&model.hp, lens[1]) {
            (Some(_), Some(t)) => Some(input(rows(t), FRAME_DIM)?),
            _ => None,
        };
        Ok(Self {
            inferences,
            rgb,
            hp,
        })
    }

    fn run(&self, model: &Model) -> Result<f64> {
        let mut acc = 0.0;
        for _ in 0..self.inferences {
            acc += model.forward_inputs(self.rgb.as_ref(), self.hp.as_ref())?[0];
        }
        Ok(acc)
    }
}

/// Times one-second-window inference of `model` on the calling thread.
pub fn measure_cpu(model: &Model, cfg: &CpuConfig) -> Result<CpuStats> {
    cfg.validate()?;
    let work = Workload::new(model, cfg.seed)?;
    let _guard = MEASURE_LOCK.lock().unwrap_or_else(|e| e.into_inner());
    let mut sink = 0.0;
    for _ in 0..cfg.warmup {
        sink += work.run(model)?;
    }
    let t0 = thread_cpu_seconds();
    sink += work.run(model)?;
    let one = (thread_cpu_seconds() - t0).max(1e-9);
    let inner = ((cfg.min_rep_seconds / one).ceil() as usize).clamp(1, 100_000);
    let mut samples = Vec::with_capacity(cfg.reps);
    for _ in 0..cfg.reps {
        let start = thread_cpu_seconds();
        for _ in 0..inner {
            sink += work.run(model)?;
        }
        samples.push((thread_cpu_seconds() - start) / inner as f64);
    }
    std::hint::black_box(sink);
    CpuStats::from_samples(&samples, cfg.warmup)
}

/// Analytic cost: multiply-accumulates of one window over `macs_per_second`.
pub fn modeled_cpu(model: &Model, cfg: &CpuConfig) -> Result<CpuStats> {
    cfg.validate()?;
    let work = Workload::new(model, cfg.seed)?;
    let s = (model.macs() * work.inferences as u64) as f64 / cfg.macs_per_second;
    Ok(CpuStats {
        median_cpu_seconds: s,
        p10: s,
        p90: s,
        reps: cfg.reps,
        warmup: cfg.warmup,
        thread_count: 1,
    })
}

/// CPU cost of the architecture `config` at `rates`, from `cfg.source`.
pub fn cpu_cost(config: &ModelConfig, rates: &RateConfig, cfg: &CpuConfig) -> Result<CpuStats> {
    cfg.validate()?;
    let model = measurement_model(config, rates, cfg.seed)?;
    match cfg.source {
        CpuSource::Measured => measure_cpu(&model, cfg),
        CpuSource::Model => modeled_cpu(&model, cfg),
    }
}
