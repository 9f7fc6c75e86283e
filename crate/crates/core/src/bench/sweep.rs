//! Frequency-grid sweeps: train, score and cost one model per grid point.

use std::fmt;
use std::path::{Path, PathBuf};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::cpu::{cpu_cost, CpuConfig, CpuSource, CpuStats};
use super::export::{export_results, import_results, ExportFormat};
use crate::dataset::{
    augment_training_set, split_and_window, Augmentation, PreparedTake, SplitConfig,
};
use crate::error::{Error, Result};
use crate::model::{
    evaluate, train, Evaluation, ModelConfig, ModelKind, TrainConfig, TrainOutcome,
};
use crate::par::Execution;
use crate::sampling::RateConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub kind: ModelKind,
    pub f_rgb: f64,
    pub f_hp: f64,
}

impl GridPoint {
    pub fn new(kind: ModelKind, f_rgb: f64, f_hp: f64) -> Self {
        Self { kind, f_rgb, f_hp }
    }

    /// `base` with this point's frequencies.
    pub fn rates(&self, base: &RateConfig) -> RateConfig {
        RateConfig {
            f_rgb: self.f_rgb,
            f_hp: self.f_hp,
            ..*base
        }
    }
}

impl fmt::Display for GridPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({}, {})", self.kind, self.f_rgb, self.f_hp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    /// Training diverged; F1 columns are 0 and the row is left off the
    /// Pareto front.
    Failed,
}

impl fmt::Display for RowStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowStatus::Ok => "ok",
            RowStatus::Failed => "failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub model_kind: ModelKind,
    pub f_rgb: f64,
    pub f_hp: f64,
    pub macro_f1_action: f64,
    pub macro_f1_verb: f64,
    pub cpu: CpuStats,
    pub checkpoint: Option<String>,
    pub seed: u64,
    pub status: RowStatus,
}

impl SweepRow {
    pub fn point(&self) -> GridPoint {
        GridPoint::new(self.model_kind, self.f_rgb, self.f_hp)
    }
}

/// Everything shared by the grid points of one sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// `kind` is overridden per grid point.
    pub model: ModelConfig,
    /// `f_rgb` and `f_hp` are overridden per grid point.
    pub rates: RateConfig,
    pub train: TrainConfig,
    pub split: SplitConfig,
    pub cpu: CpuConfig,
    pub augment: Vec<Augmentation>,
    pub augment_copies: usize,
    /// Checkpoints are written here when set.
    pub checkpoint_dir: Option<PathBuf>,
}

impl SweepConfig {
    pub fn new(model: ModelConfig) -> Self {
        Self {
            model,
            rates: RateConfig::default(),
            train: TrainConfig::default(),
            split: SplitConfig::default(),
            cpu: CpuConfig::default(),
            augment: Vec::new(),
            augment_copies: 0,
            checkpoint_dir: None,
        }
    }
}

/// Result of training at one grid point.
#[derive(Debug, Clone)]
pub struct PointResult {
    pub outcome: TrainOutcome,
    /// Scores of the selected model on the validation takes (training takes
    /// when nothing is held out).
    pub evaluation: Evaluation,
}

/// Splits, windows, augments, trains and evaluates one grid point.
pub fn train_point(
    point: &GridPoint,
    takes: &[PreparedTake],
    action_to_verb: &[usize],
    cfg: &SweepConfig,
) -> Result<PointResult> {
    let rates = point.rates(&cfg.rates);
    let model_cfg = cfg.model.with_kind(point.kind);
    let (rgb, hp) = (point.kind.uses_rgb(), point.kind.uses_hp());
    if rgb && !rates.rgb_enabled() || hp && !rates.hp_enabled() {
        return Err(Error::Config(format!(
            "{point}: {} needs a nonzero rate for every stream it uses",
            point.kind
        )));
    }
    let sets = split_and_window(takes, &rates, &cfg.split)?;
    let keep = |ws: Vec<_>| -> Vec<_> {
        ws.into_iter()
            .map(|w: crate::sampling::MultiRateWindow| w.restrict(rgb, hp))
            .collect()
    };
    let mut train_set = keep(sets.train);
    let val_set = keep(sets.val);
    let flip = |row: &mut [f64]| model_cfg.flip_rgb_input(row);
    augment_training_set(
        takes,
        &mut train_set,
        &rates,
        &cfg.augment,
        cfg.augment_copies,
        &flip,
        cfg.train.seed ^ 0xa06,
    )?;
    info!(
        "{point}: {} training windows, {} validation windows",
        train_set.len(),
        val_set.len()
    );
    let outcome = train(
        model_cfg,
        rates,
        &train_set,
        &val_set,
        action_to_verb,
        &cfg.train,
    )?;
    let eval_set = if val_set.is_empty() {
        &train_set
    } else {
        &val_set
    };
    let evaluation = evaluate(
        &outcome.model,
        eval_set,
        action_to_verb,
        Execution::from_flag(cfg.train.parallel),
    )?;
    Ok(PointResult {
        outcome,
        evaluation,
    })
}

fn checkpoint_name(point: &GridPoint, seed: u64) -> String {
    format!(
        "{}_rgb{}_hp{}_seed{seed}.json",
        point.kind, point.f_rgb, point.f_hp
    )
}

fn same_point(row: &SweepRow, point: &GridPoint, seed: u64) -> bool {
    row.model_kind == point.kind
        && row.f_rgb == point.f_rgb
        && row.f_hp == point.f_hp
        && row.seed == seed
}

/// Measured rounds per grid point.
const MEASURE_ROUNDS: usize = 3;

/// CPU cost of every point. Measured costs are taken in interleaved rounds
/// and each point keeps its median round, so drift in machine speed during
/// the sweep spreads over all points instead of landing on a few.
fn measure_grid(points: &[&GridPoint], cfg: &SweepConfig) -> Result<Vec<CpuStats>> {
    let rounds = match cfg.cpu.source {
        CpuSource::Measured => MEASURE_ROUNDS,
        CpuSource::Model => 1,
    };
    let mut samples: Vec<Vec<CpuStats>> = vec![Vec::with_capacity(rounds); points.len()];
    for _ in 0..rounds {
        for (p, out) in points.iter().zip(samples.iter_mut()) {
            out.push(cpu_cost(
                &cfg.model.with_kind(p.kind),
                &p.rates(&cfg.rates),
                &cfg.cpu,
            )?);
        }
    }
    Ok(samples
        .into_iter()
        .map(|mut v| {
            v.sort_by(|a, b| a.median_cpu_seconds.total_cmp(&b.median_cpu_seconds));
            v[v.len() / 2]
        })
        .collect())
}

/// Runs every grid point in order. CPU costs of all pending points are
/// taken first, one at a time on the calling thread; training may then use
/// the parallel pool.
///
/// With `results`, the CSV at that path is rewritten after every row, and
/// rows already present in it for the same point and seed are reused
/// instead of retrained.
pub fn run_sweep(
    grid: &[GridPoint],
    takes: &[PreparedTake],
    action_to_verb: &[usize],
    cfg: &SweepConfig,
    results: Option<&Path>,
) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    cfg.cpu.validate()?;
    for p in grid {
        p.rates(&cfg.rates).validate()?;
    }
    let seed = cfg.train.seed;
    let previous = match results {
        Some(p) if p.exists() => import_results(p, ExportFormat::Csv)?,
        _ => Vec::new(),
    };
    if let Some(dir) = &cfg.checkpoint_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }

    let pending: Vec<&GridPoint> = grid
        .iter()
        .filter(|p| !previous.iter().any(|r| same_point(r, p, seed)))
        .collect();
    let mut costs = measure_grid(&pending, cfg)?.into_iter();

    let mut rows: Vec<SweepRow> = Vec::with_capacity(grid.len());
    for point in grid {
        if let Some(done) = previous.iter().find(|r| same_point(r, point, seed)) {
            info!("{point}: reusing completed row");
            rows.push(done.clone());
            continue;
        }
        let cpu = costs.next().expect("one cost per pending point");
        let row = match train_point(point, takes, action_to_verb, cfg) {
            Ok(res) => {
                let checkpoint = match &cfg.checkpoint_dir {
                    Some(dir) => {
                        let name = checkpoint_name(point, seed);
                        res.outcome.model.save(&dir.join(&name))?;
                        Some(name)
                    }
                    None => None,
                };
                SweepRow {
                    model_kind: point.kind,
                    f_rgb: point.f_rgb,
                    f_hp: point.f_hp,
                    macro_f1_action: res.evaluation.f1_action,
                    macro_f1_verb: res.evaluation.f1_verb,
                    cpu,
                    checkpoint,
                    seed,
                    status: RowStatus::Ok,
                }
            }
            Err(e @ Error::Divergence { .. }) => {
                warn!("{point}: {e}; row marked failed");
                SweepRow {
                    model_kind: point.kind,
                    f_rgb: point.f_rgb,
                    f_hp: point.f_hp,
                    macro_f1_action: 0.0,
                    macro_f1_verb: 0.0,
                    cpu,
                    checkpoint: None,
                    seed,
                    status: RowStatus::Failed,
                }
            }
            Err(e) => return Err(e),
        };
        info!(
            "{point}: action F1 {:.4}, verb F1 {:.4}, cpu {:.3e} s",
            row.macro_f1_action, row.macro_f1_verb, row.cpu.median_cpu_seconds
        );
        rows.push(row);
        if let Some(p) = results {
            export_results(&rows, p, ExportFormat::Csv)?;
        }
    }
    Ok(rows)
}

/// Cartesian product of kinds and frequencies, in nested order.
pub fn grid_product(kinds: &[ModelKind], f_rgb: &[f64], f_hp: &[f64]) -> Vec<GridPoint> {
    let mut out = Vec::with_capacity(kinds.len() * f_rgb.len() * f_hp.len());
    for &k in kinds {
        for &r in f_rgb {
            for &h in f_hp {
                out.push(GridPoint::new(k, r, h));
            }
        }
    }
    out
}
