use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};
use mmtmlp::bench::{
    cpu_cost, export_results, pareto_front, run_sweep, train_point, ExportFormat, GridPoint,
    RowStatus, SweepRow,
};
use mmtmlp::dataset::{compute_reference_lengths, split_takes, Dataset, PreparedTake, SynthWorld};
use mmtmlp::handpose::{
    normalize_hand_frame, normalize_hand_frame_lenient, parse_handpose_file, write_handpose_file,
    HandFrame, NormalizeConfig, SkeletonTopology, KEYPOINTS,
};
use mmtmlp::model::{EpochRecord, Evaluation};

use crate::{CliError, RunConfig};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const HISTORY_FILE: &str = "history.csv";
pub const RESULTS_CSV: &str = "results.csv";
pub const RESULTS_JSON: &str = "results.json";
pub const PARETO_CSV: &str = "pareto.csv";
pub const BENCH_CSV: &str = "bench.csv";
pub const CHECKPOINT_DIR: &str = "checkpoints";

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    mmtmlp::Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
    .into()
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Writes through a sibling temporary file so readers never see a torn file.
fn write_atomic(path: &Path, contents: &str) -> Result<(), CliError> {
    let tmp = path.with_extension("partial");
    fs::write(&tmp, contents).map_err(|e| io_err(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Generates the synthetic dataset at `dataset.path`.
pub fn cmd_synth(cfg: &RunConfig, force: bool) -> Result<PathBuf, CliError> {
    let out = cfg.dataset.path.clone();
    if out.exists() && !force {
        return Err(CliError::Exists(out.display().to_string()));
    }
    let dataset = SynthWorld::new(cfg.dataset.synth)?.dataset();
    let mut staging = out.clone().into_os_string();
    staging.push(".partial");
    let staging = PathBuf::from(staging);
    if staging.exists() {
        fs::remove_dir_all(&staging).map_err(|e| io_err(&staging, e))?;
    }
    dataset.write(&staging)?;
    if out.exists() {
        fs::remove_dir_all(&out).map_err(|e| io_err(&out, e))?;
    }
    fs::rename(&staging, &out).map_err(|e| io_err(&out, e))?;
    info!("wrote {} takes to {}", dataset.takes.len(), out.display());
    Ok(out)
}

/// Reference lengths as configured: a file, unit lengths, or the per-edge
/// mean over the training takes of `dataset`.
pub fn normalize_config(cfg: &RunConfig, dataset: &Dataset) -> Result<NormalizeConfig, CliError> {
    if cfg.normalize.unit_lengths {
        return Ok(NormalizeConfig::default());
    }
    if let Some(p) = &cfg.normalize.reference_lengths {
        return Ok(NormalizeConfig::with_topology(
            SkeletonTopology::load_lengths(p, KEYPOINTS)?,
        ));
    }
    let lengths = training_lengths(cfg, dataset)?;
    Ok(NormalizeConfig::with_topology(SkeletonTopology::hand(
        lengths,
    )?))
}

fn training_lengths(cfg: &RunConfig, dataset: &Dataset) -> Result<Vec<f64>, CliError> {
    let (train, _) = split_takes(dataset.takes.len(), &cfg.split);
    Ok(compute_reference_lengths(
        train.iter().map(|&i| &dataset.takes[i]),
    )?)
}

/// A loaded dataset with its takes normalized.
pub struct Prepared {
    pub dataset: Dataset,
    pub takes: Vec<PreparedTake>,
}

impl Prepared {
    /// Width of the stored per-frame RGB rows.
    pub fn rgb_dim(&self) -> usize {
        self.dataset.takes.first().map_or(0, |t| t.rgb.cols())
    }
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared, CliError> {
    let dataset = Dataset::load(&cfg.dataset.path)?;
    let norm = normalize_config(cfg, &dataset)?;
    let takes = dataset
        .takes
        .iter()
        .map(|t| t.prepare(&norm))
        .collect::<mmtmlp::Result<Vec<_>>>()?;
    Ok(Prepared { dataset, takes })
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut s = String::from("epoch,train_loss,val_loss,val_f1_action,val_f1_verb\n");
    for r in history {
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.epoch, r.train_loss, r.val_loss, r.val_f1_action, r.val_f1_verb
        ));
    }
    s
}

pub struct TrainReport {
    pub checkpoint: PathBuf,
    pub history: PathBuf,
    pub best_epoch: usize,
    pub evaluation: Evaluation,
}

/// Trains `model.kind` at `rates` and writes a checkpoint and history.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainReport, CliError> {
    let data = prepare(cfg)?;
    let sweep = cfg.sweep_config(data.dataset.n_actions(), data.rgb_dim())?;
    let point = GridPoint::new(cfg.model.kind, cfg.rates.f_rgb, cfg.rates.f_hp);
    let res = train_point(&point, &data.takes, &data.dataset.action_to_verb(), &sweep)?;
    create_dir(&cfg.output.dir)?;
    let checkpoint = cfg.output.dir.join(CHECKPOINT_FILE);
    let history = cfg.output.dir.join(HISTORY_FILE);
    res.outcome.model.save(&checkpoint)?;
    write_atomic(&history, &history_csv(&res.outcome.history))?;
    info!(
        "{point}: best epoch {}, action F1 {:.4}, verb F1 {:.4}",
        res.outcome.best_epoch, res.evaluation.f1_action, res.evaluation.f1_verb
    );
    Ok(TrainReport {
        checkpoint,
        history,
        best_epoch: res.outcome.best_epoch,
        evaluation: res.evaluation,
    })
}

pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub pareto: Vec<SweepRow>,
}

/// Trains and measures every grid point, then writes results and the
/// Pareto front. Completed rows in an existing results CSV are reused
/// unless `restart` is set.
pub fn cmd_sweep(cfg: &RunConfig, restart: bool) -> Result<SweepReport, CliError> {
    let grid = cfg.grid.points();
    if grid.is_empty() {
        return Err(CliError::Usage(
            "the sweep grid is empty; set grid.f_rgb and grid.f_hp or grid.points".into(),
        ));
    }
    for p in &grid {
        p.rates(&cfg.rates).validate()?;
        cfg.check_augment_for(p.kind)?;
    }
    let data = prepare(cfg)?;
    let mut sweep = cfg.sweep_config(data.dataset.n_actions(), data.rgb_dim())?;
    let dir = &cfg.output.dir;
    create_dir(dir)?;
    sweep.checkpoint_dir = Some(dir.join(CHECKPOINT_DIR));
    let results = dir.join(RESULTS_CSV);
    if restart && results.exists() {
        fs::remove_file(&results).map_err(|e| io_err(&results, e))?;
    }
    let rows = run_sweep(
        &grid,
        &data.takes,
        &data.dataset.action_to_verb(),
        &sweep,
        Some(&results),
    )?;
    export_results(&rows, &dir.join(RESULTS_JSON), ExportFormat::Json)?;
    let pareto = pareto_front(&rows);
    export_results(&pareto, &dir.join(PARETO_CSV), ExportFormat::Csv)?;
    if let Some(failed) = rows.iter().find(|r| r.status == RowStatus::Failed) {
        if rows.iter().all(|r| r.status == RowStatus::Failed) {
            return Err(CliError::Diverged(format!(
                "training diverged at every grid point (lr = {}); see {}",
                cfg.train.lr,
                results.display()
            )));
        }
        warn!(
            "{}: training diverged; row recorded as failed",
            failed.point()
        );
    }
    Ok(SweepReport { rows, pareto })
}

pub struct NormalizeArgs<'a> {
    pub input: &'a Path,
    pub output: &'a Path,
    pub lengths: Option<&'a Path>,
    pub unit_lengths: bool,
    pub strict: bool,
    pub mirror_left: bool,
}

/// Normalizes every frame of a hand-pose file. Degenerate hands are zeroed
/// and flagged invalid unless `strict`. Returns the number dropped.
pub fn cmd_normalize(args: &NormalizeArgs) -> Result<usize, CliError> {
    let topology = match (args.lengths, args.unit_lengths) {
        (Some(_), true) => {
            return Err(CliError::Usage(
                "--lengths and --unit-lengths are exclusive".into(),
            ))
        }
        (Some(p), false) => SkeletonTopology::load_lengths(p, KEYPOINTS)?,
        (None, true) => SkeletonTopology::hand_unit(),
        (None, false) => {
            return Err(CliError::Usage(
                "pass --lengths FILE (see `normalize reference-lengths`) or --unit-lengths".into(),
            ))
        }
    };
    let norm = NormalizeConfig {
        mirror_left: args.mirror_left,
        ..NormalizeConfig::with_topology(topology)
    };
    let frames = parse_handpose_file(args.input)?;
    let mut out: Vec<HandFrame> = Vec::with_capacity(frames.len());
    let mut dropped = 0;
    for (i, f) in frames.iter().enumerate() {
        if args.strict {
            let n = normalize_hand_frame(f, &norm).map_err(|e| {
                CliError::Data(format!("{} frame {}: {e}", args.input.display(), i + 1))
            })?;
            out.push(n.into_inner());
        } else {
            let (n, d) = normalize_hand_frame_lenient(f, &norm);
            for (side, e) in &d {
                warn!(
                    "{} frame {}: {side} hand zeroed: {e}",
                    args.input.display(),
                    i + 1
                );
            }
            dropped += d.len();
            out.push(n.into_inner());
        }
    }
    write_handpose_file(args.output, &out)?;
    Ok(dropped)
}

/// Writes per-edge mean bone lengths over the training takes.
pub fn cmd_reference_lengths(cfg: &RunConfig, output: &Path) -> Result<Vec<f64>, CliError> {
    let dataset = Dataset::load(&cfg.dataset.path)?;
    let lengths = training_lengths(cfg, &dataset)?;
    SkeletonTopology::hand(lengths.clone())?.save_lengths(output)?;
    Ok(lengths)
}

pub struct BenchRow {
    pub point: GridPoint,
    pub cpu: mmtmlp::bench::CpuStats,
}

pub fn bench_csv(rows: &[BenchRow]) -> String {
    let mut s =
        String::from("model_kind,f_rgb,f_hp,median_cpu_seconds,p10,p90,reps,warmup,thread_count\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.point.kind,
            r.point.f_rgb,
            r.point.f_hp,
            r.cpu.median_cpu_seconds,
            r.cpu.p10,
            r.cpu.p90,
            r.cpu.reps,
            r.cpu.warmup,
            r.cpu.thread_count
        ));
    }
    s
}

/// Measures one-second-window inference cost at every grid point, or at
/// `model.kind` and `rates` when the grid is empty. No training.
pub fn cmd_bench(cfg: &RunConfig) -> Result<Vec<BenchRow>, CliError> {
    let mut grid = cfg.grid.points();
    if grid.is_empty() {
        grid.push(GridPoint::new(
            cfg.model.kind,
            cfg.rates.f_rgb,
            cfg.rates.f_hp,
        ));
    }
    for p in &grid {
        p.rates(&cfg.rates).validate()?;
    }
    let mut rows = Vec::with_capacity(grid.len());
    for point in grid {
        let cpu = cpu_cost(
            &cfg.model.with_kind(point.kind),
            &point.rates(&cfg.rates),
            &cfg.bench,
        )?;
        info!("{point}: median {:.4e} s", cpu.median_cpu_seconds);
        rows.push(BenchRow { point, cpu });
    }
    create_dir(&cfg.output.dir)?;
    write_atomic(&cfg.output.dir.join(BENCH_CSV), &bench_csv(&rows))?;
    Ok(rows)
}
