//! CSV and JSON result files.
//!
//! CSV columns, in order:
//! `model_kind,f_rgb,f_hp,macro_f1_action,macro_f1_verb,cpu_median_s,cpu_p10_s,cpu_p90_s,seed,status,cpu_reps,cpu_warmup,checkpoint`.
//! Floats use the shortest representation that parses back to the same
//! value, so export followed by import is lossless.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::cpu::CpuStats;
use super::sweep::{RowStatus, SweepRow};
use crate::error::{Error, Result};
use crate::model::ModelKind;

pub const CSV_HEADER: [&str; 13] = [
    "model_kind",
    "f_rgb",
    "f_hp",
    "macro_f1_action",
    "macro_f1_verb",
    "cpu_median_s",
    "cpu_p10_s",
    "cpu_p90_s",
    "seed",
    "status",
    "cpu_reps",
    "cpu_warmup",
    "checkpoint",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExportFormat {
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            _ => Err(Error::Config(format!(
                "unknown export format {s:?}, expected csv or json"
            ))),
        }
    }
}

impl ExportFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => ExportFormat::Json,
            _ => ExportFormat::Csv,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    model_kind: ModelKind,
    f_rgb: f64,
    f_hp: f64,
    macro_f1_action: f64,
    macro_f1_verb: f64,
    cpu_median_s: f64,
    cpu_p10_s: f64,
    cpu_p90_s: f64,
    seed: u64,
    status: RowStatus,
    cpu_reps: usize,
    cpu_warmup: usize,
    checkpoint: Option<String>,
}

impl From<&SweepRow> for CsvRow {
    fn from(r: &SweepRow) -> Self {
        Self {
            model_kind: r.model_kind,
            f_rgb: r.f_rgb,
            f_hp: r.f_hp,
            macro_f1_action: r.macro_f1_action,
            macro_f1_verb: r.macro_f1_verb,
            cpu_median_s: r.cpu.median_cpu_seconds,
            cpu_p10_s: r.cpu.p10,
            cpu_p90_s: r.cpu.p90,
            seed: r.seed,
            status: r.status,
            cpu_reps: r.cpu.reps,
            cpu_warmup: r.cpu.warmup,
            checkpoint: r.checkpoint.clone(),
        }
    }
}

impl From<CsvRow> for SweepRow {
    fn from(r: CsvRow) -> Self {
        Self {
            model_kind: r.model_kind,
            f_rgb: r.f_rgb,
            f_hp: r.f_hp,
            macro_f1_action: r.macro_f1_action,
            macro_f1_verb: r.macro_f1_verb,
            cpu: CpuStats {
                median_cpu_seconds: r.cpu_median_s,
                p10: r.cpu_p10_s,
                p90: r.cpu_p90_s,
                reps: r.cpu_reps,
                warmup: r.cpu_warmup,
                thread_count: 1,
            },
            checkpoint: r.checkpoint,
            seed: r.seed,
            status: r.status,
        }
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Serde(format!("csv: {e}"));
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in rows {
        w.serialize(CsvRow::from(r)).map_err(csv_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Serde(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Serde(e.to_string()))
}

pub fn rows_from_csv(text: &str, path: &Path) -> Result<Vec<SweepRow>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    if header.iter().collect::<Vec<_>>() != CSV_HEADER {
        return Err(Error::Data(format!(
            "{}: unexpected header, expected {}",
            path.display(),
            CSV_HEADER.join(",")
        )));
    }
    r.deserialize::<CsvRow>()
        .enumerate()
        .map(|(i, row)| {
            row.map(SweepRow::from).map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 2,
                msg: e.to_string(),
            })
        })
        .collect()
}

/// Writes `rows` to `path`, replacing it atomically.
pub fn export_results(rows: &[SweepRow], path: &Path, format: ExportFormat) -> Result<()> {
    let text = match format {
        ExportFormat::Csv => rows_to_csv(rows)?,
        ExportFormat::Json => {
            let mut s =
                serde_json::to_string_pretty(rows).map_err(|e| Error::Serde(e.to_string()))?;
            s.push('\n');
            s
        }
    };
    let tmp = path.with_extension("partial");
    fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn import_results(path: &Path, format: ExportFormat) -> Result<Vec<SweepRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        ExportFormat::Csv => rows_from_csv(&text, path),
        ExportFormat::Json => {
            serde_json::from_str(&text).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
        }
    }
}
