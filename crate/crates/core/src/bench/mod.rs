//! Macro F1, CPU cost, sweeps, Pareto fronts and result files.

mod cpu;
mod export;
pub mod metrics;
mod pareto;
mod sweep;

pub use cpu::{
    cpu_cost, measure_cpu, measurement_model, modeled_cpu, thread_cpu_seconds, CpuConfig,
    CpuSource, CpuStats,
};
pub use export::{
    export_results, import_results, rows_from_csv, rows_to_csv, ExportFormat, CSV_HEADER,
};
pub use metrics::{confusion_matrix, macro_f1};
pub use pareto::{dominates, pareto_front};
pub use sweep::{
    grid_product, run_sweep, train_point, GridPoint, PointResult, RowStatus, SweepConfig, SweepRow,
};

#[cfg(test)]
pub(crate) fn test_row(f1: f64, cpu: f64) -> SweepRow {
    SweepRow {
        model_kind: crate::model::ModelKind::MmTmlp,
        f_rgb: 30.0,
        f_hp: 10.0,
        macro_f1_action: f1,
        macro_f1_verb: f1 / 2.0,
        cpu: CpuStats {
            median_cpu_seconds: cpu,
            p10: cpu * 0.9,
            p90: cpu * 1.1,
            reps: 15,
            warmup: 3,
            thread_count: 1,
        },
        checkpoint: None,
        seed: 7,
        status: RowStatus::Ok,
    }
}
