use super::sweep::{RowStatus, SweepRow};

/// `a` dominates `b` when it is at least as accurate and at most as costly,
/// and strictly better in one of the two.
pub fn dominates(a: &SweepRow, b: &SweepRow) -> bool {
    let (fa, ca) = (a.macro_f1_action, a.cpu.median_cpu_seconds);
    let (fb, cb) = (b.macro_f1_action, b.cpu.median_cpu_seconds);
    fa >= fb && ca <= cb && (fa > fb || ca < cb)
}

/// Successful rows not dominated by any other successful row, by CPU
/// ascending (higher F1 first among equal CPU).
pub fn pareto_front(rows: &[SweepRow]) -> Vec<SweepRow> {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.status == RowStatus::Ok).collect();
    let mut front: Vec<SweepRow> = ok
        .iter()
        .filter(|r| !ok.iter().any(|o| dominates(o, r)))
        .map(|r| (*r).clone())
        .collect();
    front.sort_by(|a, b| {
        a.cpu
            .median_cpu_seconds
            .total_cmp(&b.cpu.median_cpu_seconds)
            .then(b.macro_f1_action.total_cmp(&a.macro_f1_action))
    });
    front
}
