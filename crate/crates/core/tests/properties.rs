use mmtmlp::bench::{
    dominates, macro_f1, pareto_front, rows_from_csv, rows_to_csv, CpuStats, RowStatus, SweepRow,
};
use mmtmlp::dataset::{assign_frame_labels, ActionSegment, BACKGROUND};
use mmtmlp::handpose::{
    normalize_hand, normalize_hand_frame, HandFrame, NormalizeConfig, Point, SkeletonTopology,
    KEYPOINTS,
};
use mmtmlp::model::ModelKind;
use mmtmlp::sampling::sample_indices;
use proptest::prelude::*;
use std::path::Path;

/// Brute-force macro F1 straight from a confusion matrix.
fn f1_oracle(pred: &[usize], labels: &[usize], n: usize) -> f64 {
    let mut cm = vec![vec![0usize; n]; n];
    for (&p, &l) in pred.iter().zip(labels) {
        cm[l][p] += 1;
    }
    let mut scores = Vec::new();
    for c in 0..n {
        let tp = cm[c][c];
        let fp: usize = (0..n).filter(|&r| r != c).map(|r| cm[r][c]).sum();
        let fn_: usize = (0..n).filter(|&p| p != c).map(|p| cm[c][p]).sum();
        let support = cm[c].iter().sum::<usize>() + (0..n).map(|r| cm[r][c]).sum::<usize>();
        if support == 0 {
            continue;
        }
        scores.push(if 2 * tp + fp + fn_ == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        });
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

fn labels_and_preds() -> impl Strategy<Value = (usize, Vec<usize>, Vec<usize>)> {
    (1usize..40).prop_flat_map(|c| {
        (1usize..300).prop_flat_map(move |n| {
            (
                Just(c),
                prop::collection::vec(0..c, n),
                prop::collection::vec(0..c, n),
            )
        })
    })
}

fn point() -> impl Strategy<Value = Point> {
    [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0]
}

fn hand() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(point(), KEYPOINTS)
}

/// Rotation from a unit quaternion.
fn rotation(q: [f64; 4]) -> [Point; 3] {
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
        ],
        [
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
        ],
        [
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

fn apply(r: &[Point; 3], t: Point, h: &[Point]) -> Vec<Point> {
    h.iter()
        .map(|p| [0, 1, 2].map(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + t[i]))
        .collect()
}

fn max_diff(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(p, q)| (0..3).map(move |i| (p[i] - q[i]).abs()))
        .fold(0.0, f64::max)
}

fn row(f1: f64, cpu: f64) -> SweepRow {
    SweepRow {
        model_kind: ModelKind::MmTmlp,
        f_rgb: 30.0,
        f_hp: 30.0,
        macro_f1_action: f1,
        macro_f1_verb: f1,
        cpu: CpuStats {
            median_cpu_seconds: cpu,
            p10: cpu,
            p90: cpu,
            reps: 15,
            warmup: 3,
            thread_count: 1,
        },
        checkpoint: None,
        seed: 0,
        status: RowStatus::Ok,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn macro_f1_matches_oracle((c, pred, labels) in labels_and_preds()) {
        prop_assert_eq!(macro_f1(&pred, &labels, c).unwrap(), f1_oracle(&pred, &labels, c));
    }

    #[test]
    fn macro_f1_permutation_invariant((c, pred, labels) in labels_and_preds(), seed in any::<u64>()) {
        use rand::{seq::SliceRandom, SeedableRng};
        let mut idx: Vec<usize> = (0..pred.len()).collect();
        idx.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let p2: Vec<usize> = idx.iter().map(|&i| pred[i]).collect();
        let l2: Vec<usize> = idx.iter().map(|&i| labels[i]).collect();
        let a = macro_f1(&pred, &labels, c).unwrap();
        let b = macro_f1(&p2, &l2, c).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn sampling_anchored_and_increasing(f in 0.1f64..=30.0, w in 1usize..400) {
        let idx = sample_indices(30.0, f, w).unwrap();
        let t = ((w as f64 * f / 30.0).round() as usize).max(1);
        prop_assert_eq!(idx.len(), t);
        prop_assert_eq!(*idx.last().unwrap(), w - 1);
        prop_assert!(idx.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn normalization_contracts(
        h in hand(),
        q in [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0],
        t in point(),
        lengths in prop::collection::vec(0.2f64..2.0, KEYPOINTS - 1),
    ) {
        prop_assume!(q.iter().map(|v| v * v).sum::<f64>() > 1e-2);
        let topo = SkeletonTopology::hand(lengths.clone()).unwrap();
        let cfg = NormalizeConfig::with_topology(topo.clone());
        let Ok(n) = normalize_hand(&h, &cfg) else { return Ok(()) };
        prop_assert_eq!(n[0], [0.0; 3]);
        for (b, r) in topo.bone_lengths(&n).iter().zip(&lengths) {
            prop_assert!((b - r).abs() < 1e-9);
        }
        let again = normalize_hand(&n, &cfg).unwrap();
        prop_assert!(max_diff(&n, &again) < 1e-9);
        let moved = normalize_hand(&apply(&rotation(q), t, &h), &cfg).unwrap();
        prop_assert!(max_diff(&n, &moved) < 1e-9);
    }

    #[test]
    fn flip_is_an_involution(l in hand(), r in hand()) {
        let arr = |v: &Vec<Point>| { let mut a = [[0.0; 3]; KEYPOINTS]; a.copy_from_slice(v); a };
        let frame = HandFrame::new(Some(arr(&l)), Some(arr(&r)));
        let Ok(n) = normalize_hand_frame(&frame, &NormalizeConfig::default()) else { return Ok(()) };
        prop_assert_eq!(n.flipped().flipped(), n);
        // the flipped left block is the original right block
        prop_assert_eq!(&n.flipped().flatten()[..63], &n.flatten()[63..]);
    }

    #[test]
    fn frame_labels_are_total(cuts in prop::collection::btree_set(0usize..200, 0..12), n_extra in 0usize..20) {
        let cuts: Vec<usize> = cuts.into_iter().collect();
        let segs: Vec<ActionSegment> = cuts
            .chunks_exact(2)
            .enumerate()
            .map(|(i, c)| ActionSegment { start_frame: c[0], end_frame: c[1], action: i + 1, verb: i % 3 + 1 })
            .collect();
        let n = cuts.last().map_or(0, |c| c + 1) + n_extra;
        let labels = assign_frame_labels(&segs, n).unwrap();
        prop_assert_eq!(labels.len(), n);
        for (f, l) in labels.iter().enumerate() {
            match segs.iter().find(|s| s.start_frame <= f && f <= s.end_frame) {
                Some(s) => prop_assert_eq!(l.action, s.action),
                None => prop_assert_eq!(l.action, BACKGROUND),
            }
        }
    }

    #[test]
    fn pareto_front_is_exact(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..10.0), 1..30)) {
        let rows: Vec<SweepRow> = pts.iter().map(|&(f, c)| row(f, c)).collect();
        let front = pareto_front(&rows);
        for a in &front {
            for b in &front {
                prop_assert!(!dominates(a, b));
            }
        }
        for r in &rows {
            let undominated = !rows.iter().any(|o| dominates(o, r));
            prop_assert_eq!(undominated, front.contains(r));
        }
        prop_assert!(front.windows(2).all(|w| w[0].cpu.median_cpu_seconds <= w[1].cpu.median_cpu_seconds));
    }

    #[test]
    fn csv_round_trip(pts in prop::collection::vec((0.0f64..1.0, 1e-9f64..10.0), 0..20)) {
        let rows: Vec<SweepRow> = pts.iter().map(|&(f, c)| row(f, c)).collect();
        let text = rows_to_csv(&rows).unwrap();
        prop_assert_eq!(text.lines().count(), rows.len() + 1);
        prop_assert_eq!(rows_from_csv(&text, Path::new("x.csv")).unwrap(), rows);
    }
}
