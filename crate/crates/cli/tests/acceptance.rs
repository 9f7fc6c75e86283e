//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Pass criterion numbers as arguments to run a subset.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use mmtmlp::bench::{
    macro_f1, measure_cpu, measurement_model, run_sweep, CpuConfig, GridPoint, RowStatus,
    SweepConfig, SweepRow,
};
use mmtmlp::dataset::{Dataset, PreparedTake, SplitConfig, SynthSpec, SynthWorld};
use mmtmlp::handpose::{
    normalize_hand, normalize_hand_frame, HandFrame, NormalizeConfig, NormalizedHandFrame, Point,
    SkeletonTopology, KEYPOINTS,
};
use mmtmlp::model::{
    Model, ModelConfig, ModelKind, RgbBackend, TemporalMlp, TemporalMlpConfig, TrainConfig,
};
use mmtmlp::nn::{softmax_cross_entropy, Activation, LayerNorm, Linear, Matrix, Mlp, Parameters};
use mmtmlp::sampling::{sample_indices, MultiRateWindow, RateConfig, WindowSource};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// ---------------------------------------------------------------- poses

fn quat_rotation(rng: &mut ChaCha8Rng) -> [Point; 3] {
    loop {
        let q: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        let n = q.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(0.1..=1.0).contains(&n) {
            continue;
        }
        let [w, x, y, z] = q.map(|v| v / n);
        return [
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
        ];
    }
}

fn random_hand(rng: &mut ChaCha8Rng) -> Vec<Point> {
    (0..KEYPOINTS)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-1.0..1.0)))
        .collect()
}

fn rigid(r: &[Point; 3], t: Point, h: &[Point]) -> Vec<Point> {
    h.iter()
        .map(|p| std::array::from_fn(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] + t[i]))
        .collect()
}

fn max_dev(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .zip(b)
        .flat_map(|(p, q)| (0..3).map(move |i| (p[i] - q[i]).abs()))
        .fold(0.0, f64::max)
}

fn random_lengths_config(rng: &mut ChaCha8Rng) -> NormalizeConfig {
    let lengths = (0..KEYPOINTS - 1)
        .map(|_| rng.gen_range(0.2..2.0))
        .collect();
    NormalizeConfig::with_topology(SkeletonTopology::hand(lengths).unwrap())
}

fn c1_rigid_invariance() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let cfg = random_lengths_config(&mut rng);
    let (mut worst, mut draws) = (0.0f64, 0);
    while draws < 1000 {
        let h = random_hand(&mut rng);
        let Ok(base) = normalize_hand(&h, &cfg) else {
            continue;
        };
        let r = quat_rotation(&mut rng);
        let t = std::array::from_fn(|_| rng.gen_range(-5.0..5.0));
        let moved = normalize_hand(&rigid(&r, t, &h), &cfg).map_err(|e| e.to_string())?;
        worst = worst.max(max_dev(&base, &moved));
        draws += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst < 1e-9 && secs < 10.0,
        format!("{draws} draws, max deviation {worst:.2e}, {secs:.2} s"),
    )
}

fn c2_normalization_contracts() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let (mut bone, mut idem, mut n) = (0.0f64, 0.0f64, 0);
    let mut wrist_exact = true;
    while n < 1000 {
        let cfg = random_lengths_config(&mut rng);
        let Ok(out) = normalize_hand(&random_hand(&mut rng), &cfg) else {
            continue;
        };
        wrist_exact &= out[0] == [0.0; 3];
        for (b, r) in cfg
            .topology
            .bone_lengths(&out)
            .iter()
            .zip(cfg.topology.reference_lengths())
        {
            bone = bone.max((b - r).abs());
        }
        idem = idem.max(max_dev(
            &out,
            &normalize_hand(&out, &cfg).map_err(|e| e.to_string())?,
        ));
        n += 1;
    }
    check(
        wrist_exact && bone < 1e-9 && idem < 1e-9,
        format!(
            "{n} hands, wrist exact: {wrist_exact}, bone error {bone:.2e}, idempotence {idem:.2e}"
        ),
    )
}

// ------------------------------------------------------------ gradients

const H: f64 = 1e-5;

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_vec(
        rows,
        cols,
        (0..rows * cols).map(|_| rng.gen_range(-1.0..1.0)).collect(),
    )
    .unwrap()
}

fn dot(out: &Matrix, r: &Matrix) -> f64 {
    out.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

fn grad_params<P: Parameters + Clone>(p: &P, analytic: &P, loss: impl Fn(&P) -> f64) -> f64 {
    let base = p.flatten();
    let grads = analytic.flatten();
    let mut probe = p.clone();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        let mut v = base.clone();
        v[i] = base[i] + H;
        probe.assign_flat(&v);
        let up = loss(&probe);
        v[i] = base[i] - H;
        probe.assign_flat(&v);
        let down = loss(&probe);
        worst = worst.max(rel_err(grads[i], (up - down) / (2.0 * H)));
    }
    worst
}

fn grad_input(x: &Matrix, analytic: &Matrix, loss: impl Fn(&Matrix) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.data().len() {
        let (mut up, mut down) = (x.clone(), x.clone());
        up.data_mut()[i] += H;
        down.data_mut()[i] -= H;
        worst = worst.max(rel_err(
            analytic.data()[i],
            (loss(&up) - loss(&down)) / (2.0 * H),
        ));
    }
    worst
}

fn random_frame(rng: &mut ChaCha8Rng) -> NormalizedHandFrame {
    let mut hand = || {
        let mut h = [[0.0; 3]; KEYPOINTS];
        for p in h.iter_mut().skip(1) {
            *p = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
        }
        h
    };
    normalize_hand_frame(
        &HandFrame::new(Some(hand()), Some(hand())),
        &NormalizeConfig::default(),
    )
    .unwrap()
}

fn model_grad_error(kind: ModelKind, backend: RgbBackend, rates: RateConfig, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cfg = ModelConfig {
        kind,
        n_actions: 4,
        rgb_backend: backend,
        d_rgb: 3,
        d_hp: 3,
        hp_hidden: 4,
        head_hidden: 5,
        temporal: TemporalMlpConfig {
            depth: 1,
            ..TemporalMlpConfig::default()
        },
        ..ModelConfig::default()
    };
    cfg.reference.channels = 1;
    cfg.reference.height = 4;
    cfg.reference.width = 4;
    cfg.reference.patch = 2;
    cfg.reference.hidden = 3;
    let model = Model::new(cfg, rates, &mut rng).unwrap();
    let seq = kind.is_sequence();
    let in_rgb = match backend {
        RgbBackend::Precomputed => 3,
        RgbBackend::Reference => 16,
    };
    let window = MultiRateWindow {
        rgb: kind
            .uses_rgb()
            .then(|| random(if seq { rates.rgb_len() } else { 1 }, in_rgb, &mut rng)),
        hp: kind.uses_hp().then(|| {
            (0..if seq { rates.hp_len() } else { 1 })
                .map(|_| random_frame(&mut rng))
                .collect()
        }),
        label: 2,
        verb: 1,
        source: WindowSource {
            take: "t".into(),
            end: 0,
        },
    };
    let loss = |m: &Model| {
        let l = m.forward(&window).unwrap();
        softmax_cross_entropy(&Matrix::from_vec(1, l.len(), l).unwrap(), &[2])
            .unwrap()
            .0
    };
    let mut g = model.zeros_like();
    model.loss_and_grad(&window, 1.0, &mut g).unwrap();
    grad_params(&model, &g, loss)
}

fn c3_gradient_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut report = Vec::new();

    let lin = Linear::new(5, 4, &mut rng);
    let (x, r) = (random(3, 5, &mut rng), random(3, 4, &mut rng));
    let mut g = lin.zeros_like();
    let gx = lin.backward(&x, &r, &mut g);
    let e =
        grad_params(&lin, &g, |l| dot(&l.forward(&x).unwrap(), &r))
            .max(grad_input(&x, &gx, |x| dot(&lin.forward(x).unwrap(), &r)));
    report.push(("linear", e));

    for act in [Activation::Relu, Activation::Gelu] {
        let mut x = random(4, 6, &mut rng);
        x.data_mut()
            .iter_mut()
            .filter(|v| v.abs() < 0.05)
            .for_each(|v| *v += 0.1);
        let r = random(4, 6, &mut rng);
        let gx = act.backward(&x, &r);
        report.push((
            if act == Activation::Relu {
                "relu"
            } else {
                "gelu"
            },
            grad_input(&x, &gx, |x| dot(&act.forward(x), &r)),
        ));
    }

    let mut ln = LayerNorm::new(6);
    ln.visit_mut("", &mut |_, _, d| {
        d.iter_mut().for_each(|v| *v += rng.gen_range(-0.5..0.5))
    });
    let (x, r) = (random(3, 6, &mut rng), random(3, 6, &mut rng));
    let (_, cache) = ln.forward(&x).unwrap();
    let mut g = ln.zeros_like();
    let gx = ln.backward(&cache, &r, &mut g);
    let e = grad_params(&ln, &g, |l| dot(&l.forward(&x).unwrap().0, &r)).max(grad_input(
        &x,
        &gx,
        |x| dot(&ln.forward(x).unwrap().0, &r),
    ));
    report.push(("layer_norm", e));

    let mlp = Mlp::new(5, 7, 3, Activation::Gelu, &mut rng);
    let (x, r) = (random(4, 5, &mut rng), random(4, 3, &mut rng));
    let (_, cache) = mlp.forward_cached(&x).unwrap();
    let mut g = mlp.zeros_like();
    let gx = mlp.backward(&cache, &r, &mut g);
    let e =
        grad_params(&mlp, &g, |m| dot(&m.forward(&x).unwrap(), &r))
            .max(grad_input(&x, &gx, |x| dot(&mlp.forward(x).unwrap(), &r)));
    report.push(("mlp", e));

    let tcfg = TemporalMlpConfig {
        depth: 2,
        ..TemporalMlpConfig::default()
    };
    let t = TemporalMlp::new(4, 3, &tcfg, &mut rng).unwrap();
    let (x, r) = (random(4, 3, &mut rng), random(4, 3, &mut rng));
    let (_, cache) = t.forward_cached(&x).unwrap();
    let mut g = t.zeros_like();
    let gx = t.backward(&cache, &r, &mut g);
    let e =
        grad_params(&t, &g, |m| dot(&m.forward(&x).unwrap(), &r))
            .max(grad_input(&x, &gx, |x| dot(&t.forward(x).unwrap(), &r)));
    report.push(("temporal_mlp", e));

    let rates = RateConfig::new(3.0, 5.0).with_window_seconds(1.0);
    if (rates.rgb_len(), rates.hp_len()) != (3, 5) {
        return Err("window lengths are not T_rgb=3, T_hp=5".into());
    }
    report.push((
        "mm_tmlp",
        model_grad_error(ModelKind::MmTmlp, RgbBackend::Precomputed, rates, 104),
    ));
    report.push((
        "mm_tmlp+reference",
        model_grad_error(ModelKind::MmTmlp, RgbBackend::Reference, rates, 105),
    ));
    report.push((
        "rgb_seq",
        model_grad_error(ModelKind::RgbSeq, RgbBackend::Precomputed, rates, 106),
    ));
    report.push((
        "fusionnet",
        model_grad_error(ModelKind::FusionNet, RgbBackend::Precomputed, rates, 107),
    ));
    report.push((
        "hp_mlp",
        model_grad_error(ModelKind::HpMlp, RgbBackend::Precomputed, rates, 108),
    ));

    let worst = report.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    let (name, _) = report.iter().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    check(
        worst < 1e-4,
        format!(
            "{} checks, max relative error {worst:.2e} ({name})",
            report.len()
        ),
    )
}

// -------------------------------------------------------------- metrics

fn f1_oracle(pred: &[usize], labels: &[usize], n: usize) -> f64 {
    let mut cm = vec![vec![0usize; n]; n];
    for (&p, &l) in pred.iter().zip(labels) {
        cm[l][p] += 1;
    }
    let mut scores = Vec::new();
    for c in 0..n {
        let tp = cm[c][c];
        let col: usize = (0..n).map(|r| cm[r][c]).sum();
        let row: usize = cm[c].iter().sum();
        if row + col == 0 {
            continue;
        }
        let (fp, fn_) = (col - tp, row - tp);
        scores.push(if 2 * tp + fp + fn_ == 0 {
            0.0
        } else {
            2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
        });
    }
    scores.iter().sum::<f64>() / scores.len() as f64
}

fn c4_metric_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    let mut zero_support = 0;
    for i in 0..100 {
        let c = rng.gen_range(1..=40);
        let n = rng.gen_range(1..=1000);
        // labels draw from a prefix of the classes, so some predicted
        // classes have no support
        let label_classes = rng.gen_range(1..=c);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..label_classes)).collect();
        let pred: Vec<usize> = (0..n).map(|_| rng.gen_range(0..c)).collect();
        if pred.iter().any(|&p| p >= label_classes) {
            zero_support += 1;
        }
        let got = macro_f1(&pred, &labels, c).map_err(|e| e.to_string())?;
        let want = f1_oracle(&pred, &labels, c);
        if got != want {
            return Err(format!("instance {i}: {got} != oracle {want}"));
        }
    }
    check(
        zero_support > 0,
        format!("100 instances exact, {zero_support} with zero-support classes"),
    )
}

// ------------------------------------------------------------- sampling

fn c5_sampling() -> Outcome {
    let cases: [(f64, Vec<usize>); 3] = [
        (30.0, (0..60).collect()),
        (10.0, (0..20).map(|k| 3 * k + 2).collect()),
        (1.0, vec![29, 59]),
    ];
    for (f, want) in &cases {
        let got = sample_indices(30.0, *f, 60).map_err(|e| e.to_string())?;
        if &got != want {
            return Err(format!("f = {f}: {got:?}"));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for _ in 0..200 {
        let f = rng.gen_range(0.1..=30.0);
        let w = rng.gen_range(1..=600);
        let idx = sample_indices(30.0, f, w).map_err(|e| e.to_string())?;
        if idx.last() != Some(&(w - 1)) {
            return Err(format!(
                "f = {f}, window = {w}: last index {:?}",
                idx.last()
            ));
        }
    }
    Ok("3 reference cases exact, 200 random windows anchored at the last frame".into())
}

// ------------------------------------------------------------------ CPU

fn c6_cpu_scaling() -> Outcome {
    let start = Instant::now();
    let config = ModelConfig {
        kind: ModelKind::MmTmlp,
        rgb_backend: RgbBackend::Reference,
        ..ModelConfig::default()
    };
    let cpu = CpuConfig::default();
    let measure = |f_rgb: f64| -> Result<f64, String> {
        let m = measurement_model(&config, &RateConfig::new(f_rgb, 30.0), 0)
            .map_err(|e| e.to_string())?;
        Ok(measure_cpu(&m, &cpu)
            .map_err(|e| e.to_string())?
            .median_cpu_seconds)
    };
    // Host speed drifts over seconds, so each ratio comes from two adjacent
    // measurements and the median is taken over pairs.
    let mut pairs = Vec::new();
    for _ in 0..5 {
        pairs.push((measure(30.0)?, measure(10.0)?));
    }
    pairs.sort_by(|a, b| (a.0 / a.1).total_cmp(&(b.0 / b.1)));
    let (hi, lo) = pairs[pairs.len() / 2];
    let ratio = hi / lo;
    let secs = start.elapsed().as_secs_f64();
    check(
        (2.5..=3.5).contains(&ratio) && secs < 120.0,
        format!("median pair {hi:.4} s / {lo:.4} s = {ratio:.3}, {secs:.1} s"),
    )
}

// ----------------------------------------------------- synthetic sweeps

fn synthetic_takes() -> (Vec<PreparedTake>, Vec<usize>, usize) {
    let ds: Dataset = SynthWorld::new(SynthSpec::default()).unwrap().dataset();
    let lengths = mmtmlp::dataset::compute_reference_lengths(&ds.takes).unwrap();
    let norm = NormalizeConfig::with_topology(SkeletonTopology::hand(lengths).unwrap());
    let takes = ds.takes.iter().map(|t| t.prepare(&norm).unwrap()).collect();
    (takes, ds.action_to_verb(), ds.n_actions())
}

fn sweep_config(n_actions: usize) -> SweepConfig {
    SweepConfig {
        model: ModelConfig {
            n_actions,
            d_rgb: SynthSpec::default().feature_dim,
            d_hp: 32,
            hp_hidden: 64,
            head_hidden: 64,
            temporal: TemporalMlpConfig {
                depth: 1,
                ..TemporalMlpConfig::default()
            },
            ..ModelConfig::default()
        },
        rates: RateConfig::default().with_window_seconds(1.0),
        train: TrainConfig {
            epochs: 10,
            ..TrainConfig::default()
        },
        split: SplitConfig {
            stride: 10,
            ..SplitConfig::default()
        },
        ..SweepConfig::new(ModelConfig::default())
    }
}

/// Rows for MM-TMLP(30,30), MM-TMLP(10,30), RGB-only(30) and HP-MLP(30),
/// shared by criteria 7 and 8.
fn synthetic_rows() -> &'static Result<(Vec<SweepRow>, f64), String> {
    static ROWS: std::sync::OnceLock<Result<(Vec<SweepRow>, f64), String>> =
        std::sync::OnceLock::new();
    ROWS.get_or_init(|| {
        let start = Instant::now();
        let (takes, a2v, n) = synthetic_takes();
        let grid = [
            GridPoint::new(ModelKind::MmTmlp, 30.0, 30.0),
            GridPoint::new(ModelKind::MmTmlp, 10.0, 30.0),
            GridPoint::new(ModelKind::RgbSeq, 30.0, 0.0),
            GridPoint::new(ModelKind::HpMlp, 0.0, 30.0),
        ];
        let rows =
            run_sweep(&grid, &takes, &a2v, &sweep_config(n), None).map_err(|e| e.to_string())?;
        if let Some(r) = rows.iter().find(|r| r.status == RowStatus::Failed) {
            return Err(format!("{} diverged", r.point()));
        }
        Ok((rows, start.elapsed().as_secs_f64()))
    })
}

fn c7_fusion_reproduction() -> Outcome {
    let (rows, secs) = synthetic_rows().as_ref().map_err(Clone::clone)?;
    let (mm30, mm10, rgb) = (&rows[0], &rows[1], &rows[2]);
    let gain = mm30.macro_f1_action - rgb.macro_f1_action;
    let keep = mm10.macro_f1_action / mm30.macro_f1_action;
    let cpu = mm10.cpu.median_cpu_seconds / mm30.cpu.median_cpu_seconds;
    check(
        gain >= 0.05 && keep >= 0.95 && cpu <= 0.40 && *secs < 1800.0,
        format!(
            "F1 MM(30,30) {:.3} vs RGB(30) {:.3} (+{gain:.3}); MM(10,30) keeps {:.1}% of F1 at {:.1}% CPU; {secs:.0} s",
            mm30.macro_f1_action,
            rgb.macro_f1_action,
            100.0 * keep,
            100.0 * cpu
        ),
    )
}

fn c8_hand_pose_gap() -> Outcome {
    let (rows, _) = synthetic_rows().as_ref().map_err(Clone::clone)?;
    let hp = &rows[3];
    check(
        hp.macro_f1_verb >= 0.9 && hp.macro_f1_action <= hp.macro_f1_verb - 0.2,
        format!(
            "HP-MLP verb F1 {:.3}, action F1 {:.3}",
            hp.macro_f1_verb, hp.macro_f1_action
        ),
    )
}

// ---------------------------------------------------------- determinism

const TINY: &str = r#"
[dataset]
path = "data"
[dataset.synth]
n_takes = 6
frames_per_take = 300
[model]
d_rgb = 32
d_hp = 16
hp_hidden = 32
head_hidden = 32
[model.temporal]
depth = 1
[rates]
window_seconds = 1.0
[train]
epochs = 4
[split]
stride = 10
[bench]
source = "model"
[grid]
kinds = ["mm_tmlp", "fusion_net"]
f_rgb = [10.0, 30.0]
f_hp = [30.0]
[output]
dir = "runs"
"#;

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let o = Command::new(env!("CARGO_BIN_EXE_mmtmlp"))
        .args(args)
        .current_dir(dir)
        .output()
        .map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("{args:?}: {}", String::from_utf8_lossy(&o.stderr)))
    }
}

fn c9_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let d = dir.path();
    fs::write(d.join("c.toml"), TINY).map_err(|e| e.to_string())?;
    run_cli(d, &["-c", "c.toml", "synth"])?;
    let read = |p: &str| fs::read(d.join(p)).map_err(|e| format!("{p}: {e}"));
    let mut files = Vec::new();
    for _ in 0..2 {
        run_cli(d, &["-c", "c.toml", "train"])?;
        run_cli(d, &["-c", "c.toml", "sweep", "--restart"])?;
        files.push((
            read("runs/history.csv")?,
            read("runs/results.csv")?,
            read("runs/checkpoint.json")?,
        ));
    }
    let (a, b) = (&files[0], &files[1]);
    let rows = String::from_utf8_lossy(&a.1).lines().count() - 1;
    check(
        a == b && rows == 4,
        format!(
            "history ({} B), results ({rows} rows, {} B) and checkpoint byte-identical across reruns: {}",
            a.0.len(),
            a.1.len(),
            a == b
        ),
    )
}

// ----------------------------------------------------- degenerate case

fn c10_fusionnet_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    for (seed, backend) in [(110, RgbBackend::Precomputed), (111, RgbBackend::Reference)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cfg = ModelConfig {
            kind: ModelKind::MmTmlp,
            n_actions: 7,
            rgb_backend: backend,
            d_rgb: 12,
            d_hp: 10,
            hp_hidden: 16,
            head_hidden: 16,
            ..ModelConfig::default()
        };
        cfg.reference.height = 8;
        cfg.reference.width = 8;
        cfg.reference.patch = 4;
        cfg.reference.hidden = 16;
        let rates = RateConfig::new(1.0, 1.0).with_window_seconds(1.0);
        if (rates.rgb_len(), rates.hp_len()) != (1, 1) {
            return Err("rates do not give T = 1".into());
        }
        let mut mm = Model::new(cfg, rates, &mut rng).map_err(|e| e.to_string())?;
        mm.zero_temporal_residuals();
        let mut fusion = Model::new(cfg.with_kind(ModelKind::FusionNet), rates, &mut rng)
            .map_err(|e| e.to_string())?;
        // share extractor and head parameters
        fusion.rgb.as_mut().unwrap().extractor = mm.rgb.as_ref().unwrap().extractor.clone();
        fusion.hp.as_mut().unwrap().extractor = mm.hp.as_ref().unwrap().extractor.clone();
        fusion.head = mm.head.clone();
        let in_rgb = match backend {
            RgbBackend::Precomputed => cfg.d_rgb,
            RgbBackend::Reference => {
                cfg.reference.channels * cfg.reference.height * cfg.reference.width
            }
        };
        for _ in 0..20 {
            let rgb = random(1, in_rgb, &mut rng);
            let hp = Matrix::from_rows(&[random_frame(&mut rng).flatten()]).unwrap();
            let a = mm
                .forward_inputs(Some(&rgb), Some(&hp))
                .map_err(|e| e.to_string())?;
            let b = fusion
                .forward_inputs(Some(&rgb), Some(&hp))
                .map_err(|e| e.to_string())?;
            worst = a
                .iter()
                .zip(&b)
                .map(|(x, y)| (x - y).abs())
                .fold(worst, f64::max);
        }
    }
    check(
        worst <= 1e-12,
        format!("40 windows, max logit difference {worst:.2e}"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("normalization rigid invariance", c1_rigid_invariance),
        ("normalization contracts", c2_normalization_contracts),
        ("gradient checks", c3_gradient_checks),
        ("macro F1 oracle", c4_metric_oracle),
        ("sampling formula", c5_sampling),
        ("CPU scaling with f_rgb", c6_cpu_scaling),
        (
            "fusion beats RGB-only; 10 Hz RGB keeps F1 at a third of the CPU",
            c7_fusion_reproduction,
        ),
        ("hand pose knows verbs, not objects", c8_hand_pose_gap),
        ("determinism of train and sweep", c9_determinism),
        ("T=1 MM-TMLP equals FusionNet", c10_fusionnet_equivalence),
    ];
    let selected: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !selected.is_empty() && !selected.contains(&n) {
            continue;
        }
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
