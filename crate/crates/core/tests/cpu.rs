//! Measured CPU cost of one-second windows with the reference extractor.
//!
//! Host speed drifts over seconds, so comparisons use adjacent pairs of
//! measurements and take the median over pairs. Everything runs in one test
//! so that no other test thread competes for the cache while timing.

use mmtmlp::bench::{cpu_cost, CpuConfig, CpuSource};
use mmtmlp::model::{ModelConfig, ModelKind, RgbBackend};
use mmtmlp::sampling::RateConfig;

fn config(kind: ModelKind) -> ModelConfig {
    ModelConfig {
        kind,
        rgb_backend: RgbBackend::Reference,
        ..ModelConfig::default()
    }
}

fn measured(kind: ModelKind, f_rgb: f64, f_hp: f64) -> f64 {
    cpu_cost(
        &config(kind),
        &RateConfig::new(f_rgb, f_hp),
        &CpuConfig::default(),
    )
    .unwrap()
    .median_cpu_seconds
}

fn modeled(kind: ModelKind, f_rgb: f64, f_hp: f64) -> f64 {
    let cfg = CpuConfig {
        source: CpuSource::Model,
        ..CpuConfig::default()
    };
    cpu_cost(&config(kind), &RateConfig::new(f_rgb, f_hp), &cfg)
        .unwrap()
        .median_cpu_seconds
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn paired<F: FnMut() -> f64>(pairs: usize, mut f: F) -> f64 {
    median((0..pairs).map(|_| f()).collect())
}

#[test]
fn measured_cpu() {
    doubling_rgb_rate_roughly_doubles_cpu();
    hand_pose_stream_costs_less_than_rgb_stream();
    repeated_measurements_agree();
}

fn doubling_rgb_rate_roughly_doubles_cpu() {
    let ratio = paired(5, || {
        measured(ModelKind::RgbSeq, 20.0, 0.0) / measured(ModelKind::RgbSeq, 10.0, 0.0)
    });
    assert!((1.7..=2.3).contains(&ratio), "ratio {ratio}");
}

fn hand_pose_stream_costs_less_than_rgb_stream() {
    let (rgb, both) = (
        modeled(ModelKind::RgbSeq, 30.0, 0.0),
        modeled(ModelKind::MmTmlp, 30.0, 30.0),
    );
    assert!(both > rgb && both - rgb < rgb, "modeled {rgb} -> {both}");

    let extra = paired(3, || {
        let rgb = measured(ModelKind::RgbSeq, 30.0, 0.0);
        (measured(ModelKind::MmTmlp, 30.0, 30.0) - rgb) / rgb
    });
    assert!(extra < 1.0, "hand pose adds {extra} of the RGB cost");
}

fn repeated_measurements_agree() {
    let spread = paired(5, || {
        let (a, b) = (
            measured(ModelKind::MmTmlp, 10.0, 30.0),
            measured(ModelKind::MmTmlp, 10.0, 30.0),
        );
        (a - b).abs() / a.min(b)
    });
    assert!(spread <= 0.10, "relative spread {spread}");
}
