//! Synthetic takes with a controlled split of information between the two
//! modalities.
//!
//! The verb is carried only by the right hand's finger articulation: each
//! verb has its own per-finger base flexion, oscillation amplitude,
//! frequency and phase. Global hand position, orientation and size vary
//! independently of the label, so they are removed by normalization. The
//! object is carried only by the RGB features: one orthonormal cluster
//! center per object plus isotropic Gaussian noise. An action is a
//! `(verb, object)` pair.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::labels::{ActionSegment, BACKGROUND};
use super::take::{Dataset, Take};
use crate::error::{Error, Result};
use crate::handpose::{Hand, HandFrame, Point, KEYPOINTS};
use crate::nn::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n_takes: usize,
    pub frames_per_take: usize,
    pub n_verbs: usize,
    pub n_objects: usize,
    /// Std-dev of per-joint flexion noise, radians.
    pub motion_noise: f64,
    /// Std-dev of per-dimension RGB feature noise.
    pub feature_noise: f64,
    pub feature_dim: usize,
    /// Probability that the left hand is missing in a frame.
    pub left_dropout: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n_takes: 24,
            frames_per_take: 600,
            n_verbs: 4,
            n_objects: 3,
            motion_noise: 0.08,
            feature_noise: 0.3,
            feature_dim: 32,
            left_dropout: 0.1,
            seed: 0,
        }
    }
}

impl SynthSpec {
    pub fn n_actions(&self) -> usize {
        1 + self.n_verbs * self.n_objects
    }

    pub fn action_id(&self, verb: usize, object: usize) -> usize {
        1 + (verb - 1) * self.n_objects + object
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_takes == 0 {
            return Err(Error::Config("empty dataset: n_takes must be >= 1".into()));
        }
        if self.frames_per_take == 0 {
            return Err(Error::Config("frames_per_take must be >= 1".into()));
        }
        if self.n_verbs == 0 || self.n_objects == 0 {
            return Err(Error::Config("n_verbs and n_objects must be >= 1".into()));
        }
        if self.n_verbs > 8 {
            return Err(Error::Config(
                "at most 8 verbs can be kept separable".into(),
            ));
        }
        if self.n_objects > self.feature_dim {
            return Err(Error::Config(format!(
                "{} objects need feature_dim >= {0}, got {}",
                self.n_objects, self.feature_dim
            )));
        }
        if !(self.motion_noise >= 0.0 && self.feature_noise >= 0.0) {
            return Err(Error::Config("noise levels must be >= 0".into()));
        }
        if !(0.0..=1.0).contains(&self.left_dropout) {
            return Err(Error::Config("left_dropout must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Finger articulation pattern of one verb (index 0 is background).
#[derive(Debug, Clone, PartialEq)]
pub struct VerbProfile {
    pub base: [f64; 5],
    pub amplitude: [f64; 5],
    pub frequency_hz: f64,
    pub phase: [f64; 5],
}

/// Share of each finger's flexion taken by the MCP, PIP and DIP joints.
pub const JOINT_WEIGHTS: [f64; 3] = [1.0, 0.8, 0.6];
/// Minimum gap between two verbs' flexion intervals on their most
/// separated finger.
pub const VERB_MARGIN: f64 = 0.5;
const NATIVE_HZ: f64 = 30.0;

impl VerbProfile {
    fn background() -> Self {
        Self {
            base: [0.1; 5],
            amplitude: [0.03; 5],
            frequency_hz: 0.3,
            phase: [0.0, 1.0, 2.0, 3.0, 4.0],
        }
    }

    /// Finger flexion (before joint weighting) at time `t`.
    pub fn flexion(&self, finger: usize, t: f64) -> f64 {
        self.base[finger]
            + self.amplitude[finger] * (TAU * self.frequency_hz * t + self.phase[finger]).sin()
    }

    /// Largest gap between the two profiles' flexion intervals over fingers.
    pub fn separation(&self, other: &VerbProfile) -> f64 {
        (0..5)
            .map(|f| (self.base[f] - other.base[f]).abs() - self.amplitude[f] - other.amplitude[f])
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Static hand geometry of a right hand: offsets of the five finger bases
/// from the wrist, the in-palm pointing direction of each finger and its
/// three segment lengths (meters).
struct HandGeometry {
    base: [Point; 5],
    direction: [Point; 5],
    segments: [[f64; 3]; 5],
}

fn unit(p: Point) -> Point {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    [p[0] / n, p[1] / n, p[2] / n]
}

impl HandGeometry {
    fn right() -> Self {
        let spread = |a: f64| [a.sin(), a.cos(), 0.0];
        Self {
            base: [
                [0.025, 0.025, 0.0],
                [0.022, 0.085, 0.0],
                [0.0, 0.09, 0.0],
                [-0.02, 0.085, 0.0],
                [-0.038, 0.075, 0.0],
            ],
            direction: [
                unit([0.8, 0.6, 0.0]),
                spread(0.12),
                spread(0.0),
                spread(-0.1),
                spread(-0.2),
            ],
            segments: [
                [0.035, 0.03, 0.025],
                [0.04, 0.025, 0.02],
                [0.045, 0.028, 0.022],
                [0.042, 0.026, 0.02],
                [0.033, 0.02, 0.018],
            ],
        }
    }

    /// Keypoints in the hand's local frame for the given joint angles.
    fn pose(&self, angles: &[[f64; 3]; 5], scale: f64) -> Hand {
        let mut hand = [[0.0; 3]; KEYPOINTS];
        for f in 0..5 {
            let k0 = 1 + 4 * f;
            let mut p = [
                self.base[f][0] * scale,
                self.base[f][1] * scale,
                self.base[f][2] * scale,
            ];
            hand[k0] = p;
            let u = self.direction[f];
            let mut phi = 0.0;
            for j in 0..3 {
                phi += angles[f][j];
                let (s, c) = phi.sin_cos();
                let len = self.segments[f][j] * scale;
                p = [p[0] + len * c * u[0], p[1] + len * c * u[1], p[2] - len * s];
                hand[k0 + 1 + j] = p;
            }
        }
        hand
    }
}

fn rotation(yaw: f64, pitch: f64, roll: f64) -> [Point; 3] {
    let (sy, cy) = yaw.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sr, cr) = roll.sin_cos();
    // Rz(yaw) * Ry(pitch) * Rx(roll)
    [
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ]
}

fn place(hand: &Hand, r: &[Point; 3], t: Point) -> Hand {
    let mut out = *hand;
    for p in out.iter_mut() {
        let q = *p;
        *p = [
            r[0][0] * q[0] + r[0][1] * q[1] + r[0][2] * q[2] + t[0],
            r[1][0] * q[0] + r[1][1] * q[1] + r[1][2] * q[2] + t[1],
            r[2][0] * q[0] + r[2][1] * q[1] + r[2][2] * q[2] + t[2],
        ];
    }
    out
}

/// Slowly varying rigid placement of one hand.
struct Trajectory {
    angles: [f64; 3],
    angle_amp: [f64; 3],
    angle_freq: [f64; 3],
    angle_phase: [f64; 3],
    origin: Point,
    sway: [f64; 3],
    sway_freq: [f64; 3],
    sway_phase: [f64; 3],
}

impl Trajectory {
    fn sample<R: Rng>(rng: &mut R, origin: Point) -> Self {
        let mut a = || {
            [
                rng.gen_range(-0.6..0.6),
                rng.gen_range(0.1..0.4),
                rng.gen_range(0.05..0.25),
                rng.gen_range(0.0..TAU),
            ]
        };
        let (y, p, r) = (a(), a(), a());
        let mut s = || {
            [
                rng.gen_range(0.01..0.05),
                rng.gen_range(0.05..0.3),
                rng.gen_range(0.0..TAU),
            ]
        };
        let (sx, sy, sz) = (s(), s(), s());
        Self {
            angles: [y[0], p[0], r[0]],
            angle_amp: [y[1], p[1], r[1]],
            angle_freq: [y[2], p[2], r[2]],
            angle_phase: [y[3], p[3], r[3]],
            origin,
            sway: [sx[0], sy[0], sz[0]],
            sway_freq: [sx[1], sy[1], sz[1]],
            sway_phase: [sx[2], sy[2], sz[2]],
        }
    }

    fn at(&self, t: f64) -> ([Point; 3], Point) {
        let wave = |amp: f64, f: f64, ph: f64| amp * (TAU * f * t + ph).sin();
        let ang: Vec<f64> = (0..3)
            .map(|i| {
                self.angles[i] + wave(self.angle_amp[i], self.angle_freq[i], self.angle_phase[i])
            })
            .collect();
        let pos = [0, 1, 2]
            .map(|i| self.origin[i] + wave(self.sway[i], self.sway_freq[i], self.sway_phase[i]));
        (rotation(ang[0], ang[1], ang[2]), pos)
    }
}

/// The fixed latent structure behind a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthWorld {
    pub spec: SynthSpec,
    /// Index 0 is background, verb `v` is at index `v`.
    pub verbs: Vec<VerbProfile>,
    /// One unit-norm, mutually orthogonal center per object.
    pub centers: Vec<Vec<f64>>,
}

impl SynthWorld {
    pub fn new(spec: SynthSpec) -> Result<Self> {
        spec.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mut verbs = vec![VerbProfile::background()];
        let mut attempts = 0;
        while verbs.len() <= spec.n_verbs {
            attempts += 1;
            if attempts > 100_000 {
                return Err(Error::Config(
                    "could not place separable verb profiles".into(),
                ));
            }
            let cand = VerbProfile {
                base: [0; 5].map(|_| rng.gen_range(0.3..1.9)),
                amplitude: [0; 5].map(|_| rng.gen_range(0.05..0.15)),
                frequency_hz: rng.gen_range(0.5..1.5),
                phase: [0; 5].map(|_| rng.gen_range(0.0..TAU)),
            };
            if verbs.iter().all(|v| v.separation(&cand) >= VERB_MARGIN) {
                verbs.push(cand);
            }
        }
        // Gram-Schmidt over Gaussian draws
        let mut centers: Vec<Vec<f64>> = Vec::with_capacity(spec.n_objects);
        while centers.len() < spec.n_objects {
            let mut v: Vec<f64> = (0..spec.feature_dim)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect();
            for c in &centers {
                let d: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(c).for_each(|(a, b)| *a -= d * b);
            }
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if n > 1e-6 {
                centers.push(v.into_iter().map(|a| a / n).collect());
            }
        }
        Ok(Self {
            spec,
            verbs,
            centers,
        })
    }

    fn segments<R: Rng>(&self, rng: &mut R) -> Vec<(ActionSegment, usize)> {
        let n = self.spec.frames_per_take;
        let mut out = Vec::new();
        let mut t = rng.gen_range(10..=30);
        while t < n {
            let len = rng.gen_range(45..=120);
            let end = (t + len - 1).min(n - 1);
            if end + 1 - t < 15 {
                break;
            }
            let verb = rng.gen_range(1..=self.spec.n_verbs);
            let object = rng.gen_range(0..self.spec.n_objects);
            out.push((
                ActionSegment {
                    start_frame: t,
                    end_frame: end,
                    action: self.spec.action_id(verb, object),
                    verb,
                },
                object,
            ));
            t = end + 1 + rng.gen_range(10..=30);
        }
        out
    }

    fn take(&self, index: usize, seed: u64) -> Take {
        let spec = &self.spec;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = spec.frames_per_take;
        let segs = self.segments(&mut rng);

        // per-frame verb and visible object; gaps show the next object
        let mut verb_at = vec![BACKGROUND; n];
        let mut object_at = vec![segs.first().map_or(0, |s| s.1); n];
        let mut next_object = segs.last().map_or(0, |s| s.1);
        let mut seg_iter = segs.iter().rev().peekable();
        for f in (0..n).rev() {
            while let Some((s, o)) = seg_iter.peek() {
                if s.start_frame > f {
                    next_object = *o;
                    seg_iter.next();
                } else {
                    break;
                }
            }
            object_at[f] = next_object;
            if let Some((s, o)) = seg_iter.peek() {
                if f <= s.end_frame {
                    verb_at[f] = s.verb;
                    object_at[f] = *o;
                }
            }
        }

        let geometry = HandGeometry::right();
        let scale = rng.gen_range(0.85..1.15);
        let right_path = Trajectory::sample(&mut rng, [0.12, -0.1, 0.4]);
        let left_path = Trajectory::sample(&mut rng, [-0.12, -0.1, 0.4]);
        let idle = VerbProfile {
            base: [0.4; 5],
            amplitude: [0.05; 5],
            frequency_hz: 0.2,
            phase: [0; 5].map(|_| rng.gen_range(0.0..TAU)),
        };
        let joint_noise = Normal::new(0.0, spec.motion_noise).expect("validated noise");
        let feat_noise = Normal::new(0.0, spec.feature_noise).expect("validated noise");

        let mut hp_frames = Vec::with_capacity(n);
        let mut rgb = Matrix::zeros(n, spec.feature_dim);
        for f in 0..n {
            let t = f as f64 / NATIVE_HZ;
            let angles = |profile: &VerbProfile, rng: &mut ChaCha8Rng| {
                let mut a = [[0.0; 3]; 5];
                for (finger, joints) in a.iter_mut().enumerate() {
                    let flex = profile.flexion(finger, t);
                    for (j, v) in joints.iter_mut().enumerate() {
                        *v = JOINT_WEIGHTS[j] * flex + joint_noise.sample(rng);
                    }
                }
                a
            };
            let right_local = geometry.pose(&angles(&self.verbs[verb_at[f]], &mut rng), scale);
            let (r, p) = right_path.at(t);
            let right = place(&right_local, &r, p);

            let left_angles = angles(&idle, &mut rng);
            let left = if rng.gen_bool(spec.left_dropout) {
                None
            } else {
                let mut local = geometry.pose(&left_angles, scale);
                local.iter_mut().for_each(|q| q[0] = -q[0]);
                let (r, p) = left_path.at(t);
                Some(place(&local, &r, p))
            };
            hp_frames.push(HandFrame::new(left, Some(right)));

            let center = &self.centers[object_at[f]];
            for (d, v) in rgb.row_mut(f).iter_mut().enumerate() {
                // stored as f32 on disk; round now so files round-trip exactly
                *v = (center[d] + feat_noise.sample(&mut rng)) as f32 as f64;
            }
        }
        Take {
            id: format!("take_{index:03}"),
            hp_frames,
            rgb,
            segments: segs.into_iter().map(|(s, _)| s).collect(),
        }
    }

    pub fn generate(&self) -> Vec<Take> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.spec.seed ^ 0x5eed_7a4e);
        let seeds: Vec<u64> = (0..self.spec.n_takes).map(|_| rng.gen()).collect();
        seeds
            .iter()
            .enumerate()
            .map(|(i, &s)| self.take(i, s))
            .collect()
    }

    pub fn action_names(&self) -> Vec<(usize, String)> {
        let mut v = vec![(BACKGROUND, "background".to_string())];
        for verb in 1..=self.spec.n_verbs {
            for object in 0..self.spec.n_objects {
                v.push((
                    self.spec.action_id(verb, object),
                    format!("verb{verb} object{}", object + 1),
                ));
            }
        }
        v
    }

    pub fn verb_names(&self) -> Vec<(usize, String)> {
        std::iter::once((BACKGROUND, "background".to_string()))
            .chain((1..=self.spec.n_verbs).map(|v| (v, format!("verb{v}"))))
            .collect()
    }

    pub fn dataset(&self) -> Dataset {
        Dataset {
            takes: self.generate(),
            action_names: self.action_names(),
            verb_names: self.verb_names(),
        }
    }
}

/// Generates the takes described by `spec`.
pub fn synth_generate(spec: &SynthSpec) -> Result<Vec<Take>> {
    Ok(SynthWorld::new(*spec)?.generate())
}
