//! Per-frame feature extractors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ReferenceExtractorConfig;
use crate::error::{Error, Result};
use crate::handpose::FRAME_DIM;
use crate::nn::{join, Activation, Matrix, Mlp, MlpCache, Parameters};

/// Small stand-in for an image backbone: cut a `C×H×W` image into flattened
/// patches, apply one two-layer MLP to every patch and average over patches.
/// Weights are shared across patches, so they stay cache resident and cost
/// grows with the number of frames alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceExtractor {
    pub config: ReferenceExtractorConfig,
    pub mlp: Mlp,
    #[serde(skip)]
    perm: Vec<usize>,
}

/// `perm[j]` is the CHW offset that lands at position `j` after patchify.
fn patch_permutation(cfg: &ReferenceExtractorConfig) -> Vec<usize> {
    let (c, h, w, p) = (cfg.channels, cfg.height, cfg.width, cfg.patch);
    let mut perm = Vec::with_capacity(c * h * w);
    for pr in 0..h / p {
        for pc in 0..w / p {
            for ch in 0..c {
                for y in 0..p {
                    for x in 0..p {
                        perm.push(ch * h * w + (pr * p + y) * w + pc * p + x);
                    }
                }
            }
        }
    }
    perm
}

impl ReferenceExtractor {
    pub fn new<R: Rng + ?Sized>(
        config: ReferenceExtractorConfig,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            perm: patch_permutation(&config),
            mlp: Mlp::new(config.patch_dim(), config.hidden, out_dim, activation, rng),
            config,
        })
    }

    /// One row per patch, frames in order: `[frames * patches × patch_dim]`.
    pub fn patchify(&self, images: &Matrix) -> Result<Matrix> {
        let dim = self.config.input_dim();
        if images.cols() != dim {
            return Err(Error::Dimension(format!(
                "reference extractor expects {dim}-value images, got {}x{}",
                images.rows(),
                images.cols()
            )));
        }
        let perm = if self.perm.len() == dim {
            std::borrow::Cow::Borrowed(&self.perm)
        } else {
            std::borrow::Cow::Owned(patch_permutation(&self.config))
        };
        let mut data = Vec::with_capacity(images.rows() * dim);
        for n in 0..images.rows() {
            let src = images.row(n);
            data.extend(perm.iter().map(|&s| src[s]));
        }
        Matrix::from_vec(
            images.rows() * self.config.patches(),
            self.config.patch_dim(),
            data,
        )
    }

    /// Averages each frame's consecutive block of patch rows.
    fn pool(&self, tokens: &Matrix) -> Matrix {
        let p = self.config.patches();
        let frames = tokens.rows() / p;
        let mut out = Matrix::zeros(frames, tokens.cols());
        let scale = 1.0 / p as f64;
        for f in 0..frames {
            let row = out.row_mut(f);
            for t in f * p..(f + 1) * p {
                for (o, v) in row.iter_mut().zip(tokens.row(t)) {
                    *o += v;
                }
            }
            row.iter_mut().for_each(|o| *o *= scale);
        }
        out
    }

    /// Spreads a per-frame gradient evenly over that frame's patches.
    fn unpool(&self, grad: &Matrix) -> Matrix {
        let p = self.config.patches();
        let scale = 1.0 / p as f64;
        let mut out = Matrix::zeros(grad.rows() * p, grad.cols());
        for f in 0..grad.rows() {
            for t in f * p..(f + 1) * p {
                for (o, g) in out.row_mut(t).iter_mut().zip(grad.row(f)) {
                    *o = g * scale;
                }
            }
        }
        out
    }

    /// Runs frame by frame so each frame's patch activations stay in cache.
    pub fn forward(&self, images: &Matrix) -> Result<Matrix> {
        let mut out = Matrix::zeros(images.rows(), self.mlp.out_dim());
        for f in 0..images.rows() {
            let frame = Matrix::from_vec(1, images.cols(), images.row(f).to_vec())?;
            let y = self.pool(&self.mlp.forward(&self.patchify(&frame)?)?);
            out.row_mut(f).copy_from_slice(y.row(0));
        }
        Ok(out)
    }

    pub fn macs(&self, frames: usize) -> u64 {
        self.mlp.macs(frames * self.config.patches())
    }

    /// Mirrors a flattened `C×H×W` image left-to-right in place.
    pub fn flip_image(&self, image: &mut [f64]) {
        self.config.flip_image(image);
    }
}

/// A per-frame extractor as used inside a stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Extractor {
    /// Precomputed features of the given width, passed through.
    Identity {
        dim: usize,
    },
    /// Hand-pose MLP over 126 flattened normalized coordinates.
    HandPose(Mlp),
    Reference(ReferenceExtractor),
}

#[derive(Debug, Clone)]
pub enum ExtractorCache {
    None,
    Mlp(MlpCache),
}

impl Extractor {
    pub fn hand_pose<R: Rng + ?Sized>(
        hidden: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        Extractor::HandPose(Mlp::new(FRAME_DIM, hidden, out_dim, activation, rng))
    }

    pub fn input_dim(&self) -> usize {
        match self {
            Extractor::Identity { dim } => *dim,
            Extractor::HandPose(m) => m.in_dim(),
            Extractor::Reference(r) => r.config.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Extractor::Identity { dim } => *dim,
            Extractor::HandPose(m) => m.out_dim(),
            Extractor::Reference(r) => r.mlp.out_dim(),
        }
    }

    /// Multiply-accumulates to extract `frames` frames.
    pub fn macs(&self, frames: usize) -> u64 {
        match self {
            Extractor::Identity { .. } => 0,
            Extractor::HandPose(m) => m.macs(frames),
            Extractor::Reference(r) => r.macs(frames),
        }
    }

    fn check(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "extractor expects rows of length {}, got {}x{}",
                self.input_dim(),
                x.rows(),
                x.cols()
            )));
        }
        Ok(())
    }

    /// Extracts one feature row per input row.
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        self.check(x)?;
        match self {
            Extractor::Identity { .. } => Ok(x.clone()),
            Extractor::HandPose(m) => m.forward(x),
            Extractor::Reference(r) => r.forward(x),
        }
    }

    pub fn forward_cached(&self, x: &Matrix) -> Result<(Matrix, ExtractorCache)> {
        self.check(x)?;
        match self {
            Extractor::Identity { .. } => Ok((x.clone(), ExtractorCache::None)),
            Extractor::HandPose(m) => {
                let (y, c) = m.forward_cached(x)?;
                Ok((y, ExtractorCache::Mlp(c)))
            }
            Extractor::Reference(r) => {
                let (y, c) = r.mlp.forward_cached(&r.patchify(x)?)?;
                Ok((r.pool(&y), ExtractorCache::Mlp(c)))
            }
        }
    }

    /// Accumulates parameter gradients. Input gradients are not needed
    /// (inputs are data) and are not returned.
    pub fn backward(&self, cache: &ExtractorCache, grad_out: &Matrix, grads: &mut Extractor) {
        match (self, grads, cache) {
            (Extractor::Identity { .. }, _, _) => {}
            (Extractor::HandPose(m), Extractor::HandPose(g), ExtractorCache::Mlp(c)) => {
                m.backward(c, grad_out, g);
            }
            (Extractor::Reference(r), Extractor::Reference(g), ExtractorCache::Mlp(c)) => {
                r.mlp.backward(c, &r.unpool(grad_out), &mut g.mlp);
            }
            _ => panic!("extractor gradient buffer does not match the extractor"),
        }
    }

    /// Horizontal-flip hook for one RGB input row. Precomputed features have
    /// no spatial layout left to flip and are returned unchanged.
    pub fn flip_input(&self, row: &mut [f64]) {
        if let Extractor::Reference(r) = self {
            r.flip_image(row);
        }
    }
}

impl Parameters for Extractor {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        match self {
            Extractor::Identity { .. } => {}
            Extractor::HandPose(m) => m.visit(&join(prefix, "mlp"), f),
            Extractor::Reference(r) => r.mlp.visit(&join(prefix, "mlp"), f),
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        match self {
            Extractor::Identity { .. } => {}
            Extractor::HandPose(m) => m.visit_mut(&join(prefix, "mlp"), f),
            Extractor::Reference(r) => r.mlp.visit_mut(&join(prefix, "mlp"), f),
        }
    }
}
