//! Two-stream network: per-stream extraction and temporal mixing, final-step
//! concatenation, classifier head.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, ModelKind, RgbBackend};
use super::extractor::{Extractor, ExtractorCache, ReferenceExtractor};
use super::temporal::{TemporalCache, TemporalMlp};
use crate::error::{Error, Result};
use crate::nn::{join, softmax_cross_entropy, Checkpoint, Matrix, Mlp, MlpCache, Parameters};
use crate::sampling::{MultiRateWindow, RateConfig};

/// One modality: extractor, then optional temporal mixing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stream {
    pub extractor: Extractor,
    /// `None` for single-frame models, which only look at the final frame.
    pub temporal: Option<TemporalMlp>,
}

#[derive(Debug, Clone)]
struct StreamCache {
    extractor: ExtractorCache,
    temporal: Option<(TemporalCache, usize)>,
}

impl Stream {
    pub fn feature_dim(&self) -> usize {
        self.extractor.output_dim()
    }

    /// Number of input rows the stream consumes.
    pub fn seq_len(&self) -> Option<usize> {
        self.temporal.as_ref().map(TemporalMlp::seq_len)
    }

    fn frames<'a>(&self, input: &'a Matrix) -> Result<std::borrow::Cow<'a, Matrix>> {
        match self.seq_len() {
            Some(t) if input.rows() != t => Err(Error::Dimension(format!(
                "stream built for {t} time steps, window has {}",
                input.rows()
            ))),
            Some(_) => Ok(std::borrow::Cow::Borrowed(input)),
            None if input.rows() == 0 => Err(Error::Data("empty stream input".into())),
            None => Ok(std::borrow::Cow::Owned(
                input.select_rows(&[input.rows() - 1])?,
            )),
        }
    }

    /// Feature vector at the final time step.
    pub fn forward(&self, input: &Matrix) -> Result<Vec<f64>> {
        let frames = self.frames(input)?;
        let feats = self.extractor.forward(&frames)?;
        let out = match &self.temporal {
            Some(t) => t.forward(&feats)?,
            None => feats,
        };
        Ok(out.row(out.rows() - 1).to_vec())
    }

    fn forward_cached(&self, input: &Matrix) -> Result<(Vec<f64>, StreamCache)> {
        let frames = self.frames(input)?;
        let (feats, extractor) = self.extractor.forward_cached(&frames)?;
        let (out, temporal) = match &self.temporal {
            Some(t) => {
                let (o, c) = t.forward_cached(&feats)?;
                (o, Some((c, feats.rows())))
            }
            None => (feats, None),
        };
        Ok((
            out.row(out.rows() - 1).to_vec(),
            StreamCache {
                extractor,
                temporal,
            },
        ))
    }

    fn backward(&self, cache: &StreamCache, grad_final: &[f64], grads: &mut Stream) {
        let d = grad_final.len();
        let g_feats = match (&self.temporal, &cache.temporal) {
            (Some(t), Some((tc, rows))) => {
                let mut g = Matrix::zeros(*rows, d);
                g.row_mut(rows - 1).copy_from_slice(grad_final);
                t.backward(
                    tc,
                    &g,
                    grads.temporal.as_mut().expect("matching gradient stream"),
                )
            }
            _ => Matrix::from_vec(1, d, grad_final.to_vec()).expect("sized"),
        };
        self.extractor
            .backward(&cache.extractor, &g_feats, &mut grads.extractor);
    }

    /// Inference cost for one window.
    pub fn macs(&self) -> u64 {
        match &self.temporal {
            Some(t) => self.extractor.macs(t.seq_len()) + t.macs(),
            None => self.extractor.macs(1),
        }
    }
}

impl Parameters for Stream {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.extractor.visit(&join(prefix, "extractor"), f);
        self.temporal.visit(&join(prefix, "temporal"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.extractor.visit_mut(&join(prefix, "extractor"), f);
        self.temporal.visit_mut(&join(prefix, "temporal"), f);
    }
}

/// Concatenates the two extractor outputs and classifies them.
pub fn fusionnet_forward(rgb_feat: &[f64], hp_feat: &[f64], head: &Mlp) -> Result<Vec<f64>> {
    if rgb_feat.len() + hp_feat.len() != head.in_dim() {
        return Err(Error::Dimension(format!(
            "head expects {} features, got {} + {}",
            head.in_dim(),
            rgb_feat.len(),
            hp_feat.len()
        )));
    }
    let mut x = Vec::with_capacity(head.in_dim());
    x.extend_from_slice(rgb_feat);
    x.extend_from_slice(hp_feat);
    Ok(head.forward(&Matrix::from_vec(1, x.len(), x)?)?.into_data())
}

/// Model header stored in checkpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelHeader {
    pub config: ModelConfig,
    pub rates: RateConfig,
}

/// Any of the four model kinds; streams absent from a kind are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    pub rates: RateConfig,
    pub rgb: Option<Stream>,
    pub hp: Option<Stream>,
    pub head: Mlp,
}

impl Model {
    pub fn new<R: Rng + ?Sized>(
        config: ModelConfig,
        rates: RateConfig,
        rng: &mut R,
    ) -> Result<Self> {
        config.validate()?;
        rates.validate()?;
        let kind = config.kind;
        let seq = kind.is_sequence();
        if kind.uses_rgb() && !rates.rgb_enabled() {
            return Err(Error::Config(format!("{kind} needs f_rgb > 0")));
        }
        if kind.uses_hp() && !rates.hp_enabled() {
            return Err(Error::Config(format!("{kind} needs f_hp > 0")));
        }
        let rgb = if kind.uses_rgb() {
            let extractor = match config.rgb_backend {
                RgbBackend::Precomputed => Extractor::Identity { dim: config.d_rgb },
                RgbBackend::Reference => Extractor::Reference(ReferenceExtractor::new(
                    config.reference,
                    config.d_rgb,
                    config.activation,
                    rng,
                )?),
            };
            let temporal = if seq {
                Some(TemporalMlp::new(
                    rates.rgb_len(),
                    config.d_rgb,
                    &config.temporal,
                    rng,
                )?)
            } else {
                None
            };
            Some(Stream {
                extractor,
                temporal,
            })
        } else {
            None
        };
        let hp = if kind.uses_hp() {
            let extractor =
                Extractor::hand_pose(config.hp_hidden, config.d_hp, config.activation, rng);
            let temporal = if seq {
                Some(TemporalMlp::new(
                    rates.hp_len(),
                    config.d_hp,
                    &config.temporal,
                    rng,
                )?)
            } else {
                None
            };
            Some(Stream {
                extractor,
                temporal,
            })
        } else {
            None
        };
        let fused = rgb.as_ref().map_or(0, Stream::feature_dim)
            + hp.as_ref().map_or(0, Stream::feature_dim);
        if fused == 0 {
            return Err(Error::Config("both streams disabled".into()));
        }
        let head = Mlp::new(
            fused,
            config.head_hidden,
            config.n_actions,
            config.activation,
            rng,
        );
        Ok(Self {
            config,
            rates,
            rgb,
            hp,
            head,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.config.kind
    }

    pub fn n_actions(&self) -> usize {
        self.config.n_actions
    }

    pub fn header(&self) -> ModelHeader {
        ModelHeader {
            config: self.config,
            rates: self.rates,
        }
    }

    fn inputs<'a>(
        stream: &Option<Stream>,
        input: Option<&'a Matrix>,
        name: &str,
    ) -> Result<Option<&'a Matrix>> {
        match (stream, input) {
            (Some(_), Some(x)) => Ok(Some(x)),
            (Some(_), None) => Err(Error::Data(format!("window is missing the {name} stream"))),
            (None, _) => Ok(None),
        }
    }

    /// Logits for one window given raw stream inputs.
    pub fn forward_inputs(&self, rgb: Option<&Matrix>, hp: Option<&Matrix>) -> Result<Vec<f64>> {
        let rgb = Self::inputs(&self.rgb, rgb, "rgb")?;
        let hp = Self::inputs(&self.hp, hp, "hand-pose")?;
        let rgb_feat = match (&self.rgb, rgb) {
            (Some(s), Some(x)) => s.forward(x)?,
            _ => Vec::new(),
        };
        let hp_feat = match (&self.hp, hp) {
            (Some(s), Some(x)) => s.forward(x)?,
            _ => Vec::new(),
        };
        fusionnet_forward(&rgb_feat, &hp_feat, &self.head)
    }

    pub fn forward(&self, window: &MultiRateWindow) -> Result<Vec<f64>> {
        let hp = if self.hp.is_some() {
            window.hp_matrix()
        } else {
            None
        };
        self.forward_inputs(window.rgb.as_ref(), hp.as_ref())
    }

    pub fn predict(&self, window: &MultiRateWindow) -> Result<usize> {
        Ok(argmax(&self.forward(window)?))
    }

    /// Cross-entropy of one window; accumulates parameter gradients into
    /// `grads`, scaled by `weight` (e.g. `1 / batch_size`).
    pub fn loss_and_grad(
        &self,
        window: &MultiRateWindow,
        weight: f64,
        grads: &mut Model,
    ) -> Result<f64> {
        let hp_m = if self.hp.is_some() {
            window.hp_matrix()
        } else {
            None
        };
        let rgb = Self::inputs(&self.rgb, window.rgb.as_ref(), "rgb")?;
        let hp = Self::inputs(&self.hp, hp_m.as_ref(), "hand-pose")?;
        let rgb_out = match (&self.rgb, rgb) {
            (Some(s), Some(x)) => Some(s.forward_cached(x)?),
            _ => None,
        };
        let hp_out = match (&self.hp, hp) {
            (Some(s), Some(x)) => Some(s.forward_cached(x)?),
            _ => None,
        };
        let mut fused = Vec::with_capacity(self.head.in_dim());
        if let Some((f, _)) = &rgb_out {
            fused.extend_from_slice(f);
        }
        if let Some((f, _)) = &hp_out {
            fused.extend_from_slice(f);
        }
        let fused = Matrix::from_vec(1, fused.len(), fused)?;
        let (logits, head_cache): (Matrix, MlpCache) = self.head.forward_cached(&fused)?;
        let (loss, mut g_logits) = softmax_cross_entropy(&logits, &[window.label])?;
        g_logits.data_mut().iter_mut().for_each(|g| *g *= weight);
        let g_fused = self.head.backward(&head_cache, &g_logits, &mut grads.head);
        let split = rgb_out.as_ref().map_or(0, |(f, _)| f.len());
        let g = g_fused.row(0);
        if let (Some(s), Some((_, c))) = (&self.rgb, &rgb_out) {
            s.backward(
                c,
                &g[..split],
                grads.rgb.as_mut().expect("matching gradient model"),
            );
        }
        if let (Some(s), Some((_, c))) = (&self.hp, &hp_out) {
            s.backward(
                c,
                &g[split..],
                grads.hp.as_mut().expect("matching gradient model"),
            );
        }
        Ok(loss)
    }

    /// Zeroes the residual outputs of every temporal block in both streams.
    pub fn zero_temporal_residuals(&mut self) {
        for s in [&mut self.rgb, &mut self.hp].into_iter().flatten() {
            if let Some(t) = &mut s.temporal {
                t.zero_residual_outputs();
            }
        }
    }

    /// Multiply-accumulates for one window forward.
    pub fn macs(&self) -> u64 {
        self.rgb.as_ref().map_or(0, Stream::macs)
            + self.hp.as_ref().map_or(0, Stream::macs)
            + self.head.macs(1)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        Checkpoint::capture(self.header(), self).save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ckpt = Checkpoint::<ModelHeader>::load(path)?;
        let mut rng = rand::rngs::mock::StepRng::new(0, 0);
        let mut model = Model::new(ckpt.header.config, ckpt.header.rates, &mut rng)?;
        ckpt.restore(&mut model)?;
        Ok(model)
    }
}

impl Parameters for Model {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.rgb.visit(&join(prefix, "rgb"), f);
        self.hp.visit(&join(prefix, "hp"), f);
        self.head.visit(&join(prefix, "head"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.rgb.visit_mut(&join(prefix, "rgb"), f);
        self.hp.visit_mut(&join(prefix, "hp"), f);
        self.head.visit_mut(&join(prefix, "head"), f);
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}
