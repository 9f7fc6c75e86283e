//! Temporal MLP: stacked pre-norm residual blocks that alternate mixing
//! across time steps (per channel) and across channels (per time step).
//!
//! ```text
//! x1 = x  + transpose(time_mlp(transpose(norm_time(x))))
//! x2 = x1 + channel_mlp(norm_channel(x1))
//! ```
//!
//! The time-mixing MLP maps `T -> hT -> T`, so a block is tied to the
//! sequence length it was built for.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::{hidden_width, TemporalMlpConfig};
use crate::error::{Error, Result};
use crate::nn::{join, LayerNorm, LayerNormCache, Matrix, Mlp, MlpCache, Parameters};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalBlock {
    pub norm_time: LayerNorm,
    pub time_mlp: Mlp,
    pub norm_channel: LayerNorm,
    pub channel_mlp: Mlp,
}

#[derive(Debug, Clone)]
struct BlockCache {
    norm_time: LayerNormCache,
    time_mlp: MlpCache,
    norm_channel: LayerNormCache,
    channel_mlp: MlpCache,
}

impl TemporalBlock {
    fn new<R: Rng + ?Sized>(
        seq_len: usize,
        dim: usize,
        cfg: &TemporalMlpConfig,
        rng: &mut R,
    ) -> Self {
        Self {
            norm_time: LayerNorm::new(dim),
            time_mlp: Mlp::new(
                seq_len,
                hidden_width(seq_len, cfg.time_hidden_ratio),
                seq_len,
                cfg.activation,
                rng,
            ),
            norm_channel: LayerNorm::new(dim),
            channel_mlp: Mlp::new(
                dim,
                hidden_width(dim, cfg.channel_hidden_ratio),
                dim,
                cfg.activation,
                rng,
            ),
        }
    }

    fn forward(&self, x: &Matrix) -> Result<(Matrix, BlockCache)> {
        let (u, norm_time) = self.norm_time.forward(x)?;
        let (y, time_mlp) = self.time_mlp.forward_cached(&u.transpose())?;
        let mut x1 = x.clone();
        x1.add_assign(&y.transpose());
        let (v, norm_channel) = self.norm_channel.forward(&x1)?;
        let (z, channel_mlp) = self.channel_mlp.forward_cached(&v)?;
        let mut x2 = x1;
        x2.add_assign(&z);
        Ok((
            x2,
            BlockCache {
                norm_time,
                time_mlp,
                norm_channel,
                channel_mlp,
            },
        ))
    }

    fn backward(&self, cache: &BlockCache, grad_out: &Matrix, grads: &mut TemporalBlock) -> Matrix {
        let g_v = self
            .channel_mlp
            .backward(&cache.channel_mlp, grad_out, &mut grads.channel_mlp);
        let mut g_x1 = grad_out.clone();
        g_x1.add_assign(&self.norm_channel.backward(
            &cache.norm_channel,
            &g_v,
            &mut grads.norm_channel,
        ));
        let g_ut = self
            .time_mlp
            .backward(&cache.time_mlp, &g_x1.transpose(), &mut grads.time_mlp);
        let mut g_x = g_x1;
        g_x.add_assign(&self.norm_time.backward(
            &cache.norm_time,
            &g_ut.transpose(),
            &mut grads.norm_time,
        ));
        g_x
    }

    fn macs(&self, seq_len: usize, dim: usize) -> u64 {
        self.time_mlp.macs(dim) + self.channel_mlp.macs(seq_len)
    }
}

impl Parameters for TemporalBlock {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.norm_time.visit(&join(prefix, "norm_time"), f);
        self.time_mlp.visit(&join(prefix, "time_mlp"), f);
        self.norm_channel.visit(&join(prefix, "norm_channel"), f);
        self.channel_mlp.visit(&join(prefix, "channel_mlp"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.norm_time.visit_mut(&join(prefix, "norm_time"), f);
        self.time_mlp.visit_mut(&join(prefix, "time_mlp"), f);
        self.norm_channel
            .visit_mut(&join(prefix, "norm_channel"), f);
        self.channel_mlp.visit_mut(&join(prefix, "channel_mlp"), f);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalMlp {
    seq_len: usize,
    dim: usize,
    pub blocks: Vec<TemporalBlock>,
}

#[derive(Debug, Clone)]
pub struct TemporalCache {
    blocks: Vec<BlockCache>,
}

impl TemporalMlp {
    pub fn new<R: Rng + ?Sized>(
        seq_len: usize,
        dim: usize,
        cfg: &TemporalMlpConfig,
        rng: &mut R,
    ) -> Result<Self> {
        if seq_len == 0 {
            return Err(Error::Config(
                "temporal MLP needs at least one time step".into(),
            ));
        }
        cfg.validate()?;
        Ok(Self {
            seq_len,
            dim,
            blocks: (0..cfg.depth)
                .map(|_| TemporalBlock::new(seq_len, dim, cfg, rng))
                .collect(),
        })
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn depth(&self) -> usize {
        self.blocks.len()
    }

    fn check(&self, seq: &Matrix) -> Result<()> {
        if seq.shape() != (self.seq_len, self.dim) {
            return Err(Error::Dimension(format!(
                "temporal MLP built for {}x{} sequences, got {}x{}",
                self.seq_len,
                self.dim,
                seq.rows(),
                seq.cols()
            )));
        }
        Ok(())
    }

    pub fn forward(&self, seq: &Matrix) -> Result<Matrix> {
        Ok(self.forward_cached(seq)?.0)
    }

    pub fn forward_cached(&self, seq: &Matrix) -> Result<(Matrix, TemporalCache)> {
        self.check(seq)?;
        let mut h = seq.clone();
        let mut caches = Vec::with_capacity(self.blocks.len());
        for b in &self.blocks {
            let (out, c) = b.forward(&h)?;
            caches.push(c);
            h = out;
        }
        Ok((h, TemporalCache { blocks: caches }))
    }

    pub fn backward(
        &self,
        cache: &TemporalCache,
        grad_out: &Matrix,
        grads: &mut TemporalMlp,
    ) -> Matrix {
        let mut g = grad_out.clone();
        for ((b, gb), c) in self
            .blocks
            .iter()
            .zip(grads.blocks.iter_mut())
            .zip(cache.blocks.iter())
            .rev()
        {
            g = b.backward(c, &g, gb);
        }
        g
    }

    /// Zeroes the output layer of every residual branch, turning the module
    /// into the identity map.
    pub fn zero_residual_outputs(&mut self) {
        for b in &mut self.blocks {
            b.time_mlp.fc2.zero();
            b.channel_mlp.fc2.zero();
        }
    }

    pub fn macs(&self) -> u64 {
        self.blocks
            .iter()
            .map(|b| b.macs(self.seq_len, self.dim))
            .sum()
    }
}

impl Parameters for TemporalMlp {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.blocks.visit(&join(prefix, "blocks"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.blocks.visit_mut(&join(prefix, "blocks"), f);
    }
}
