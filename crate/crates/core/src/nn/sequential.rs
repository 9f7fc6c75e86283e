use serde::{Deserialize, Serialize};

use super::layers::{Activation, LayerNorm, LayerNormCache, Linear};
use super::matrix::Matrix;
use super::params::{join, Parameters};
use crate::error::{Error, Result};

/// One node of a [`Sequential`] stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Layer {
    Linear(Linear),
    Activation(Activation),
    LayerNorm(LayerNorm),
}

#[derive(Debug, Clone)]
enum Saved {
    Input(Matrix),
    Norm(LayerNormCache),
}

/// A chain of layers that records its own forward state.
///
/// Unlike the cache-returning layer API this needs `&mut self`, so it is
/// meant for single-owner use (tests, small utilities), not for the batch-
/// parallel training loop.
#[derive(Debug, Clone, Default)]
pub struct Sequential {
    pub layers: Vec<Layer>,
    saved: Option<Vec<Saved>>,
}

impl Sequential {
    pub fn new(layers: Vec<Layer>) -> Self {
        Self {
            layers,
            saved: None,
        }
    }

    pub fn forward(&mut self, x: &Matrix) -> Result<Matrix> {
        let mut saved = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        for layer in &self.layers {
            h = match layer {
                Layer::Linear(l) => {
                    let y = l.forward(&h)?;
                    saved.push(Saved::Input(h));
                    y
                }
                Layer::Activation(a) => {
                    let y = a.forward(&h);
                    saved.push(Saved::Input(h));
                    y
                }
                Layer::LayerNorm(ln) => {
                    let (y, cache) = ln.forward(&h)?;
                    saved.push(Saved::Norm(cache));
                    y
                }
            };
        }
        self.saved = Some(saved);
        Ok(h)
    }

    /// Backpropagates `grad_out` through the last forward pass, accumulating
    /// into `grads` (a structurally identical stack). Consumes the saved state.
    pub fn backward(&mut self, grad_out: &Matrix, grads: &mut Sequential) -> Result<Matrix> {
        let saved = self
            .saved
            .take()
            .ok_or_else(|| Error::State("backward called before forward".into()))?;
        if grads.layers.len() != self.layers.len() {
            return Err(Error::Dimension(format!(
                "gradient stack has {} layers, model has {}",
                grads.layers.len(),
                self.layers.len()
            )));
        }
        let mut g = grad_out.clone();
        for ((layer, glayer), s) in self
            .layers
            .iter()
            .zip(grads.layers.iter_mut())
            .zip(saved.iter())
            .rev()
        {
            g = match (layer, glayer, s) {
                (Layer::Linear(l), Layer::Linear(gl), Saved::Input(x)) => l.backward(x, &g, gl),
                (Layer::Activation(a), Layer::Activation(_), Saved::Input(x)) => a.backward(x, &g),
                (Layer::LayerNorm(ln), Layer::LayerNorm(gln), Saved::Norm(c)) => {
                    ln.backward(c, &g, gln)
                }
                _ => {
                    return Err(Error::State(
                        "gradient stack layout differs from model".into(),
                    ))
                }
            };
        }
        Ok(g)
    }
}

impl Parameters for Sequential {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        for (i, layer) in self.layers.iter().enumerate() {
            let p = join(prefix, &i.to_string());
            match layer {
                Layer::Linear(l) => l.visit(&p, f),
                Layer::LayerNorm(ln) => ln.visit(&p, f),
                Layer::Activation(_) => {}
            }
        }
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            let p = join(prefix, &i.to_string());
            match layer {
                Layer::Linear(l) => l.visit_mut(&p, f),
                Layer::LayerNorm(ln) => ln.visit_mut(&p, f),
                Layer::Activation(_) => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backward_before_forward_is_state_error() {
        let mut s = Sequential::new(vec![Layer::Linear(Linear::zeros(2, 2))]);
        let mut g = s.clone();
        let err = s.backward(&Matrix::zeros(1, 2), &mut g).unwrap_err();
        assert!(matches!(err, Error::State(_)));
    }

    #[test]
    fn saved_state_is_consumed() {
        let mut s = Sequential::new(vec![
            Layer::Linear(Linear::zeros(2, 3)),
            Layer::Activation(Activation::Relu),
        ]);
        let mut g = s.zeros_like();
        s.forward(&Matrix::filled(1, 2, 1.0)).unwrap();
        s.backward(&Matrix::filled(1, 3, 1.0), &mut g).unwrap();
        assert!(s.backward(&Matrix::filled(1, 3, 1.0), &mut g).is_err());
    }
}
