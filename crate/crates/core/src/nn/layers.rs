//! Differentiable layers with explicit caches.
//!
//! Forward passes take `&self` and return whatever the backward pass needs,
//! so one set of parameters can serve many concurrent samples. Backward
//! passes accumulate into a gradient buffer of the same type and return the
//! gradient with respect to the layer input.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{axpy, dot, dot_rows, Matrix};
use super::params::{join, Parameters};
use crate::error::{Error, Result};

/// Weight bytes per forward tile; well inside a typical L2.
const FORWARD_TILE_BYTES: usize = 128 * 1024;

/// Fully connected layer, `y = W x + b` with `W` stored as `[out × in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

impl Linear {
    /// Glorot-uniform weights, zero bias.
    pub fn new<R: Rng + ?Sized>(in_dim: usize, out_dim: usize, rng: &mut R) -> Self {
        let limit = (6.0 / (in_dim + out_dim) as f64).sqrt();
        let data = (0..in_dim * out_dim)
            .map(|_| rng.gen_range(-limit..=limit))
            .collect();
        Self {
            weight: Matrix::from_vec(out_dim, in_dim, data).expect("sized buffer"),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            weight: Matrix::zeros(out_dim, in_dim),
            bias: vec![0.0; out_dim],
        }
    }

    pub fn from_parts(weight: Matrix, bias: Vec<f64>) -> Result<Self> {
        if bias.len() != weight.rows() {
            return Err(Error::Dimension(format!(
                "bias of length {} for weight {}x{}",
                bias.len(),
                weight.rows(),
                weight.cols()
            )));
        }
        Ok(Self { weight, bias })
    }

    #[inline]
    pub fn in_dim(&self) -> usize {
        self.weight.cols()
    }

    #[inline]
    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }

    /// Multiply-accumulates for a batch of `n` rows.
    pub fn macs(&self, n: usize) -> u64 {
        (n * self.in_dim() * self.out_dim()) as u64
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        if x.cols() != self.in_dim() {
            return Err(Error::Dimension(format!(
                "linear input {}x{} does not match weight {}x{}",
                x.rows(),
                x.cols(),
                self.out_dim(),
                self.in_dim()
            )));
        }
        let (rows, out_dim) = (x.rows(), self.out_dim());
        let mut out = Matrix::zeros(rows, out_dim);
        // Four input rows share each weight load; a tile of weight rows stays
        // cache resident while every input row passes through it.
        let tile = (FORWARD_TILE_BYTES / (8 * self.in_dim().max(1))).max(1);
        for o0 in (0..out_dim).step_by(tile) {
            let o1 = (o0 + tile).min(out_dim);
            let mut n = 0;
            while n + 4 <= rows {
                let xs = [x.row(n), x.row(n + 1), x.row(n + 2), x.row(n + 3)];
                for o in o0..o1 {
                    let y = dot_rows(self.weight.row(o), xs);
                    for (r, v) in y.into_iter().enumerate() {
                        out[(n + r, o)] = v + self.bias[o];
                    }
                }
                n += 4;
            }
            if n + 2 <= rows {
                let xs = [x.row(n), x.row(n + 1)];
                for o in o0..o1 {
                    let [a, b] = dot_rows(self.weight.row(o), xs);
                    out[(n, o)] = a + self.bias[o];
                    out[(n + 1, o)] = b + self.bias[o];
                }
                n += 2;
            }
            for n in n..rows {
                let xn = x.row(n);
                for o in o0..o1 {
                    out[(n, o)] = dot(self.weight.row(o), xn) + self.bias[o];
                }
            }
        }
        Ok(out)
    }

    /// Accumulates parameter gradients into `grads` and returns `dL/dx`.
    pub fn backward(&self, x: &Matrix, grad_out: &Matrix, grads: &mut Linear) -> Matrix {
        debug_assert_eq!(grad_out.shape(), (x.rows(), self.out_dim()));
        let mut grad_in = Matrix::zeros(x.rows(), self.in_dim());
        for n in 0..x.rows() {
            let g = grad_out.row(n);
            let xn = x.row(n);
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                axpy(go, xn, grads.weight.row_mut(o));
                grads.bias[o] += go;
                axpy(go, self.weight.row(o), grad_in.row_mut(n));
            }
        }
        grad_in
    }
}

impl Parameters for Linear {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f(
            &join(prefix, "weight"),
            &[self.weight.rows(), self.weight.cols()],
            self.weight.data(),
        );
        f(&join(prefix, "bias"), &[self.bias.len()], &self.bias);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let shape = [self.weight.rows(), self.weight.cols()];
        f(&join(prefix, "weight"), &shape, self.weight.data_mut());
        let n = self.bias.len();
        f(&join(prefix, "bias"), &[n], &mut self.bias);
    }
}

/// Elementwise nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    /// Tanh approximation:
    /// `0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))`.
    Gelu,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

impl Activation {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Gelu => 0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh()),
        }
    }

    #[inline]
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Gelu => {
                let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
                0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
            }
        }
    }

    pub fn forward(self, x: &Matrix) -> Matrix {
        x.map(|v| self.apply(v))
    }

    /// `pre` is the activation input saved from the forward pass.
    pub fn backward(self, pre: &Matrix, grad_out: &Matrix) -> Matrix {
        debug_assert_eq!(pre.shape(), grad_out.shape());
        let data = pre
            .data()
            .iter()
            .zip(grad_out.data())
            .map(|(&p, &g)| g * self.derivative(p))
            .collect();
        Matrix::from_vec(pre.rows(), pre.cols(), data).expect("same shape")
    }
}

/// Row-wise layer normalization with learned affine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNorm {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
}

impl LayerNormCache {
    /// Pre-affine normalized rows.
    pub fn normalized(&self) -> &Matrix {
        &self.normalized
    }
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

impl LayerNorm {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: vec![1.0; dim],
            beta: vec![0.0; dim],
            eps: LAYER_NORM_EPS,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.len()
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, LayerNormCache)> {
        let d = x.cols();
        if d == 0 {
            return Err(Error::EmptyInput("layer norm over zero features".into()));
        }
        if d != self.dim() {
            return Err(Error::Dimension(format!(
                "layer norm over {d} features, configured for {}",
                self.dim()
            )));
        }
        if self.eps <= 0.0 {
            return Err(Error::Config(format!(
                "layer norm eps must be > 0, got {}",
                self.eps
            )));
        }
        let mut normalized = Matrix::zeros(x.rows(), d);
        let mut out = Matrix::zeros(x.rows(), d);
        let mut inv_std = Vec::with_capacity(x.rows());
        for n in 0..x.rows() {
            let row = x.row(n);
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let s = 1.0 / (var + self.eps).sqrt();
            inv_std.push(s);
            let nr = normalized.row_mut(n);
            for (k, v) in row.iter().enumerate() {
                nr[k] = (v - mean) * s;
            }
            let or = out.row_mut(n);
            for k in 0..d {
                or[k] = self.gamma[k] * normalized[(n, k)] + self.beta[k];
            }
        }
        Ok((
            out,
            LayerNormCache {
                normalized,
                inv_std,
            },
        ))
    }

    pub fn backward(
        &self,
        cache: &LayerNormCache,
        grad_out: &Matrix,
        grads: &mut LayerNorm,
    ) -> Matrix {
        let d = self.dim();
        let df = d as f64;
        let mut grad_in = Matrix::zeros(grad_out.rows(), d);
        let mut dxhat = vec![0.0; d];
        for n in 0..grad_out.rows() {
            let g = grad_out.row(n);
            let xhat = cache.normalized.row(n);
            for k in 0..d {
                grads.gamma[k] += g[k] * xhat[k];
                grads.beta[k] += g[k];
                dxhat[k] = g[k] * self.gamma[k];
            }
            let sum_d: f64 = dxhat.iter().sum();
            let sum_dx: f64 = dxhat.iter().zip(xhat).map(|(a, b)| a * b).sum();
            let s = cache.inv_std[n] / df;
            let gi = grad_in.row_mut(n);
            for k in 0..d {
                gi[k] = s * (df * dxhat[k] - sum_d - xhat[k] * sum_dx);
            }
        }
        grad_in
    }
}

impl Parameters for LayerNorm {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        f(&join(prefix, "gamma"), &[self.gamma.len()], &self.gamma);
        f(&join(prefix, "beta"), &[self.beta.len()], &self.beta);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        let n = self.gamma.len();
        f(&join(prefix, "gamma"), &[n], &mut self.gamma);
        f(&join(prefix, "beta"), &[n], &mut self.beta);
    }
}

/// `fc2(act(fc1(x)))`, the building block of extractors, mixers and heads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub fc1: Linear,
    pub fc2: Linear,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct MlpCache {
    input: Matrix,
    pre: Matrix,
    hidden: Matrix,
}

impl Mlp {
    pub fn new<R: Rng + ?Sized>(
        in_dim: usize,
        hidden: usize,
        out_dim: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        Self {
            fc1: Linear::new(in_dim, hidden, rng),
            fc2: Linear::new(hidden, out_dim, rng),
            activation,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.fc1.in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.fc2.out_dim()
    }

    pub fn macs(&self, n: usize) -> u64 {
        self.fc1.macs(n) + self.fc2.macs(n)
    }

    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        let pre = self.fc1.forward(x)?;
        self.fc2.forward(&self.activation.forward(&pre))
    }

    pub fn forward_cached(&self, x: &Matrix) -> Result<(Matrix, MlpCache)> {
        let pre = self.fc1.forward(x)?;
        let hidden = self.activation.forward(&pre);
        let out = self.fc2.forward(&hidden)?;
        Ok((
            out,
            MlpCache {
                input: x.clone(),
                pre,
                hidden,
            },
        ))
    }

    pub fn backward(&self, cache: &MlpCache, grad_out: &Matrix, grads: &mut Mlp) -> Matrix {
        let g_hidden = self.fc2.backward(&cache.hidden, grad_out, &mut grads.fc2);
        let g_pre = self.activation.backward(&cache.pre, &g_hidden);
        self.fc1.backward(&cache.input, &g_pre, &mut grads.fc1)
    }
}

impl Parameters for Mlp {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &[f64])) {
        self.fc1.visit(&join(prefix, "fc1"), f);
        self.fc2.visit(&join(prefix, "fc2"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(&str, &[usize], &mut [f64])) {
        self.fc1.visit_mut(&join(prefix, "fc1"), f);
        self.fc2.visit_mut(&join(prefix, "fc2"), f);
    }
}
