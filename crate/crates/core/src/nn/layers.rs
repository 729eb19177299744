use ndarray::{Axis, Zip};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use super::param::{child, Matrix, Param, ParamKind, Parameterized};

/// Forward-pass mode. Training mode carries the random stream used for
/// dropout masks.
pub enum Mode<'a> {
    Eval,
    Train(&'a mut dyn rand::RngCore),
}

impl Mode<'_> {
    pub fn is_train(&self) -> bool {
        matches!(self, Mode::Train(_))
    }
}

/// Affine map `y = x W + b` with `W` stored as `(in, out)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Param,
    pub bias: Param,
}

impl Linear {
    /// Uniform initialisation in `±1/sqrt(in)` for weights and biases.
    pub fn new<R: Rng + ?Sized>(inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (inputs.max(1) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound);
        let weight = Matrix::from_shape_simple_fn((inputs, outputs), || dist.sample(rng));
        let bias = (0..outputs).map(|_| dist.sample(rng)).collect();
        Self {
            weight: Param::new(weight, ParamKind::LinearWeight),
            bias: Param::vector(bias),
        }
    }

    /// Normal(0, std) weights and zero biases, as used for transformer layers.
    pub fn normal<R: Rng + ?Sized>(inputs: usize, outputs: usize, std: f64, rng: &mut R) -> Self {
        let dist = Normal::new(0.0, std).expect("positive std");
        let weight = Matrix::from_shape_simple_fn((inputs, outputs), || dist.sample(rng));
        Self {
            weight: Param::new(weight, ParamKind::LinearWeight),
            bias: Param::vector(vec![0.0; outputs]),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.nrows()
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.ncols()
    }

    pub fn forward(&self, x: &Matrix) -> Matrix {
        x.dot(&self.weight.value) + &self.bias.value
    }

    /// Returns the gradient w.r.t. `x`; parameter gradients are accumulated
    /// only when `accumulate` is set.
    pub fn backward(&mut self, x: &Matrix, grad_out: &Matrix, accumulate: bool) -> Matrix {
        if accumulate {
            self.weight.grad += &x.t().dot(grad_out);
            self.bias.grad += &grad_out.sum_axis(Axis(0)).insert_axis(Axis(0));
        }
        grad_out.dot(&self.weight.value.t())
    }
}

impl Parameterized for Linear {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
        f(child(prefix, "weight"), &self.weight);
        f(child(prefix, "bias"), &self.bias);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
        f(child(prefix, "weight"), &mut self.weight);
        f(child(prefix, "bias"), &mut self.bias);
    }
}

/// Per-row layer normalisation with learned scale and shift.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerNorm {
    pub weight: Param,
    pub bias: Param,
    pub eps: f64,
}

pub struct LayerNormCache {
    normalized: Matrix,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn new(dim: usize, eps: f64) -> Self {
        Self {
            weight: Param::vector(vec![1.0; dim]),
            bias: Param::vector(vec![0.0; dim]),
            eps,
        }
    }

    pub fn forward(&self, x: &Matrix) -> (Matrix, LayerNormCache) {
        let d = x.ncols() as f64;
        let mut normalized = x.clone();
        let mut inv_std = Vec::with_capacity(x.nrows());
        for mut row in normalized.rows_mut() {
            let mean = row.sum() / d;
            row.mapv_inplace(|v| v - mean);
            let var = row.iter().map(|v| v * v).sum::<f64>() / d;
            let s = 1.0 / (var + self.eps).sqrt();
            row.mapv_inplace(|v| v * s);
            inv_std.push(s);
        }
        let y = &normalized * &self.weight.value + &self.bias.value;
        (y, LayerNormCache { normalized, inv_std })
    }

    pub fn backward(&mut self, cache: &LayerNormCache, grad_out: &Matrix, accumulate: bool) -> Matrix {
        if accumulate {
            self.weight.grad += &(grad_out * &cache.normalized)
                .sum_axis(Axis(0))
                .insert_axis(Axis(0));
            self.bias.grad += &grad_out.sum_axis(Axis(0)).insert_axis(Axis(0));
        }
        let d = grad_out.ncols() as f64;
        let g_hat = grad_out * &self.weight.value;
        let mut grad_in = Matrix::zeros(grad_out.raw_dim());
        for (r, mut out_row) in grad_in.rows_mut().into_iter().enumerate() {
            let g = g_hat.row(r);
            let xh = cache.normalized.row(r);
            let mean_g = g.sum() / d;
            let mean_gx = g.dot(&xh) / d;
            let s = cache.inv_std[r];
            Zip::from(&mut out_row)
                .and(&g)
                .and(&xh)
                .for_each(|o, &gi, &xi| *o = s * (gi - mean_g - xi * mean_gx));
        }
        grad_in
    }
}

impl Parameterized for LayerNorm {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
        f(child(prefix, "weight"), &self.weight);
        f(child(prefix, "bias"), &self.bias);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
        f(child(prefix, "weight"), &mut self.weight);
        f(child(prefix, "bias"), &mut self.bias);
    }
}

/// Lookup table of row vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub table: Param,
}

impl Embedding {
    pub fn normal<R: Rng + ?Sized>(rows: usize, dim: usize, std: f64, rng: &mut R) -> Self {
        let dist = Normal::new(0.0, std).expect("positive std");
        Self {
            table: Param::new(
                Matrix::from_shape_simple_fn((rows, dim), || dist.sample(rng)),
                ParamKind::Matrix,
            ),
        }
    }

    pub fn rows(&self) -> usize {
        self.table.value.nrows()
    }

    pub fn dim(&self) -> usize {
        self.table.value.ncols()
    }

    pub fn forward(&self, ids: &[usize]) -> Matrix {
        let mut out = Matrix::zeros((ids.len(), self.dim()));
        for (mut row, &id) in out.rows_mut().into_iter().zip(ids) {
            row.assign(&self.table.value.row(id));
        }
        out
    }

    pub fn backward(&mut self, ids: &[usize], grad_out: &Matrix) {
        for (g, &id) in grad_out.rows().into_iter().zip(ids) {
            let mut slot = self.table.grad.row_mut(id);
            slot += &g;
        }
    }
}

impl Parameterized for Embedding {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
        f(child(prefix, "weight"), &self.table);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
        f(child(prefix, "weight"), &mut self.table);
    }
}

pub fn leaky_relu(x: &Matrix, slope: f64) -> Matrix {
    x.mapv(|v| if v > 0.0 { v } else { slope * v })
}

pub fn leaky_relu_backward(pre: &Matrix, grad_out: &Matrix, slope: f64) -> Matrix {
    let mut g = grad_out.clone();
    Zip::from(&mut g)
        .and(pre)
        .for_each(|g, &p| if p <= 0.0 { *g *= slope });
    g
}

/// Exact (erf-based) GELU.
pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::erf(x / std::f64::consts::SQRT_2))
}

pub fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + libm::erf(x / std::f64::consts::SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

/// Row-wise numerically stable softmax.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for mut row in out.rows_mut() {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

/// Backpropagates through a row-wise softmax given its output.
pub fn softmax_rows_backward(probs: &Matrix, grad_out: &Matrix) -> Matrix {
    let mut grad_in = Matrix::zeros(probs.raw_dim());
    for ((p, g), mut o) in probs
        .rows()
        .into_iter()
        .zip(grad_out.rows())
        .zip(grad_in.rows_mut())
    {
        let dot = p.dot(&g);
        Zip::from(&mut o)
            .and(&p)
            .and(&g)
            .for_each(|o, &pi, &gi| *o = pi * (gi - dot));
    }
    grad_in
}

/// Inverted dropout. Returns the output and the scaled keep-mask (absent in
/// evaluation mode or when `rate` is zero).
pub fn dropout(x: &Matrix, rate: f64, mode: &mut Mode<'_>) -> (Matrix, Option<Matrix>) {
    match mode {
        Mode::Train(rng) if rate > 0.0 => {
            let scale = 1.0 / (1.0 - rate);
            let mask = Matrix::from_shape_simple_fn(x.raw_dim(), || {
                if rng.gen::<f64>() < rate {
                    0.0
                } else {
                    scale
                }
            });
            (x * &mask, Some(mask))
        }
        _ => (x.clone(), None),
    }
}

pub fn dropout_backward(mask: &Option<Matrix>, grad_out: &Matrix) -> Matrix {
    match mask {
        Some(m) => grad_out * m,
        None => grad_out.clone(),
    }
}
