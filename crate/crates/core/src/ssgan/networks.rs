use ndarray::Axis;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{
    child, dropout, dropout_backward, leaky_relu, leaky_relu_backward, softmax_rows, Linear, Matrix,
    Mode, Param, Parameterized,
};

/// Feed-forward stack: optional input dropout, then hidden layers of
/// linear, leaky ReLU and dropout, then a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub hidden: Vec<Linear>,
    pub output: Linear,
    pub slope: f64,
    pub dropout_rate: f64,
    pub input_dropout: bool,
}

pub struct MlpCache {
    input_mask: Option<Matrix>,
    /// Input to each hidden layer and the output layer.
    inputs: Vec<Matrix>,
    pre: Vec<Matrix>,
    masks: Vec<Option<Matrix>>,
}

impl Mlp {
    pub fn new(
        inputs: usize,
        hidden: &[usize],
        outputs: usize,
        slope: f64,
        dropout_rate: f64,
        input_dropout: bool,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut width = inputs;
        let mut layers = Vec::with_capacity(hidden.len());
        for &h in hidden {
            layers.push(Linear::new(width, h, rng));
            width = h;
        }
        Self {
            hidden: layers,
            output: Linear::new(width, outputs, rng),
            slope,
            dropout_rate,
            input_dropout,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.hidden.first().unwrap_or(&self.output).inputs()
    }

    pub fn feature_dim(&self) -> usize {
        self.output.inputs()
    }

    /// Returns `(output, features, cache)`; features are what the output
    /// layer consumes.
    pub fn forward(&self, x: &Matrix, mode: &mut Mode<'_>) -> Result<(Matrix, Matrix, MlpCache)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!(
                "expected input width {}, found {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let (mut h, input_mask) = if self.input_dropout {
            dropout(x, self.dropout_rate, mode)
        } else {
            (x.clone(), None)
        };
        let mut inputs = Vec::with_capacity(self.hidden.len() + 1);
        let mut pre = Vec::with_capacity(self.hidden.len());
        let mut masks = Vec::with_capacity(self.hidden.len());
        for layer in &self.hidden {
            let z = layer.forward(&h);
            let a = leaky_relu(&z, self.slope);
            let (a, mask) = dropout(&a, self.dropout_rate, mode);
            inputs.push(std::mem::replace(&mut h, a));
            pre.push(z);
            masks.push(mask);
        }
        let out = self.output.forward(&h);
        inputs.push(h.clone());
        Ok((
            out,
            h,
            MlpCache {
                input_mask,
                inputs,
                pre,
                masks,
            },
        ))
    }

    /// Backpropagates output and (optional) feature gradients, returning the
    /// input gradient. Parameter gradients accumulate only if `accumulate`.
    pub fn backward(
        &mut self,
        cache: &MlpCache,
        grad_out: &Matrix,
        grad_features: Option<&Matrix>,
        accumulate: bool,
    ) -> Matrix {
        let last = cache.inputs.last().expect("output input cached");
        let mut g = self.output.backward(last, grad_out, accumulate);
        if let Some(gf) = grad_features {
            g += gf;
        }
        for (i, layer) in self.hidden.iter_mut().enumerate().rev() {
            let g_act = dropout_backward(&cache.masks[i], &g);
            let g_pre = leaky_relu_backward(&cache.pre[i], &g_act, self.slope);
            g = layer.backward(&cache.inputs[i], &g_pre, accumulate);
        }
        if self.input_dropout {
            g = dropout_backward(&cache.input_mask, &g);
        }
        g
    }

    /// Smallest `|z|` over all hidden pre-activations, used by gradient
    /// checks to avoid the leaky-ReLU kink.
    pub fn min_abs_preactivation(cache: &MlpCache) -> f64 {
        cache
            .pre
            .iter()
            .flat_map(|z| z.iter())
            .fold(f64::INFINITY, |m, v| m.min(v.abs()))
    }
}

impl Parameterized for Mlp {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
        for (i, l) in self.hidden.iter().enumerate() {
            l.visit(&child(prefix, &format!("hidden.{i}")), f);
        }
        self.output.visit(&child(prefix, "output"), f);
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
        for (i, l) in self.hidden.iter_mut().enumerate() {
            l.visit_mut(&child(prefix, &format!("hidden.{i}")), f);
        }
        self.output.visit_mut(&child(prefix, "output"), f);
    }
}

/// Maps noise vectors to fake representations.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub net: Mlp,
}

impl Generator {
    pub fn new(
        noise_dim: usize,
        hidden: &[usize],
        d: usize,
        slope: f64,
        dropout_rate: f64,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            net: Mlp::new(noise_dim, hidden, d, slope, dropout_rate, false, &mut rng),
        }
    }

    pub fn noise_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn forward(&self, noise: &Matrix, mode: &mut Mode<'_>) -> Result<(Matrix, MlpCache)> {
        let (out, _, cache) = self.net.forward(noise, mode)?;
        Ok((out, cache))
    }

    pub fn generate(&self, noise: &Matrix, mode: &mut Mode<'_>) -> Result<Matrix> {
        Ok(self.forward(noise, mode)?.0)
    }
}

impl Parameterized for Generator {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
        self.net.visit(prefix, f)
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
        self.net.visit_mut(prefix, f)
    }
}

/// (k+1)-way classifier over real and generated representations.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator {
    pub net: Mlp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorOutput {
    pub logits: Matrix,
    pub probs: Matrix,
    /// Last hidden activation, the f(x) of the feature-matching loss.
    pub features: Matrix,
}

impl Discriminator {
    pub fn new(d: usize, hidden: &[usize], k: usize, slope: f64, dropout_rate: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            net: Mlp::new(d, hidden, k + 1, slope, dropout_rate, true, &mut rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn forward(&self, h: &Matrix, mode: &mut Mode<'_>) -> Result<(DiscriminatorOutput, MlpCache)> {
        let (logits, features, cache) = self.net.forward(h, mode)?;
        let probs = softmax_rows(&logits);
        Ok((
            DiscriminatorOutput {
                logits,
                probs,
                features,
            },
            cache,
        ))
    }

    pub fn discriminate(&self, h: &Matrix, mode: &mut Mode<'_>) -> Result<DiscriminatorOutput> {
        Ok(self.forward(h, mode)?.0)
    }
}

impl Parameterized for Discriminator {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param)) {
        self.net.visit(prefix, f)
    }

    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param)) {
        self.net.visit_mut(prefix, f)
    }
}

/// Row means of a feature batch.
pub(crate) fn column_mean(m: &Matrix) -> ndarray::Array1<f64> {
    m.mean_axis(Axis(0)).unwrap_or_else(|| ndarray::Array1::zeros(m.ncols()))
}
