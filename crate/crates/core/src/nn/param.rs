use std::collections::BTreeMap;

use ndarray::{Array2, ArrayD, IxDyn};

use crate::error::{Error, Result};

pub type Matrix = Array2<f64>;

/// How a parameter is laid out in exported tensor files. Linear weights are
/// held as `(in, out)` but exported as `(out, in)`; vectors are held as
/// `(1, n)` and exported one-dimensional.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamKind {
    Matrix,
    LinearWeight,
    Vector,
}

/// A trainable tensor together with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub value: Matrix,
    pub grad: Matrix,
    pub kind: ParamKind,
}

impl Param {
    pub fn new(value: Matrix, kind: ParamKind) -> Self {
        let grad = Matrix::zeros(value.raw_dim());
        Self { value, grad, kind }
    }

    pub fn vector(values: Vec<f64>) -> Self {
        let n = values.len();
        Self::new(
            Matrix::from_shape_vec((1, n), values).expect("row vector shape"),
            ParamKind::Vector,
        )
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn export(&self) -> ArrayD<f64> {
        match self.kind {
            ParamKind::Matrix => self.value.clone().into_dyn(),
            ParamKind::LinearWeight => self.value.t().to_owned().into_dyn(),
            ParamKind::Vector => self
                .value
                .clone()
                .into_shape_with_order(IxDyn(&[self.value.len()]))
                .expect("contiguous vector"),
        }
    }

    pub fn import(&mut self, name: &str, tensor: &ArrayD<f64>) -> Result<()> {
        let (rows, cols) = self.value.dim();
        let expected: Vec<usize> = match self.kind {
            ParamKind::Matrix => vec![rows, cols],
            ParamKind::LinearWeight => vec![cols, rows],
            ParamKind::Vector => vec![cols],
        };
        if tensor.shape() != expected.as_slice() {
            return Err(Error::shape(format!(
                "tensor {name}: expected shape {expected:?}, found {:?}",
                tensor.shape()
            )));
        }
        let flat: Vec<f64> = tensor.iter().copied().collect();
        self.value = match self.kind {
            ParamKind::LinearWeight => Matrix::from_shape_vec((cols, rows), flat)
                .expect("checked shape")
                .reversed_axes()
                .as_standard_layout()
                .to_owned(),
            _ => Matrix::from_shape_vec((rows, cols), flat).expect("checked shape"),
        };
        Ok(())
    }
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

/// Anything owning trainable parameters. Visitation order is stable and
/// defines the layout used by optimizers and tensor files.
pub trait Parameterized {
    fn visit(&self, prefix: &str, f: &mut dyn FnMut(String, &Param));
    fn visit_mut(&mut self, prefix: &str, f: &mut dyn FnMut(String, &mut Param));

    fn zero_grad(&mut self) {
        self.visit_mut("", &mut |_, p| p.zero_grad());
    }

    fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit("", &mut |_, p| n += p.len());
        n
    }

    /// All parameters keyed by dotted name in export layout.
    fn export_tensors(&self) -> BTreeMap<String, ArrayD<f64>> {
        let mut out = BTreeMap::new();
        self.visit("", &mut |name, p| {
            out.insert(name, p.export());
        });
        out
    }

    /// Loads every parameter from `tensors`; missing names are an error,
    /// extra names are ignored.
    fn import_tensors(&mut self, tensors: &BTreeMap<String, ArrayD<f64>>) -> Result<()> {
        let mut result = Ok(());
        self.visit_mut("", &mut |name, p| {
            if result.is_err() {
                return;
            }
            result = match tensors.get(&name) {
                Some(t) => p.import(&name, t),
                None => Err(Error::shape(format!("missing tensor {name}"))),
            };
        });
        result
    }

    /// Flattened copy of all parameter values in visitation order.
    fn flat_values(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit("", &mut |_, p| out.extend(p.value.iter().copied()));
        out
    }

    /// Flattened copy of all gradients in visitation order.
    fn flat_grads(&self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit("", &mut |_, p| out.extend(p.grad.iter().copied()));
        out
    }

    /// Adds `delta` to the flat parameter coordinate `index`.
    fn nudge(&mut self, index: usize, delta: f64) {
        let mut offset = 0;
        self.visit_mut("", &mut |_, p| {
            if index >= offset && index < offset + p.len() {
                let slot = p.value.iter_mut().nth(index - offset).expect("in range");
                *slot += delta;
            }
            offset += p.len();
        });
    }
}

/// Helper for composite modules.
pub fn child(prefix: &str, name: &str) -> String {
    join(prefix, name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn linear_weight_exports_transposed() {
        let p = Param::new(array![[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]], ParamKind::LinearWeight);
        let e = p.export();
        assert_eq!(e.shape(), &[3, 2]);
        assert_eq!(e[[0, 1]], 4.0);
        let mut q = Param::new(Matrix::zeros((2, 3)), ParamKind::LinearWeight);
        q.import("w", &e).unwrap();
        assert_eq!(q.value, p.value);
    }

    #[test]
    fn vector_round_trip_and_shape_check() {
        let p = Param::vector(vec![1.0, 2.0]);
        assert_eq!(p.export().shape(), &[2]);
        let mut q = Param::vector(vec![0.0, 0.0, 0.0]);
        assert!(q.import("b", &p.export()).is_err());
    }
}
