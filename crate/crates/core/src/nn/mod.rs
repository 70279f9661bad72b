//! Gradient-free training of small fully connected ReLU networks.
//!
//! Parameters are packed layer by layer as `W_1, b_1, …, W_L, b_L`, each
//! weight matrix row-major with `N_ℓ` rows and `N_{ℓ−1}` columns. The
//! activation is applied after every layer, including the last.

mod data;
mod train;

pub use data::{
    generate_dataset, generate_dataset_with, read_dataset_csv, write_dataset_csv, DataSlice,
    DatasetOptions, SyntheticDataset,
};
pub use train::{
    nn_default_config, train_with_sicbo, MlpObjective, NnSeeds, NnTracePoint, NnTrainResult,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::smoothing::phi2;

/// Layer widths `[N_0, N_1, …, N_L]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct MlpShape {
    widths: Vec<usize>,
}

impl MlpShape {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::input("a network needs an input and an output width"));
        }
        if widths.contains(&0) {
            return Err(Error::input(format!("layer widths must be positive: {widths:?}")));
        }
        Ok(Self { widths })
    }

    /// `[5, 10, 10, 10, 1]`, 291 parameters.
    pub fn reference() -> Self {
        Self {
            widths: vec![5, 10, 10, 10, 1],
        }
    }

    pub fn widths(&self) -> &[usize] {
        &self.widths
    }

    pub fn n_layers(&self) -> usize {
        self.widths.len() - 1
    }

    pub fn input_dim(&self) -> usize {
        self.widths[0]
    }

    pub fn output_dim(&self) -> usize {
        self.widths[self.widths.len() - 1]
    }

    pub fn param_count(&self) -> usize {
        self.widths.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// Neurons after the input layer.
    pub fn neuron_count(&self) -> usize {
        self.widths[1..].iter().sum()
    }

    fn max_width(&self) -> usize {
        *self.widths.iter().max().expect("nonempty")
    }
}

impl TryFrom<Vec<usize>> for MlpShape {
    type Error = Error;

    fn try_from(widths: Vec<usize>) -> Result<Self> {
        Self::new(widths)
    }
}

impl From<MlpShape> for Vec<usize> {
    fn from(s: MlpShape) -> Self {
        s.widths
    }
}

pub fn param_count(shape: &MlpShape) -> usize {
    shape.param_count()
}

/// Weights and biases of one layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `N_ℓ × N_{ℓ−1}`, row-major.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// All network parameters in packed order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlatParams {
    pub values: Vec<f64>,
}

impl FlatParams {
    pub fn flatten(shape: &MlpShape, layers: &[Layer]) -> Result<Self> {
        if layers.len() != shape.n_layers() {
            return Err(Error::input(format!(
                "{} layers for a {}-layer shape",
                layers.len(),
                shape.n_layers()
            )));
        }
        let mut values = Vec::with_capacity(shape.param_count());
        for (layer, w) in layers.iter().zip(shape.widths.windows(2)) {
            if layer.weights.len() != w[1] * w[0] || layer.biases.len() != w[1] {
                return Err(Error::input(format!("layer does not match widths {} -> {}", w[0], w[1])));
            }
            values.extend_from_slice(&layer.weights);
            values.extend_from_slice(&layer.biases);
        }
        Ok(Self { values })
    }

    pub fn unflatten(&self, shape: &MlpShape) -> Result<Vec<Layer>> {
        check_len(&self.values, shape)?;
        let mut rest = self.values.as_slice();
        Ok(shape
            .widths
            .windows(2)
            .map(|w| {
                let (weights, tail) = rest.split_at(w[1] * w[0]);
                let (biases, tail) = tail.split_at(w[1]);
                rest = tail;
                Layer {
                    weights: weights.to_vec(),
                    biases: biases.to_vec(),
                }
            })
            .collect())
    }
}

fn check_len(params: &[f64], shape: &MlpShape) -> Result<()> {
    if params.len() != shape.param_count() {
        return Err(Error::input(format!(
            "{} parameters for a shape with {}",
            params.len(),
            shape.param_count()
        )));
    }
    Ok(())
}

#[inline]
fn activate(s: f64, mu: f64) -> f64 {
    if mu > 0.0 {
        phi2(s, mu)
    } else {
        s.max(0.0)
    }
}

/// Reusable buffers for repeated forward passes.
pub(crate) struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Scratch {
    pub(crate) fn new(shape: &MlpShape) -> Self {
        let w = shape.max_width();
        Self {
            a: vec![0.0; w],
            b: vec![0.0; w],
        }
    }
}

/// Forward pass without length checks; the result is in the returned slice.
pub(crate) fn forward_unchecked<'s>(
    params: &[f64],
    shape: &MlpShape,
    u: &[f64],
    mu: f64,
    scratch: &'s mut Scratch,
) -> &'s [f64] {
    let Scratch { a, b } = scratch;
    let (mut cur, mut next) = (a, b);
    cur[..u.len()].copy_from_slice(u);
    let mut offset = 0;
    for w in shape.widths.windows(2) {
        let (n_in, n_out) = (w[0], w[1]);
        let weights = &params[offset..offset + n_in * n_out];
        let biases = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
        offset += n_in * n_out + n_out;
        for j in 0..n_out {
            let row = &weights[j * n_in..(j + 1) * n_in];
            let s = row.iter().zip(&cur[..n_in]).fold(biases[j], |acc, (wk, xk)| acc + wk * xk);
            next[j] = activate(s, mu);
        }
        std::mem::swap(&mut cur, &mut next);
    }
    &cur[..shape.output_dim()]
}

/// Network output at input `u`. `mu = 0` uses the exact ReLU, `mu > 0` its
/// quadratic smoothing.
pub fn forward(params: &[f64], shape: &MlpShape, u: &[f64], mu: f64) -> Result<Vec<f64>> {
    check_len(params, shape)?;
    if u.len() != shape.input_dim() {
        return Err(Error::input(format!(
            "input has {} entries, network expects {}",
            u.len(),
            shape.input_dim()
        )));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::param(format!("mu must be nonnegative, got {mu}")));
    }
    let mut scratch = Scratch::new(shape);
    Ok(forward_unchecked(params, shape, u, mu, &mut scratch).to_vec())
}

/// `(1/M) Σ_m ‖net(u_m) − y_m‖²` over a nonempty slice.
pub fn mse_loss(params: &[f64], shape: &MlpShape, slice: &DataSlice<'_>, mu: f64) -> Result<f64> {
    check_len(params, shape)?;
    if slice.n_in != shape.input_dim() || slice.n_out != shape.output_dim() {
        return Err(Error::input("dataset columns do not match the network shape"));
    }
    if slice.is_empty() {
        return Err(Error::input("cannot average over an empty slice"));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::param(format!("mu must be nonnegative, got {mu}")));
    }
    Ok(mse_unchecked(params, shape, slice, mu, &mut Scratch::new(shape)))
}

pub(crate) fn mse_unchecked(
    params: &[f64],
    shape: &MlpShape,
    slice: &DataSlice<'_>,
    mu: f64,
    scratch: &mut Scratch,
) -> f64 {
    let mut total = 0.0;
    for (u, y) in slice.rows() {
        let out = forward_unchecked(params, shape, u, mu, scratch);
        total += out.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>();
    }
    total / slice.len() as f64
}
