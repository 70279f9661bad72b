use std::io::{Read, Write};

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{forward_unchecked, MlpShape, Scratch};
use crate::error::{Error, Result};
use crate::solver::SicboRng;

/// Sizes and noise level of a teacher-generated regression set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetOptions {
    pub n_train: usize,
    pub n_test: usize,
    /// Standard deviation of the additive output noise.
    pub noise_scale: f64,
}

impl Default for DatasetOptions {
    fn default() -> Self {
        Self {
            n_train: 80,
            n_test: 20,
            noise_scale: 0.05,
        }
    }
}

/// Input/output rows, training rows first.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticDataset {
    pub n_in: usize,
    pub n_out: usize,
    /// `(n_train + n_test) × n_in`, row-major.
    pub inputs: Vec<f64>,
    /// `(n_train + n_test) × n_out`, row-major.
    pub outputs: Vec<f64>,
    pub n_train: usize,
}

/// A contiguous block of dataset rows.
#[derive(Clone, Copy, Debug)]
pub struct DataSlice<'a> {
    pub inputs: &'a [f64],
    pub outputs: &'a [f64],
    pub n_in: usize,
    pub n_out: usize,
}

impl<'a> DataSlice<'a> {
    pub fn new(inputs: &'a [f64], outputs: &'a [f64], n_in: usize, n_out: usize) -> Result<Self> {
        if n_in == 0 || n_out == 0 || !inputs.len().is_multiple_of(n_in) || !outputs.len().is_multiple_of(n_out) {
            return Err(Error::input("slice columns do not divide the data"));
        }
        if inputs.len() / n_in != outputs.len() / n_out {
            return Err(Error::input("input and output row counts differ"));
        }
        Ok(Self {
            inputs,
            outputs,
            n_in,
            n_out,
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len() / self.n_in
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn rows(&self) -> impl Iterator<Item = (&'a [f64], &'a [f64])> {
        self.inputs
            .chunks_exact(self.n_in)
            .zip(self.outputs.chunks_exact(self.n_out))
    }
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.inputs.len() / self.n_in
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn n_test(&self) -> usize {
        self.len() - self.n_train
    }

    fn slice(&self, from: usize, to: usize) -> DataSlice<'_> {
        DataSlice {
            inputs: &self.inputs[from * self.n_in..to * self.n_in],
            outputs: &self.outputs[from * self.n_out..to * self.n_out],
            n_in: self.n_in,
            n_out: self.n_out,
        }
    }

    pub fn train(&self) -> DataSlice<'_> {
        self.slice(0, self.n_train)
    }

    pub fn test(&self) -> DataSlice<'_> {
        self.slice(self.n_train, self.len())
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_in == 0 || self.n_out == 0 {
            return Err(Error::input("dataset needs input and output columns"));
        }
        if !self.inputs.len().is_multiple_of(self.n_in) || self.outputs.len() != self.len() * self.n_out {
            return Err(Error::input("dataset arrays do not match their column counts"));
        }
        if self.n_train > self.len() {
            return Err(Error::input(format!(
                "{} training rows requested from {} rows",
                self.n_train,
                self.len()
            )));
        }
        if self.inputs.iter().chain(&self.outputs).any(|v| !v.is_finite()) {
            return Err(Error::input("dataset contains non-finite values"));
        }
        Ok(())
    }
}

/// Teacher-network data with 80 training rows, 20 test rows and output
/// noise of standard deviation 0.05.
pub fn generate_dataset(shape: &MlpShape, true_params_seed: u64, sample_seed: u64) -> Result<SyntheticDataset> {
    generate_dataset_with(shape, true_params_seed, sample_seed, &DatasetOptions::default())
}

/// Draws teacher parameters from `N(0, 1)` with `true_params_seed`; then,
/// from `sample_seed`, a mean `ξ` and direction `Σ` (both `N_0` standard
/// normals) followed, per row, by a scalar `z` and `N_L` noise values.
/// Inputs are `u = ξ + z Σ`, so their covariance is `Σ Σᵀ`.
pub fn generate_dataset_with(
    shape: &MlpShape,
    true_params_seed: u64,
    sample_seed: u64,
    options: &DatasetOptions,
) -> Result<SyntheticDataset> {
    if !(options.noise_scale >= 0.0 && options.noise_scale.is_finite()) {
        return Err(Error::param("noise scale must be nonnegative"));
    }
    let mut teacher_rng = SicboRng::seed_from_u64(true_params_seed);
    let teacher: Vec<f64> = (0..shape.param_count())
        .map(|_| StandardNormal.sample(&mut teacher_rng))
        .collect();

    let (n_in, n_out) = (shape.input_dim(), shape.output_dim());
    let rows = options.n_train + options.n_test;
    let mut rng = SicboRng::seed_from_u64(sample_seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let xi: Vec<f64> = (0..n_in).map(|_| normal()).collect();
    let sigma: Vec<f64> = (0..n_in).map(|_| normal()).collect();

    let mut inputs = Vec::with_capacity(rows * n_in);
    let mut outputs = Vec::with_capacity(rows * n_out);
    let mut scratch = Scratch::new(shape);
    for _ in 0..rows {
        let z = normal();
        let u: Vec<f64> = xi.iter().zip(&sigma).map(|(m, s)| z.mul_add(*s, *m)).collect();
        let y = forward_unchecked(&teacher, shape, &u, 0.0, &mut scratch);
        outputs.extend(y.iter().map(|&v| v + options.noise_scale * normal()));
        inputs.extend(u);
    }
    let ds = SyntheticDataset {
        n_in,
        n_out,
        inputs,
        outputs,
        n_train: options.n_train,
    };
    ds.validate()?;
    Ok(ds)
}

/// Writes one row per sample with columns `u1..u{N_0}, y1..y{N_L}`.
pub fn write_dataset_csv<W: Write>(dataset: &SyntheticDataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let header: Vec<String> = (1..=dataset.n_in)
        .map(|i| format!("u{i}"))
        .chain((1..=dataset.n_out).map(|i| format!("y{i}")))
        .collect();
    w.write_record(&header)?;
    let all = dataset.slice(0, dataset.len());
    for (u, y) in all.rows() {
        w.write_record(u.iter().chain(y).map(|v| format!("{v:?}")))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the format of [`write_dataset_csv`]; the first `n_train` rows form
/// the training split.
pub fn read_dataset_csv<R: Read>(reader: R, n_train: usize) -> Result<SyntheticDataset> {
    let mut r = csv::Reader::from_reader(reader);
    let header = r.headers()?.clone();
    let n_in = header.iter().take_while(|h| h.starts_with('u')).count();
    let n_out = header.len() - n_in;
    let expected = (1..=n_in)
        .map(|i| format!("u{i}"))
        .chain((1..=n_out).map(|i| format!("y{i}")));
    if n_in == 0 || n_out == 0 || !expected.eq(header.iter().map(str::to_string)) {
        return Err(Error::input(format!(
            "dataset header must be u1..uN then y1..yM, got {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut inputs = Vec::new();
    let mut outputs = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != n_in + n_out {
            return Err(Error::input(format!("row {} has {} fields", line + 1, rec.len())));
        }
        for (k, field) in rec.iter().enumerate() {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::input(format!("row {} column {}: '{field}' is not a number", line + 1, k + 1)))?;
            if k < n_in {
                inputs.push(v);
            } else {
                outputs.push(v);
            }
        }
    }
    let ds = SyntheticDataset {
        n_in,
        n_out,
        inputs,
        outputs,
        n_train,
    };
    ds.validate()?;
    Ok(ds)
}
