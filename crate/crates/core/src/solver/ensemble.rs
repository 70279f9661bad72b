use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search_box::SearchBox;

/// Positions of `n` particles in `dim` dimensions (row-major) together with
/// the iteration counter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EnsembleRepr", into = "EnsembleRepr")]
pub struct ParticleEnsemble {
    positions: Vec<f64>,
    n: usize,
    dim: usize,
    pub iteration: u64,
}

#[derive(Serialize, Deserialize)]
struct EnsembleRepr {
    iteration: u64,
    positions: Vec<Vec<f64>>,
}

impl TryFrom<EnsembleRepr> for ParticleEnsemble {
    type Error = Error;

    fn try_from(r: EnsembleRepr) -> Result<Self> {
        let mut e = Self::from_rows(&r.positions)?;
        e.iteration = r.iteration;
        Ok(e)
    }
}

impl From<ParticleEnsemble> for EnsembleRepr {
    fn from(e: ParticleEnsemble) -> Self {
        EnsembleRepr {
            iteration: e.iteration,
            positions: e.rows().map(<[f64]>::to_vec).collect(),
        }
    }
}

impl ParticleEnsemble {
    pub fn new(n: usize, dim: usize, positions: Vec<f64>) -> Result<Self> {
        if n == 0 || dim == 0 {
            return Err(Error::input("ensemble needs at least one particle and one dimension"));
        }
        if positions.len() != n * dim {
            return Err(Error::input(format!(
                "expected {} coordinates for {n} particles in {dim} dimensions, got {}",
                n * dim,
                positions.len()
            )));
        }
        if let Some(i) = positions.iter().position(|v| !v.is_finite()) {
            return Err(Error::input(format!(
                "non-finite coordinate in particle {}",
                i / dim
            )));
        }
        Ok(Self {
            positions,
            n,
            dim,
            iteration: 0,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut flat = Vec::with_capacity(rows.len() * dim);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != dim {
                return Err(Error::input(format!(
                    "particle {i} has {} coordinates, expected {dim}",
                    r.len()
                )));
            }
            flat.extend_from_slice(r);
        }
        Self::new(rows.len(), dim, flat)
    }

    /// `n` particles drawn i.i.d. uniformly on `bounds`.
    pub fn uniform<R: Rng + ?Sized>(n: usize, bounds: &SearchBox, rng: &mut R) -> Result<Self> {
        let dim = bounds.dim();
        let mut positions = vec![0.0; n * dim];
        for row in positions.chunks_exact_mut(dim) {
            bounds.sample_into(rng, row);
        }
        Self::new(n, dim, positions)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.dim)
    }

    /// Flat row-major coordinates.
    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub(crate) fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    pub fn is_finite(&self) -> bool {
        self.positions.iter().all(|v| v.is_finite())
    }

    /// Arithmetic mean of the particles.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for row in self.rows() {
            for (acc, v) in m.iter_mut().zip(row) {
                *acc += v;
            }
        }
        let n = self.n as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }

    /// Largest absolute coordinate.
    pub fn scale(&self) -> f64 {
        self.positions.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
    }
}

/// One Gaussian draw per coordinate, shared by every particle in a step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepNoise {
    pub values: Vec<f64>,
}

impl StepNoise {
    pub fn zeros(dim: usize) -> Self {
        Self {
            values: vec![0.0; dim],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_checks() {
        assert!(ParticleEnsemble::new(2, 2, vec![0.0; 3]).is_err());
        assert!(ParticleEnsemble::new(0, 2, vec![]).is_err());
        assert!(ParticleEnsemble::new(1, 1, vec![f64::NAN]).is_err());
        assert!(ParticleEnsemble::from_rows(&[vec![0.0, 1.0], vec![2.0]]).is_err());
        let e = ParticleEnsemble::from_rows(&[[0.0, 1.0], [2.0, 3.0]]).unwrap();
        assert_eq!(e.particle(1), &[2.0, 3.0]);
        assert_eq!(e.mean(), vec![1.0, 2.0]);
        assert_eq!(e.scale(), 3.0);
    }

    #[test]
    fn json_uses_rows() {
        let mut e = ParticleEnsemble::from_rows(&[[0.5], [-1.0]]).unwrap();
        e.iteration = 7;
        let s = serde_json::to_string(&e).unwrap();
        assert_eq!(s, r#"{"iteration":7,"positions":[[0.5],[-1.0]]}"#);
        let back: ParticleEnsemble = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
        assert!(serde_json::from_str::<ParticleEnsemble>(r#"{"iteration":0,"positions":[[1.0],[]]}"#).is_err());
    }
}
