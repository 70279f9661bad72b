use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box used for particle initialization and spot checks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl SearchBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::input(format!(
                "box bounds have different lengths ({} vs {})",
                lower.len(),
                upper.len()
            )));
        }
        if lower.is_empty() {
            return Err(Error::input("box must have at least one dimension"));
        }
        for (l, (lo, hi)) in lower.iter().zip(&upper).enumerate() {
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(Error::input(format!(
                    "invalid interval [{lo}, {hi}] in dimension {l}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    /// The cube `[lo, hi]^dim`.
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Largest absolute coordinate over the box.
    pub fn radius(&self) -> f64 {
        self.lower
            .iter()
            .chain(&self.upper)
            .fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Uniform sample, one draw per coordinate in index order.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        for ((x, lo), hi) in out.iter_mut().zip(&self.lower).zip(&self.upper) {
            let u: f64 = rng.random();
            *x = lo + (hi - lo) * u;
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.sample_into(rng, &mut x);
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_inverted_interval() {
        assert!(SearchBox::new(vec![1.0], vec![0.0]).is_err());
        assert!(SearchBox::new(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(SearchBox::new(vec![], vec![]).is_err());
    }

    #[test]
    fn samples_stay_inside() {
        let b = SearchBox::new(vec![-5.0, 2.0, 3.0], vec![5.0, 2.5, 3.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let x = b.sample(&mut rng);
            for ((v, lo), hi) in x.iter().zip(&b.lower).zip(&b.upper) {
                assert!(lo <= v && v <= hi);
            }
            assert_eq!(x[2], 3.0);
        }
        assert_eq!(b.radius(), 5.0);
    }
}
