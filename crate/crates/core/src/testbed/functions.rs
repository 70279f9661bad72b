use std::f64::consts::{E, PI, SQRT_2};

use super::ProblemId;
use crate::error::{Error, Result};
use crate::smoothing::{phi1, SmoothedObjective, SmoothingParams};

/// Evaluates one of the eight multimodal test functions with every `|·|`
/// routed through `abs`. Passing `f64::abs` gives the raw function, passing
/// `phi1(·, μ)` gives its smoothing.
fn formula(id: ProblemId, x: &[f64], abs: impl Fn(f64) -> f64) -> f64 {
    let d = x.len() as f64;
    match id {
        ProblemId::F1 | ProblemId::Example1Rastrigin => {
            x.iter()
                .map(|&v| abs(v) - 10.0 * (2.0 * PI * v).cos() + 10.0)
                .sum::<f64>()
                / d
        }
        ProblemId::F2 => {
            let mean_abs = x.iter().map(|&v| abs(v)).sum::<f64>() / d;
            let mean_cos = x.iter().map(|&v| (2.0 * PI * v).cos()).sum::<f64>() / d;
            (10.0 + E) - 10.0 * (-0.2 * mean_abs.sqrt()).exp() - mean_cos.exp()
        }
        ProblemId::F3 => {
            let sin_sq: f64 = x.iter().map(|v| v.sin().powi(2)).sum();
            let sq: f64 = x.iter().map(|v| v * v).sum();
            let damp: f64 = x.iter().map(|&v| abs(v).sqrt().sin().powi(2)).sum();
            (sin_sq - (-sq).exp()) * (-damp).exp() + 1.0
        }
        ProblemId::F4 => {
            let s: f64 = x.iter().map(|&v| abs(v)).sum();
            let p: f64 = x
                .iter()
                .enumerate()
                .map(|(l, v)| (v / ((l + 1) as f64).sqrt()).cos())
                .product();
            s / 4000.0 - p + 1.0
        }
        ProblemId::F5 => {
            let a: Vec<f64> = x.iter().map(|&v| abs(v)).collect();
            a.iter().sum::<f64>() + a.iter().product::<f64>()
        }
        ProblemId::F6 => 10.0 * x.iter().map(|&v| abs(v * (10.0 * v).sin() - 0.1 * v)).sum::<f64>(),
        ProblemId::F7 => 1.0 - x.iter().map(|&v| v.cos() * (-abs(v)).exp()).product::<f64>(),
        ProblemId::F8 => {
            let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            let l1: f64 = x.iter().map(|&v| abs(v)).sum();
            1.0 - (2.0 * PI * norm).cos() + 0.1 * l1.sqrt()
        }
        ProblemId::Example2Landscape => unreachable!("sampled landscape has no closed form"),
    }
}

/// Raw value of a closed-form benchmark.
///
/// `Example2Landscape` depends on sampled data and is rejected here; build
/// it with [`super::example2_objective`].
pub fn eval_benchmark(id: ProblemId, x: &[f64]) -> Result<f64> {
    if id == ProblemId::Example2Landscape {
        return Err(Error::input(
            "example2 is defined by sampled data; use example2_objective",
        ));
    }
    if x.is_empty() {
        return Err(Error::input("benchmark point must have at least one coordinate"));
    }
    Ok(formula(id, x, f64::abs))
}

/// Smoothed value with each `|·|` replaced by the quadratic-cap smoothing.
pub fn eval_benchmark_smoothed(id: ProblemId, x: &[f64], mu: f64) -> Result<f64> {
    if id == ProblemId::Example2Landscape {
        return Err(Error::input(
            "example2 is defined by sampled data; use example2_objective",
        ));
    }
    crate::smoothing::phi1_abs(0.0, mu)?;
    Ok(formula(id, x, |t| phi1(t, mu)))
}

/// Closed-form benchmark in a fixed dimension, with gap constants valid on
/// the cube `[−radius, radius]^dim` for `μ ≤ 1`.
#[derive(Clone, Debug)]
pub struct TestFunction {
    id: ProblemId,
    dim: usize,
    params: SmoothingParams,
}

impl TestFunction {
    pub fn new(id: ProblemId, dim: usize, radius: f64) -> Result<Self> {
        if id == ProblemId::Example2Landscape {
            return Err(Error::input("example2 is not a closed-form test function"));
        }
        if dim == 0 {
            return Err(Error::input("dimension must be positive"));
        }
        let d = dim as f64;
        // Replacing |t| by phi1(t, μ) moves each term by at most μ/2; the
        // constants below propagate that through each formula.
        let (kappa, q) = match id {
            ProblemId::F1 | ProblemId::Example1Rastrigin => (0.5, 0.0),
            // 2·sqrt(μ/2) through the square root and the exp slope ≤ 2
            ProblemId::F2 => (SQRT_2, 0.5),
            // |g| ≤ d times d·sqrt(μ/2) from the sin²∘sqrt terms
            ProblemId::F3 => (d * d / SQRT_2, 0.5),
            ProblemId::F4 => (d / 8000.0, 0.0),
            ProblemId::F5 => (0.5 * d * (1.0 + (radius + 0.5).powf(d - 1.0)), 0.0),
            ProblemId::F6 => (5.0 * d, 0.0),
            ProblemId::F7 => (0.5 * d, 0.0),
            ProblemId::F8 => (0.1 * (d / 2.0).sqrt(), 0.5),
            ProblemId::Example2Landscape => unreachable!(),
        };
        Ok(Self {
            id,
            dim,
            params: SmoothingParams::new(kappa, 1.0, q, 1.0)?,
        })
    }

    pub fn id(&self) -> ProblemId {
        self.id
    }
}

impl SmoothedObjective for TestFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn raw(&self, x: &[f64]) -> f64 {
        formula(self.id, x, f64::abs)
    }

    fn smoothed(&self, x: &[f64], mu: f64) -> f64 {
        formula(self.id, x, |t| phi1(t, mu))
    }

    fn params(&self) -> SmoothingParams {
        self.params
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_vanish_at_origin() {
        for id in ProblemId::BENCHMARKS {
            for d in [1, 3, 4, 10] {
                let v = eval_benchmark(id, &vec![0.0; d]).unwrap();
                assert!(v.abs() <= 1e-12, "{id} in d={d}: {v}");
            }
        }
    }

    #[test]
    fn hand_values() {
        assert_eq!(eval_benchmark(ProblemId::F5, &[1.0, 1.0, 1.0]).unwrap(), 4.0);
        assert_eq!(eval_benchmark(ProblemId::F5, &[-2.0, 0.5]).unwrap(), 3.5);
        // f1 at the integer lattice point x = 1 in d = 1: |1| − 10 + 10
        assert!((eval_benchmark(ProblemId::F1, &[1.0]).unwrap() - 1.0).abs() < 1e-12);
        // f6 in d = 1 at x = π/10: sin(π) ≈ 0, leaving 10·|−0.1·π/10|
        let v = eval_benchmark(ProblemId::F6, &[PI / 10.0]).unwrap();
        assert!((v - 0.1 * PI).abs() < 1e-12);
        assert!(eval_benchmark(ProblemId::Example2Landscape, &[0.0]).is_err());
        assert!(eval_benchmark(ProblemId::F1, &[]).is_err());
    }

    #[test]
    fn smoothed_differs_only_through_abs() {
        // f7 has no |·| at the origin's neighbourhood outside μ, so for
        // |x_l| > μ the smoothed and raw values coincide exactly
        let x = [0.7, -1.3, 2.1];
        for id in ProblemId::BENCHMARKS {
            if id == ProblemId::F6 {
                continue;
            }
            let raw = eval_benchmark(id, &x).unwrap();
            let sm = eval_benchmark_smoothed(id, &x, 0.5).unwrap();
            assert_eq!(raw, sm, "{id}");
        }
    }
}
