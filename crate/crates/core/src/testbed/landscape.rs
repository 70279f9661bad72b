use std::f64::consts::FRAC_PI_2;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{BenchmarkProblem, ProblemId};
use crate::error::{Error, Result};
use crate::search_box::SearchBox;
use crate::smoothing::{phi1, SmoothedObjective, SmoothingParams};
use crate::solver::SicboRng;

/// Spacing of the grid search that locates the sampled landscape's optimum.
pub const EXAMPLE2_GRID_STEP: f64 = 1e-5;

const WEIGHT: f64 = 0.1;
const DOMAIN: f64 = 3.0;

/// Window sizes up to this are summed directly instead of through prefix
/// sums, which would cancel badly when `μ` is tiny.
const DIRECT_WINDOW: usize = 256;

fn wave(x: f64) -> f64 {
    let t = x + FRAC_PI_2;
    (2.0 * t * t).sin().exp()
}

fn wave_deriv(x: f64) -> f64 {
    let t = x + FRAC_PI_2;
    let u = 2.0 * t * t;
    u.sin().exp() * u.cos() * 4.0 * t
}

/// `f(x) = (1/n) Σ_i [e^{sin(2(x+π/2)²)} + |x − x̂_i|/10]` for fixed samples
/// `x̂_i`.
///
/// The samples are kept sorted with prefix sums of `x̂` and `x̂²`, so both
/// the raw value and its smoothing cost `O(log n)` per point.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledLandscape {
    samples: Vec<f64>,
    sorted: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

impl SampledLandscape {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::input("landscape needs at least one sample"));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("landscape samples must be finite"));
        }
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        let mut p1 = Vec::with_capacity(sorted.len() + 1);
        let mut p2 = Vec::with_capacity(sorted.len() + 1);
        let (mut a, mut b) = (0.0, 0.0);
        p1.push(a);
        p2.push(b);
        for &s in &sorted {
            a += s;
            b += s * s;
            p1.push(a);
            p2.push(b);
        }
        Ok(Self {
            samples,
            sorted,
            p1,
            p2,
        })
    }

    /// `n` samples from `N(0, sample_std²)`.
    pub fn draw(n: usize, seed: u64, sample_std: f64) -> Result<Self> {
        if !(sample_std >= 0.0 && sample_std.is_finite()) {
            return Err(Error::param(format!("sample std must be nonnegative, got {sample_std}")));
        }
        let normal = Normal::new(0.0, sample_std).map_err(|e| Error::param(e.to_string()))?;
        let mut rng = SicboRng::seed_from_u64(seed);
        Self::new((0..n).map(|_| normal.sample(&mut rng)).collect())
    }

    /// Samples in draw order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    /// `Σ_{i ∈ [a, b)} x̂_i` over the sorted samples.
    fn range_sum(&self, a: usize, b: usize) -> f64 {
        self.p1[b] - self.p1[a]
    }

    /// `Σ_i |x − x̂_i|`
    fn abs_sum(&self, x: f64) -> f64 {
        let n = self.sorted.len();
        let k = self.sorted.partition_point(|&s| s < x);
        (k as f64 * x - self.p1[k]) + (self.range_sum(k, n) - (n - k) as f64 * x)
    }

    /// `Σ_i φ₁(x − x̂_i, μ)`
    fn smoothed_abs_sum(&self, x: f64, mu: f64) -> f64 {
        let n = self.sorted.len();
        let a = self.sorted.partition_point(|&s| s < x - mu);
        let b = self.sorted.partition_point(|&s| s <= x + mu);
        let below = a as f64 * x - self.p1[a];
        let above = self.range_sum(b, n) - (n - b) as f64 * x;
        let m = b - a;
        let window = if m <= DIRECT_WINDOW {
            self.sorted[a..b].iter().map(|&s| phi1(x - s, mu)).sum()
        } else {
            let quad = m as f64 * x * x - 2.0 * x * self.range_sum(a, b) + (self.p2[b] - self.p2[a]);
            quad.max(0.0) / (2.0 * mu) + m as f64 * mu / 2.0
        };
        below + above + window
    }

    pub fn value(&self, x: f64) -> f64 {
        wave(x) + WEIGHT * self.abs_sum(x) / self.n() as f64
    }

    pub fn smoothed_value(&self, x: f64, mu: f64) -> f64 {
        wave(x) + WEIGHT * self.smoothed_abs_sum(x, mu) / self.n() as f64
    }

    /// `∂_x g(x, x̂_i)` with the kink subgradient taken as zero.
    pub fn sample_subgradient(&self, x: f64, i: usize) -> f64 {
        let s = self.samples[i];
        let sign = if x > s {
            1.0
        } else if x < s {
            -1.0
        } else {
            0.0
        };
        wave_deriv(x) + WEIGHT * sign
    }

    /// Smallest value over the grid `lo, lo + step, …, hi` and its location.
    /// Ties keep the leftmost point.
    pub fn grid_minimum(&self, lo: f64, hi: f64, step: f64) -> Result<(f64, f64)> {
        if !(lo <= hi && step > 0.0) {
            return Err(Error::param(format!("bad grid [{lo}, {hi}] step {step}")));
        }
        let count = ((hi - lo) / step).round() as u64;
        let mut best = (lo, self.value(lo));
        for j in 1..=count {
            let x = lo + j as f64 * step;
            let v = self.value(x);
            if v < best.1 {
                best = (x, v);
            }
        }
        Ok(best)
    }
}

impl SmoothedObjective for SampledLandscape {
    fn dim(&self) -> usize {
        1
    }

    fn raw(&self, x: &[f64]) -> f64 {
        self.value(x[0])
    }

    fn smoothed(&self, x: &[f64], mu: f64) -> f64 {
        self.smoothed_value(x[0], mu)
    }

    fn params(&self) -> SmoothingParams {
        // each |·| moves by at most μ/2, scaled by the 1/10 weight
        SmoothingParams::new(WEIGHT / 2.0, 1.0, 0.0, 1.0).expect("static params")
    }
}

/// The sampled landscape with `N(0, 0.1)` samples (variance 0.1).
pub fn example2_objective(n_samples: usize, noise_seed: u64) -> Result<BenchmarkProblem> {
    example2_objective_with(n_samples, noise_seed, 0.1_f64.sqrt())
}

/// Sampled landscape with an explicit sample standard deviation. The
/// optimum is located by grid search on `[−3, 3]`.
pub fn example2_objective_with(
    n_samples: usize,
    noise_seed: u64,
    sample_std: f64,
) -> Result<BenchmarkProblem> {
    let landscape = Arc::new(SampledLandscape::draw(n_samples, noise_seed, sample_std)?);
    let (x_star, f_star) = landscape.grid_minimum(-DOMAIN, DOMAIN, EXAMPLE2_GRID_STEP)?;
    Ok(BenchmarkProblem {
        id: ProblemId::Example2Landscape,
        dim: 1,
        objective: landscape.clone(),
        minimizer: vec![x_star],
        min_value: f_star,
        init_box: SearchBox::cube(1, -DOMAIN, DOMAIN)?,
        success_threshold: 5e-3,
        landscape: Some(landscape),
    })
}

/// Stochastic subgradient baseline settings.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SsdOptions {
    pub batch_size: usize,
    pub step_len: f64,
    pub iterations: u64,
}

impl Default for SsdOptions {
    fn default() -> Self {
        Self {
            batch_size: 20,
            step_len: 0.01,
            iterations: 2000,
        }
    }
}

/// `size` distinct indices drawn uniformly from `0..n`.
pub fn draw_batch<R: Rng + ?Sized>(rng: &mut R, n: usize, size: usize) -> Result<Vec<usize>> {
    if size == 0 || size > n {
        return Err(Error::param(format!("batch size {size} must be in 1..={n}")));
    }
    Ok(index::sample(rng, n, size).into_vec())
}

/// Mean subgradient over `batch`.
pub fn ssd_subgradient(landscape: &SampledLandscape, x: f64, batch: &[usize]) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::input("empty batch"));
    }
    if let Some(&i) = batch.iter().find(|&&i| i >= landscape.n()) {
        return Err(Error::input(format!("batch index {i} out of range")));
    }
    Ok(batch
        .iter()
        .map(|&i| landscape.sample_subgradient(x, i))
        .sum::<f64>()
        / batch.len() as f64)
}

/// `x − s · mean_{i ∈ batch} ∂_x g(x, x̂_i)`
pub fn ssd_step(x: &[f64], batch: &[usize], landscape: &SampledLandscape, step_len: f64) -> Result<Vec<f64>> {
    if x.len() != 1 {
        return Err(Error::input(format!("landscape is one-dimensional, got {}", x.len())));
    }
    if !(step_len > 0.0) {
        return Err(Error::param(format!("step length must be positive, got {step_len}")));
    }
    Ok(vec![x[0] - step_len * ssd_subgradient(landscape, x[0], batch)?])
}

/// Runs the baseline from a uniform draw on `init_box` and returns the last
/// iterate.
pub fn ssd_run<R: Rng + ?Sized>(
    landscape: &SampledLandscape,
    init_box: &SearchBox,
    options: &SsdOptions,
    rng: &mut R,
) -> Result<f64> {
    let mut x = init_box.sample(rng);
    for _ in 0..options.iterations {
        let batch = draw_batch(rng, landscape.n(), options.batch_size)?;
        x = ssd_step(&x, &batch, landscape, options.step_len)?;
        if !x[0].is_finite() {
            return Err(Error::param("subgradient iterate diverged"));
        }
    }
    Ok(x[0])
}
