//! Empirical checks of the consensus behaviour: ensemble diameters,
//! dispersion bounds along recorded paths, geometric-rate fits and
//! optimality gaps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{ParticleEnsemble, RunReport, StepRecord};
use crate::testbed::BenchmarkProblem;

/// Default tolerance on relative excess in [`pathwise_dispersion_bound`].
pub const BOUND_REL_TOL: f64 = 1e-10;

/// Rounding allowance per coordinate, in units of `ε · max|x|`, added to the
/// right-hand side of the dispersion bound. The bound holds in exact
/// arithmetic; once particles collapse to within a few ulps of each other
/// the computed spread stops contracting while the bound keeps shrinking.
pub const BOUND_FLOOR_ULPS: f64 = 64.0;

/// Per-coordinate `D_l = max_i |x_l^{i,0} − x̄_l^0|²`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Dispersion {
    pub d_l: Vec<f64>,
}

/// Per-iteration series recorded by the solver. Entry `k` describes the
/// iterate `x^k` and the factors used to move it to `x^{k+1}`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConsensusTrace {
    pub dim: usize,
    pub initial_dispersion: Dispersion,
    /// Largest pairwise ℓ₂ distance.
    pub diameter: Vec<f64>,
    /// `(1/N) Σ_i ‖x^{i,k} − x̄^{⋆,k}‖²`
    pub mean_sq_dev: Vec<f64>,
    /// `min_i f(x^{i,k})` on the raw objective.
    pub best_value: Vec<f64>,
    pub mean_value: Vec<f64>,
    pub mu: Vec<f64>,
    /// Largest absolute coordinate, used for rounding allowances.
    pub scale: Vec<f64>,
    /// `1 − γ − η_l^k` for each coordinate.
    pub realized_factors: Vec<Vec<f64>>,
}

impl ConsensusTrace {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn len(&self) -> usize {
        self.diameter.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diameter.is_empty()
    }

    pub(crate) fn push_iteration(
        &mut self,
        ensemble: &ParticleEnsemble,
        raw_values: &[f64],
        rec: &StepRecord,
    ) -> Result<()> {
        if self.is_empty() {
            self.initial_dispersion = initial_dispersion(ensemble);
        }
        self.diameter.push(ensemble_diameter(ensemble)?);
        self.mean_sq_dev.push(mean_sq_deviation(ensemble, &rec.consensus));
        self.best_value
            .push(raw_values.iter().copied().fold(f64::INFINITY, f64::min));
        self.mean_value
            .push(raw_values.iter().sum::<f64>() / raw_values.len() as f64);
        self.mu.push(rec.mu);
        self.scale.push(ensemble.scale().max(abs_max(&rec.consensus)));
        self.realized_factors.push(rec.factors.clone());
        Ok(())
    }
}

fn abs_max(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Maximum pairwise ℓ₂ distance, computed over all pairs.
pub fn ensemble_diameter(ensemble: &ParticleEnsemble) -> Result<f64> {
    let n = ensemble.n();
    if n < 2 {
        return Err(Error::input("diameter needs at least two particles"));
    }
    let row_max = |i: usize| {
        let xi = ensemble.particle(i);
        (i + 1..n)
            .map(|j| dist_sq(xi, ensemble.particle(j)))
            .fold(0.0_f64, f64::max)
    };
    let work = n * n * ensemble.dim();
    let max_sq = if work > 1 << 20 {
        (0..n).into_par_iter().map(row_max).reduce(|| 0.0, f64::max)
    } else {
        (0..n).map(row_max).fold(0.0, f64::max)
    };
    Ok(max_sq.sqrt())
}

/// `(1/N) Σ_i ‖x^i − center‖²`
pub fn mean_sq_deviation(ensemble: &ParticleEnsemble, center: &[f64]) -> f64 {
    ensemble.rows().map(|x| dist_sq(x, center)).sum::<f64>() / ensemble.n() as f64
}

/// Arithmetic mean `x̄^k = (1/N) Σ_i x^{i,k}`.
pub fn average_point(ensemble: &ParticleEnsemble) -> Vec<f64> {
    ensemble.mean()
}

pub fn initial_dispersion(ensemble: &ParticleEnsemble) -> Dispersion {
    let mean = ensemble.mean();
    let mut d_l = vec![0.0_f64; ensemble.dim()];
    for x in ensemble.rows() {
        for l in 0..d_l.len() {
            let dev = x[l] - mean[l];
            d_l[l] = d_l[l].max(dev * dev);
        }
    }
    Dispersion { d_l }
}

/// Result of checking `mean_sq_dev(k) ≤ 2 Σ_l D_l Π_{n<k} (1 − γ − η_l^n)²`
/// at every recorded iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub checked: usize,
    pub violations: usize,
    /// Largest `(lhs − rhs − floor) / rhs` observed, clamped at zero.
    pub max_relative_excess: f64,
    /// Iteration of the largest excess.
    pub worst_iteration: usize,
    pub tolerance: f64,
}

impl BoundReport {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

/// Checks the per-path dispersion bound on a recorded trace using the
/// realized noise factors.
pub fn pathwise_dispersion_bound(trace: &ConsensusTrace, dispersion: &Dispersion) -> Result<BoundReport> {
    let k_max = trace.len();
    if trace.realized_factors.len() != k_max
        || trace.mean_sq_dev.len() != k_max
        || trace.scale.len() != k_max
    {
        return Err(Error::InvalidTrace(format!(
            "series lengths differ: {} iterations, {} factor rows, {} deviations",
            k_max,
            trace.realized_factors.len(),
            trace.mean_sq_dev.len()
        )));
    }
    let dim = dispersion.d_l.len();
    if let Some(k) = trace.realized_factors.iter().position(|f| f.len() != dim) {
        return Err(Error::InvalidTrace(format!(
            "iteration {k} has {} realized factors, expected {dim}",
            trace.realized_factors[k].len()
        )));
    }

    let mut products = vec![1.0_f64; dim];
    let mut report = BoundReport {
        checked: k_max,
        violations: 0,
        max_relative_excess: 0.0,
        worst_iteration: 0,
        tolerance: BOUND_REL_TOL,
    };
    for k in 0..k_max {
        let rhs = 2.0
            * dispersion
                .d_l
                .iter()
                .zip(&products)
                .map(|(d, p)| d * p)
                .sum::<f64>();
        let ulp_scale = BOUND_FLOOR_ULPS * f64::EPSILON * trace.scale[k];
        let floor = dim as f64 * ulp_scale * ulp_scale;
        let excess = trace.mean_sq_dev[k] - rhs - floor;
        let rel = if excess <= 0.0 {
            0.0
        } else if rhs > 0.0 {
            excess / rhs
        } else {
            f64::INFINITY
        };
        if rel > report.max_relative_excess {
            report.max_relative_excess = rel;
            report.worst_iteration = k;
        }
        if rel > BOUND_REL_TOL {
            report.violations += 1;
        }
        for (p, a) in products.iter_mut().zip(&trace.realized_factors[k]) {
            *p *= a * a;
        }
    }
    Ok(report)
}

/// Per-step ratio from a least-squares fit of `ln(series[k])` against `k`
/// over `k ≥ burn_in`.
pub fn fit_geometric_rate(series: &[f64], burn_in: usize) -> Result<f64> {
    if series.len() < burn_in + 10 {
        return Err(Error::InvalidSeries(format!(
            "need at least 10 points after burn-in {burn_in}, series has {}",
            series.len()
        )));
    }
    let window = &series[burn_in..];
    if let Some(i) = window.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidSeries(format!(
            "entry {} is {}; shorten the window before consensus reaches machine precision",
            burn_in + i,
            window[i]
        )));
    }
    let m = window.len() as f64;
    let k_mean = (m - 1.0) / 2.0;
    let logs: Vec<f64> = window.iter().map(|v| v.ln()).collect();
    let y_mean = logs.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in logs.iter().enumerate() {
        let dk = i as f64 - k_mean;
        sxy += dk * (y - y_mean);
        sxx += dk * dk;
    }
    Ok((sxy / sxx).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SolErrConvention {
    /// `(1/N) Σ ‖x^i − x*‖`
    #[default]
    Norm,
    /// `(1/N) Σ ‖x^i − x*‖²`
    SquaredNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimalityGap {
    pub sol_err: f64,
    pub fun_err: f64,
}

/// Particle-averaged distance and objective gap to the known minimizer.
pub fn ensemble_gap(
    ensemble: &ParticleEnsemble,
    problem: &BenchmarkProblem,
    convention: SolErrConvention,
) -> OptimalityGap {
    let n = ensemble.n() as f64;
    let (mut sol, mut fun) = (0.0, 0.0);
    for x in ensemble.rows() {
        let d2 = dist_sq(x, &problem.minimizer);
        sol += match convention {
            SolErrConvention::Norm => d2.sqrt(),
            SolErrConvention::SquaredNorm => d2,
        };
        fun += (problem.objective.raw(x) - problem.min_value).abs();
    }
    OptimalityGap {
        sol_err: sol / n,
        fun_err: fun / n,
    }
}

/// [`ensemble_gap`] on the final particles of a run.
pub fn optimality_gap(
    report: &RunReport,
    problem: &BenchmarkProblem,
    convention: SolErrConvention,
) -> OptimalityGap {
    ensemble_gap(&report.final_ensemble, problem, convention)
}

/// `max_i ‖x^i − x*‖`, the quantity compared against success thresholds.
pub fn max_distance(ensemble: &ParticleEnsemble, target: &[f64]) -> f64 {
    ensemble
        .rows()
        .map(|x| dist_sq(x, target))
        .fold(0.0_f64, f64::max)
        .sqrt()
}
