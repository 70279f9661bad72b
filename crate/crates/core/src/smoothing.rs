//! Smoothing functions for nonsmooth building blocks and smoothing-parameter
//! schedules.
//!
//! A smoothing function `f̃(x, μ)` of a nonsmooth `f` is continuously
//! differentiable in `x` for every `μ > 0` and recovers `f` as `μ ↓ 0`, with
//! `|f̃(x, μ) − f(x)| ≤ κ μ^{1−q}` on bounded sets. The constants are carried
//! alongside each objective in [`SmoothingParams`].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search_box::SearchBox;

/// Relative increment over the last quarter of a partial-sum window below
/// which the sum is treated as having converged.
pub const DEFAULT_PLATEAU_TOL: f64 = 1e-6;

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("smoothing parameter must be positive, got {mu}")))
    }
}

/// Quadratic-cap smoothing of `|s|`, unchecked.
#[inline]
pub(crate) fn phi1(s: f64, mu: f64) -> f64 {
    let a = s.abs();
    if a > mu {
        a
    } else {
        s * s / (2.0 * mu) + mu / 2.0
    }
}

#[inline]
pub(crate) fn phi1_deriv(s: f64, mu: f64) -> f64 {
    if s.abs() > mu {
        s.signum()
    } else {
        s / mu
    }
}

/// Quadratic-cap smoothing of `max(0, s)`, unchecked.
#[inline]
pub(crate) fn phi2(s: f64, mu: f64) -> f64 {
    if s.abs() >= mu / 2.0 {
        s.max(0.0)
    } else {
        s * s / (2.0 * mu) + s / 2.0 + mu / 8.0
    }
}

/// Smoothing of `|s|`: equals `|s|` outside `[−μ, μ]` and the parabola
/// `s²/(2μ) + μ/2` inside. Lies above `|s|` by at most `μ/2`.
pub fn phi1_abs(s: f64, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    Ok(phi1(s, mu))
}

/// Derivative of [`phi1_abs`] with respect to `s`.
pub fn phi1_abs_deriv(s: f64, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    Ok(phi1_deriv(s, mu))
}

/// Smoothing of the ReLU `max(0, s)`. Lies above it by at most `μ/8`.
pub fn phi2_relu(s: f64, mu: f64) -> Result<f64> {
    check_mu(mu)?;
    Ok(phi2(s, mu))
}

/// Smoothing of `|s|^p` for `p ∈ (0, 1]`, built as `phi1_abs(s, μ)^p`.
///
/// The resulting smoothing exponent is `q = 1 − p`; see [`abs_power_params`].
pub fn abs_power(s: f64, mu: f64, p: f64) -> Result<f64> {
    check_mu(mu)?;
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param(format!("exponent p must lie in (0, 1], got {p}")));
    }
    let base = phi1(s, mu);
    Ok(if p == 1.0 { base } else { base.powf(p) })
}

/// Smoothing constants for `Σ_{i<m} |·|^p` smoothed term-wise with
/// [`abs_power`]: `κ = 2^{−p} m p`, `q = 1 − p`.
///
/// `nu` depends on the inner affine maps and is left to the caller.
pub fn abs_power_params(m: usize, p: f64, nu: f64, mu_bar: f64) -> Result<SmoothingParams> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::param(format!("exponent p must lie in (0, 1], got {p}")));
    }
    SmoothingParams::new(2f64.powf(-p) * m as f64 * p, nu, 1.0 - p, mu_bar)
}

/// Constants of a smoothing function: gap constant `kappa`, Hessian-bound
/// constant `nu`, exponent `q ∈ [0, 1)` and the largest admissible `mu_bar`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingParams {
    pub kappa: f64,
    pub nu: f64,
    pub q: f64,
    pub mu_bar: f64,
}

impl SmoothingParams {
    pub fn new(kappa: f64, nu: f64, q: f64, mu_bar: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::param(format!("kappa must be positive, got {kappa}")));
        }
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::param(format!("nu must be positive, got {nu}")));
        }
        if !(0.0..1.0).contains(&q) {
            return Err(Error::param(format!("q must lie in [0, 1), got {q}")));
        }
        if !(mu_bar > 0.0 && mu_bar.is_finite()) {
            return Err(Error::param(format!("mu_bar must be positive, got {mu_bar}")));
        }
        Ok(Self { kappa, nu, q, mu_bar })
    }

    /// Upper bound on `|f̃(x, μ) − f(x)|` implied by these constants.
    pub fn gap_bound(&self, mu: f64) -> f64 {
        self.kappa * mu.powf(1.0 - self.q)
    }
}

impl Default for SmoothingParams {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            nu: 1.0,
            q: 0.0,
            mu_bar: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleKind {
    /// `μ_k = μ₀ / (1 + k)^exponent`
    InversePower { exponent: f64 },
    /// `μ_k = μ₀ · e^{−rate·k}`
    Exponential { rate: f64 },
}

/// A positive, non-increasing sequence of smoothing parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuSchedule {
    #[serde(flatten)]
    pub kind: ScheduleKind,
    pub mu0: f64,
}

impl MuSchedule {
    pub fn new(kind: ScheduleKind, mu0: f64) -> Result<Self> {
        if !(mu0 > 0.0 && mu0.is_finite()) {
            return Err(Error::InvalidSchedule(format!("mu0 must be positive, got {mu0}")));
        }
        match kind {
            ScheduleKind::InversePower { exponent } if !(exponent > 0.0 && exponent.is_finite()) => {
                Err(Error::InvalidSchedule(format!(
                    "inverse-power exponent must be positive, got {exponent}"
                )))
            }
            ScheduleKind::Exponential { rate } if !(rate > 0.0 && rate.is_finite()) => Err(
                Error::InvalidSchedule(format!("exponential rate must be positive, got {rate}")),
            ),
            _ => Ok(Self { kind, mu0 }),
        }
    }

    pub fn inverse_power(exponent: f64, mu0: f64) -> Result<Self> {
        Self::new(ScheduleKind::InversePower { exponent }, mu0)
    }

    pub fn exponential(rate: f64, mu0: f64) -> Result<Self> {
        Self::new(ScheduleKind::Exponential { rate }, mu0)
    }

    pub fn mu_at(&self, k: u64) -> f64 {
        let k = k as f64;
        match self.kind {
            ScheduleKind::InversePower { exponent } => self.mu0 / (1.0 + k).powf(exponent),
            ScheduleKind::Exponential { rate } => self.mu0 * (-rate * k).exp(),
        }
    }
}

/// Free-function form of [`MuSchedule::mu_at`].
pub fn mu_at(schedule: &MuSchedule, k: u64) -> f64 {
    schedule.mu_at(k)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Admissibility {
    Admissible,
    Inadmissible,
}

/// Partial sums of the two summability series over `k < terms`, with a
/// numerical verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleReport {
    pub terms: usize,
    /// `Σ μ_{k+1}^{−q} (μ_k − μ_{k+1})`
    pub s1: f64,
    /// `Σ e^{−(2γ − γ² − ζ²) k} μ_k^{−1−q}`
    pub s2: f64,
    /// Last-quarter increment of `s1`, relative to `s1`.
    pub s1_tail: f64,
    pub s2_tail: f64,
    /// `μ_terms / μ_0`.
    pub decay_ratio: f64,
    pub verdict: Admissibility,
}

impl ScheduleReport {
    pub fn is_admissible(&self) -> bool {
        self.verdict == Admissibility::Admissible
    }
}

/// Numerically checks the summability conditions on a schedule over
/// `terms` terms, with the default plateau tolerance.
pub fn validate_schedule(
    schedule: &MuSchedule,
    params: &SmoothingParams,
    gamma: f64,
    zeta: f64,
    terms: usize,
) -> Result<ScheduleReport> {
    if schedule.mu0 > params.mu_bar {
        return Err(Error::InvalidSchedule(format!(
            "mu0 = {} exceeds mu_bar = {}",
            schedule.mu0, params.mu_bar
        )));
    }
    let mu: Vec<f64> = (0..=terms as u64).map(|k| schedule.mu_at(k)).collect();
    match mu.iter().position(|&m| m == 0.0) {
        // underflow: the μ^{-(1+q)} terms are infinite from here on
        Some(j) if j >= 2 => {
            let mut r = validate_sequence(&mu[..j], params.q, gamma, zeta, DEFAULT_PLATEAU_TOL)?;
            r.terms = terms;
            r.s2 = f64::INFINITY;
            r.s2_tail = f64::INFINITY;
            r.decay_ratio = 0.0;
            r.verdict = Admissibility::Inadmissible;
            Ok(r)
        }
        _ => validate_sequence(&mu, params.q, gamma, zeta, DEFAULT_PLATEAU_TOL),
    }
}

/// Same checks as [`validate_schedule`] on an explicit sequence
/// `mu[0..=K]`; `K = mu.len() − 1` terms are summed.
pub fn validate_sequence(
    mu: &[f64],
    q: f64,
    gamma: f64,
    zeta: f64,
    plateau_tol: f64,
) -> Result<ScheduleReport> {
    let contraction = (1.0 - gamma).powi(2) + zeta * zeta;
    if !(contraction < 1.0) {
        return Err(Error::param(format!(
            "(1-gamma)^2 + zeta^2 = {contraction} must be below 1"
        )));
    }
    if mu.len() < 2 {
        return Err(Error::InvalidSchedule("need at least one term".into()));
    }
    for (k, w) in mu.windows(2).enumerate() {
        if !(w[0] > 0.0) || !(w[1] > 0.0) || !w[0].is_finite() {
            return Err(Error::InvalidSchedule(format!("mu_{k} is not positive and finite")));
        }
        if w[1] > w[0] {
            return Err(Error::InvalidSchedule(format!(
                "sequence increases at k = {k}: {} -> {}",
                w[0], w[1]
            )));
        }
    }

    let terms = mu.len() - 1;
    let rate = 2.0 * gamma - gamma * gamma - zeta * zeta;
    let quarter = (3 * terms) / 4;
    let (mut s1, mut s2) = (0.0_f64, 0.0_f64);
    let (mut s1_q, mut s2_q) = (0.0_f64, 0.0_f64);
    for k in 0..terms {
        if k == quarter {
            s1_q = s1;
            s2_q = s2;
        }
        s1 += mu[k + 1].powf(-q) * (mu[k] - mu[k + 1]);
        // log-space so that fast-decaying schedules overflow to +inf cleanly
        s2 += (-rate * k as f64 - (1.0 + q) * mu[k].ln()).exp();
    }
    let rel_tail = |total: f64, at_quarter: f64| {
        if !total.is_finite() {
            f64::INFINITY
        } else if total == 0.0 {
            0.0
        } else {
            (total - at_quarter) / total
        }
    };
    let s1_tail = rel_tail(s1, s1_q);
    let s2_tail = rel_tail(s2, s2_q);
    let decay_ratio = mu[terms] / mu[0];
    // A strictly positive sequence that has not even halved cannot be
    // observed to tend to zero.
    let vanishing = decay_ratio <= 0.5;
    let verdict = if vanishing && s1_tail < plateau_tol && s2_tail < plateau_tol {
        Admissibility::Admissible
    } else {
        Admissibility::Inadmissible
    };
    Ok(ScheduleReport {
        terms,
        s1,
        s2,
        s1_tail,
        s2_tail,
        decay_ratio,
        verdict,
    })
}

/// An objective `f` paired with a smoothing function `f̃(·, μ)`.
///
/// Implementations must be pure: equal inputs give bit-identical outputs.
pub trait SmoothedObjective: Send + Sync {
    fn dim(&self) -> usize;

    fn raw(&self, x: &[f64]) -> f64;

    fn smoothed(&self, x: &[f64], mu: f64) -> f64;

    fn params(&self) -> SmoothingParams {
        SmoothingParams::default()
    }
}

/// A [`SmoothedObjective`] assembled from two closures.
pub struct FnObjective<F, G> {
    dim: usize,
    raw: F,
    smoothed: G,
    params: SmoothingParams,
}

impl<F, G> FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], f64) -> f64 + Send + Sync,
{
    pub fn new(dim: usize, raw: F, smoothed: G, params: SmoothingParams) -> Self {
        Self {
            dim,
            raw,
            smoothed,
            params,
        }
    }
}

impl<F, G> SmoothedObjective for FnObjective<F, G>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
    G: Fn(&[f64], f64) -> f64 + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn raw(&self, x: &[f64]) -> f64 {
        (self.raw)(x)
    }

    fn smoothed(&self, x: &[f64], mu: f64) -> f64 {
        (self.smoothed)(x, mu)
    }

    fn params(&self) -> SmoothingParams {
        self.params
    }
}

/// Worst observed `|f̃ − f| / (κ μ^{1−q})` over random points of `bounds`
/// and random `μ ∈ (0, mu_bar]`. Values `≤ 1` satisfy the gap bound.
///
/// Returns an error if any evaluation is non-finite.
pub fn spot_check_gap<O, R>(
    objective: &O,
    bounds: &SearchBox,
    n_points: usize,
    rng: &mut R,
) -> Result<f64>
where
    O: SmoothedObjective + ?Sized,
    R: Rng + ?Sized,
{
    let params = objective.params();
    let mut worst = 0.0_f64;
    let mut x = vec![0.0; bounds.dim()];
    for i in 0..n_points {
        bounds.sample_into(rng, &mut x);
        // (0, mu_bar]: 1 − u with u ∈ [0, 1)
        let mu = params.mu_bar * (1.0 - rng.random::<f64>());
        let f = objective.raw(&x);
        let g = objective.smoothed(&x, mu);
        if !f.is_finite() || !g.is_finite() {
            return Err(Error::InvalidObjective {
                index: i,
                value: if f.is_finite() { g } else { f },
            });
        }
        worst = worst.max((g - f).abs() / params.gap_bound(mu));
    }
    Ok(worst)
}
