//! The smoothing iterative consensus-based optimization loop.
//!
//! Each iteration evaluates the smoothed objective `f̃(·, μ_k)` at every
//! particle, forms the Gibbs-weighted consensus point, draws one Gaussian
//! value per coordinate and moves every particle with that shared noise:
//!
//! ```text
//! x_l^{i,k+1} = x̄_l^{⋆,k} + (1 − γ − η_l^k)(x_l^{i,k} − x̄_l^{⋆,k})
//! ```
//!
//! which is the drift-plus-noise update rearranged so that a zero factor
//! lands exactly on the consensus point.

mod config;
mod ensemble;
mod stop;

pub use config::{check_consensus_condition, ConsensusCondition, SicboConfig, StopRule};
pub use ensemble::{ParticleEnsemble, StepNoise};
pub use stop::should_stop;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, ConsensusTrace};
use crate::error::{Error, Result};
use crate::smoothing::SmoothedObjective;

/// Generator used for every seeded run.
pub type SicboRng = ChaCha8Rng;

/// Below this many coordinates per evaluation sweep the particle loop stays
/// on the calling thread.
const PARALLEL_MIN_COORDS: usize = 4096;

/// Gibbs-weighted average `Σ wᵢ xᵢ / Σ wᵢ` with `wᵢ = e^{−β(f̃ᵢ − min f̃)}`.
///
/// Shifting by the minimum keeps the best particle's weight at exactly one,
/// so very large `beta` degenerates to the argmin particle instead of `0/0`.
/// The average is accumulated as offsets from that particle, which makes a
/// collapsed ensemble map to its common position exactly.
pub fn consensus_point(
    ensemble: &ParticleEnsemble,
    smoothed_values: &[f64],
    beta: f64,
) -> Result<Vec<f64>> {
    let (n, dim) = (ensemble.n(), ensemble.dim());
    if smoothed_values.len() != n {
        return Err(Error::input(format!(
            "{} objective values for {n} particles",
            smoothed_values.len()
        )));
    }
    if !(beta > 0.0) {
        return Err(Error::param(format!("beta must be positive, got {beta}")));
    }
    if let Some((index, &value)) = smoothed_values
        .iter()
        .enumerate()
        .find(|(_, v)| !v.is_finite())
    {
        return Err(Error::InvalidObjective { index, value });
    }

    let best = smoothed_values
        .iter()
        .enumerate()
        .fold(0, |b, (i, &v)| if v < smoothed_values[b] { i } else { b });
    let f_min = smoothed_values[best];
    let anchor = ensemble.particle(best);

    let mut offset = vec![0.0; dim];
    let mut total = 0.0;
    let mut lo = anchor.to_vec();
    let mut hi = anchor.to_vec();
    for (x, &f) in ensemble.rows().zip(smoothed_values) {
        for l in 0..dim {
            lo[l] = lo[l].min(x[l]);
            hi[l] = hi[l].max(x[l]);
        }
        let w = (-beta * (f - f_min)).exp();
        if w == 0.0 {
            continue;
        }
        total += w;
        for l in 0..dim {
            offset[l] += w * (x[l] - anchor[l]);
        }
    }
    Ok((0..dim)
        .map(|l| (anchor[l] + offset[l] / total).clamp(lo[l], hi[l]))
        .collect())
}

/// `dim` independent `N(0, ζ²)` samples. `ζ = 0` gives zeros without
/// touching the generator.
pub fn draw_noise<R: Rng + ?Sized>(rng: &mut R, dim: usize, zeta: f64) -> StepNoise {
    if zeta == 0.0 {
        return StepNoise::zeros(dim);
    }
    let normal = Normal::new(0.0, zeta).expect("zeta is finite and nonnegative");
    StepNoise {
        values: (0..dim).map(|_| normal.sample(rng)).collect(),
    }
}

/// Evaluates `f` on every particle, in particle order.
pub(crate) fn evaluate<F>(ensemble: &ParticleEnsemble, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if ensemble.positions().len() >= PARALLEL_MIN_COORDS {
        ensemble
            .positions()
            .par_chunks_exact(ensemble.dim())
            .map(&f)
            .collect()
    } else {
        ensemble.rows().map(f).collect()
    }
}

fn ensure_finite(values: &[f64]) -> Result<()> {
    match values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        Some((index, &value)) => Err(Error::InvalidObjective { index, value }),
        None => Ok(()),
    }
}

/// Everything produced by one iteration.
#[derive(Clone, Debug)]
pub struct StepRecord {
    pub next: ParticleEnsemble,
    pub mu: f64,
    pub smoothed_values: Vec<f64>,
    pub consensus: Vec<f64>,
    pub noise: StepNoise,
    /// Realized per-coordinate contraction factors `1 − γ − η_l`.
    pub factors: Vec<f64>,
}

/// One iteration from `ensemble` (at iteration `k`) to iteration `k + 1`.
pub fn step<O, R>(
    ensemble: &ParticleEnsemble,
    config: &SicboConfig,
    objective: &O,
    rng: &mut R,
) -> Result<StepRecord>
where
    O: SmoothedObjective + ?Sized,
    R: Rng + ?Sized,
{
    let mu = config.schedule.mu_at(ensemble.iteration);
    let smoothed_values = evaluate(ensemble, |x| objective.smoothed(x, mu));
    ensure_finite(&smoothed_values)?;
    let consensus = consensus_point(ensemble, &smoothed_values, config.beta)?;

    // Noise is fixed before any particle moves.
    let noise = draw_noise(rng, ensemble.dim(), config.zeta);
    let keep = 1.0 - config.gamma;
    let factors: Vec<f64> = noise.values.iter().map(|eta| keep - eta).collect();

    let mut next = ensemble.clone();
    let dim = next.dim();
    let update = |row: &mut [f64]| {
        for l in 0..dim {
            row[l] = factors[l].mul_add(row[l] - consensus[l], consensus[l]);
        }
    };
    if next.positions().len() >= PARALLEL_MIN_COORDS {
        next.positions_mut().par_chunks_exact_mut(dim).for_each(update);
    } else {
        next.positions_mut().chunks_exact_mut(dim).for_each(update);
    }
    if !next.is_finite() {
        return Err(Error::param(format!(
            "iterate diverged at iteration {}",
            ensemble.iteration
        )));
    }
    next.iteration = ensemble.iteration + 1;

    Ok(StepRecord {
        next,
        mu,
        smoothed_values,
        consensus,
        noise,
        factors,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// The configured stop rule fired.
    StopRule,
    /// `max_iter` was reached first.
    IterationCapped,
}

/// Outcome of one seeded run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub config: SicboConfig,
    pub iterations: u64,
    pub termination: Termination,
    pub consensus_condition: ConsensusCondition,
    pub final_ensemble: ParticleEnsemble,
    /// Consensus point of the final ensemble at `μ_K`.
    pub consensus_point: Vec<f64>,
    pub final_diameter: f64,
    pub trace: ConsensusTrace,
}

impl RunReport {
    pub fn is_capped(&self) -> bool {
        self.termination == Termination::IterationCapped
    }
}

/// Runs from `N` particles drawn uniformly on `config.init_box`.
pub fn run<O: SmoothedObjective + ?Sized>(config: &SicboConfig, objective: &O) -> Result<RunReport> {
    run_with_observer(config, objective, |_| {})
}

/// Like [`run`], calling `observer` on the initial ensemble and after each
/// iteration.
pub fn run_with_observer<O, F>(config: &SicboConfig, objective: &O, observer: F) -> Result<RunReport>
where
    O: SmoothedObjective + ?Sized,
    F: FnMut(&ParticleEnsemble),
{
    config.validate()?;
    let mut rng = SicboRng::seed_from_u64(config.seed);
    let initial = ParticleEnsemble::uniform(config.n_particles, &config.init_box, &mut rng)?;
    run_from(config, objective, initial, &mut rng, observer)
}

/// Runs from an explicit initial ensemble with the caller's generator.
/// `config.init_box` and `config.seed` are only recorded.
pub fn run_from<O, R, F>(
    config: &SicboConfig,
    objective: &O,
    initial: ParticleEnsemble,
    rng: &mut R,
    mut observer: F,
) -> Result<RunReport>
where
    O: SmoothedObjective + ?Sized,
    R: Rng + ?Sized,
    F: FnMut(&ParticleEnsemble),
{
    config.validate()?;
    if initial.dim() != objective.dim() {
        return Err(Error::input(format!(
            "ensemble has dimension {}, objective expects {}",
            initial.dim(),
            objective.dim()
        )));
    }
    if initial.n() < 2 {
        return Err(Error::input("need at least two particles"));
    }

    let mut ensemble = initial;
    let mut raw = evaluate(&ensemble, |x| objective.raw(x));
    ensure_finite(&raw)?;
    let mut trace = ConsensusTrace::new(ensemble.dim());
    observer(&ensemble);

    let termination = loop {
        if ensemble.iteration >= config.max_iter {
            break Termination::IterationCapped;
        }
        let rec = step(&ensemble, config, objective, rng)?;
        trace.push_iteration(&ensemble, &raw, &rec)?;

        let next_raw = evaluate(&rec.next, |x| objective.raw(x));
        ensure_finite(&next_raw)?;
        let stop = stop::stop_test(&config.stop, &ensemble, &rec.next, &raw, &next_raw);
        ensemble = rec.next;
        raw = next_raw;
        observer(&ensemble);
        if stop {
            break Termination::StopRule;
        }
    };

    let mu = config.schedule.mu_at(ensemble.iteration);
    let smoothed = evaluate(&ensemble, |x| objective.smoothed(x, mu));
    ensure_finite(&smoothed)?;
    let consensus = consensus_point(&ensemble, &smoothed, config.beta)?;
    let final_diameter = diagnostics::ensemble_diameter(&ensemble)?;

    Ok(RunReport {
        seed: config.seed,
        config: config.clone(),
        iterations: ensemble.iteration,
        termination,
        consensus_condition: config.consensus_condition(),
        final_ensemble: ensemble,
        consensus_point: consensus,
        final_diameter,
        trace,
    })
}
