use std::cell::RefCell;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{check_len, mse_unchecked, MlpShape, Scratch, SyntheticDataset};
use crate::error::{Error, Result};
use crate::search_box::SearchBox;
use crate::smoothing::{MuSchedule, SmoothedObjective, SmoothingParams};
use crate::solver::{run_with_observer, ParticleEnsemble, RunReport, SicboConfig, StopRule};
use crate::testbed::trial_seed;

thread_local! {
    static SCRATCH: RefCell<Option<(Vec<usize>, Scratch)>> = const { RefCell::new(None) };
}

fn with_scratch<T>(shape: &MlpShape, f: impl FnOnce(&mut Scratch) -> T) -> T {
    SCRATCH.with(|cell| {
        let mut slot = cell.borrow_mut();
        if slot.as_ref().is_none_or(|(w, _)| w.as_slice() != shape.widths()) {
            *slot = Some((shape.widths().to_vec(), Scratch::new(shape)));
        }
        f(&mut slot.as_mut().expect("just filled").1)
    })
}

/// Mean squared training error as a function of the packed parameters; the
/// smoothed version replaces every ReLU by its quadratic smoothing.
#[derive(Clone, Debug)]
pub struct MlpObjective {
    shape: MlpShape,
    dataset: Arc<SyntheticDataset>,
}

impl MlpObjective {
    pub fn new(shape: MlpShape, dataset: Arc<SyntheticDataset>) -> Result<Self> {
        dataset.validate()?;
        if dataset.n_in != shape.input_dim() || dataset.n_out != shape.output_dim() {
            return Err(Error::input("dataset columns do not match the network shape"));
        }
        if dataset.n_train == 0 {
            return Err(Error::input("training split is empty"));
        }
        Ok(Self { shape, dataset })
    }

    pub fn shape(&self) -> &MlpShape {
        &self.shape
    }

    fn loss(&self, params: &[f64], mu: f64, test: bool) -> f64 {
        let slice = if test { self.dataset.test() } else { self.dataset.train() };
        with_scratch(&self.shape, |s| mse_unchecked(params, &self.shape, &slice, mu, s))
    }
}

impl SmoothedObjective for MlpObjective {
    fn dim(&self) -> usize {
        self.shape.param_count()
    }

    fn raw(&self, x: &[f64]) -> f64 {
        self.loss(x, 0.0, false)
    }

    fn smoothed(&self, x: &[f64], mu: f64) -> f64 {
        self.loss(x, mu, false)
    }

    fn params(&self) -> SmoothingParams {
        SmoothingParams::default()
    }
}

/// Seeds for the teacher network, the samples and the solver, all derived
/// from one user seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NnSeeds {
    pub teacher: u64,
    pub samples: u64,
    pub solver: u64,
}

impl NnSeeds {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            teacher: trial_seed(seed, 0),
            samples: trial_seed(seed, 1),
            solver: trial_seed(seed, 2),
        }
    }
}

/// `N = 200`, `β = 1e20`, `γ = 0.01`, `ζ = 0.1`, `μ_k = e^{−0.1k}`,
/// step-and-slope stopping at `1e-6`, at most 2000 iterations, particles
/// initialized on `[−1, 1]^P`.
pub fn nn_default_config(shape: &MlpShape, seed: u64) -> SicboConfig {
    let p = shape.param_count();
    SicboConfig::new(200, 1e20, SearchBox::cube(p, -1.0, 1.0).expect("positive dimension"))
        .with_schedule(MuSchedule::exponential(0.1, 1.0).expect("static schedule"))
        .with_stop(StopRule::StepNormAndSlope { eps1: 1e-6, eps2: 1e-6 })
        .with_max_iter(2000)
        .with_seed(seed)
}

/// Particle-averaged errors of one iterate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnTracePoint {
    pub iteration: u64,
    pub err_train: f64,
    pub err_test: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NnTrainResult {
    pub report: RunReport,
    /// Training error of the final consensus point.
    pub err_train: f64,
    /// Test error of the final consensus point; absent without test rows.
    pub err_test: Option<f64>,
    pub trace: Vec<NnTracePoint>,
}

fn particle_average(obj: &MlpObjective, ens: &ParticleEnsemble, test: bool) -> f64 {
    use rayon::prelude::*;
    let sum: f64 = ens
        .positions()
        .par_chunks_exact(ens.dim())
        .map(|x| obj.loss(x, 0.0, test))
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    sum / ens.n() as f64
}

/// Trains on the training split and reports exact-ReLU errors at the final
/// consensus point, plus particle-averaged errors at every iterate.
pub fn train_with_sicbo(
    shape: &MlpShape,
    dataset: &SyntheticDataset,
    config: &SicboConfig,
) -> Result<NnTrainResult> {
    let objective = MlpObjective::new(shape.clone(), Arc::new(dataset.clone()))?;
    if config.dim() != shape.param_count() {
        return Err(Error::input(format!(
            "search box has dimension {}, network has {} parameters",
            config.dim(),
            shape.param_count()
        )));
    }
    let has_test = dataset.n_test() > 0;
    let mut trace = Vec::new();
    let report = run_with_observer(config, &objective, |ens| {
        trace.push(NnTracePoint {
            iteration: ens.iteration,
            err_train: particle_average(&objective, ens, false),
            err_test: has_test.then(|| particle_average(&objective, ens, true)),
        });
    })?;
    let best = &report.consensus_point;
    check_len(best, shape)?;
    Ok(NnTrainResult {
        err_train: objective.loss(best, 0.0, false),
        err_test: has_test.then(|| objective.loss(best, 0.0, true)),
        report,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{generate_dataset_with, DatasetOptions};

    #[test]
    fn default_config_matches_example_settings() {
        let c = nn_default_config(&MlpShape::reference(), 3);
        assert_eq!(c.n_particles, 200);
        assert_eq!(c.beta, 1e20);
        assert_eq!(c.dim(), 291);
        assert_eq!(c.stop, StopRule::StepNormAndSlope { eps1: 1e-6, eps2: 1e-6 });
        assert!(c.schedule.mu_at(10) < c.schedule.mu_at(0));
        c.validate().unwrap();
    }

    #[test]
    fn short_training_run_reports_errors() {
        let shape = MlpShape::new(vec![2, 3, 1]).unwrap();
        let ds = generate_dataset_with(&shape, 1, 2, &DatasetOptions::default()).unwrap();
        let cfg = nn_default_config(&shape, 0).with_max_iter(30);
        let cfg = SicboConfig { n_particles: 30, ..cfg };
        let r = train_with_sicbo(&shape, &ds, &cfg).unwrap();
        assert_eq!(r.trace.len() as u64, r.report.iterations + 1);
        assert!(r.err_train >= 0.0);
        assert!(r.err_test.is_some());
        assert_eq!(r.trace[0].iteration, 0);
    }

    #[test]
    fn empty_test_split_is_absent() {
        let shape = MlpShape::new(vec![2, 1]).unwrap();
        let opts = DatasetOptions {
            n_train: 10,
            n_test: 0,
            noise_scale: 0.05,
        };
        let ds = generate_dataset_with(&shape, 1, 2, &opts).unwrap();
        let cfg = SicboConfig {
            n_particles: 10,
            ..nn_default_config(&shape, 0).with_max_iter(5)
        };
        let r = train_with_sicbo(&shape, &ds, &cfg).unwrap();
        assert_eq!(r.err_test, None);
        assert!(r.trace.iter().all(|t| t.err_test.is_none()));
    }
}
