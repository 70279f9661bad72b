//! Benchmark problems, the stochastic subgradient baseline and the
//! success-rate experiment harness.

mod experiment;
mod functions;
mod landscape;

pub use experiment::{
    config_digest, run_ssd_experiment, run_success_experiment, splitmix64, trial_seed,
    ExperimentSummary, TrialOutcome,
};
pub use functions::{eval_benchmark, eval_benchmark_smoothed, TestFunction};
pub use landscape::{
    draw_batch, example2_objective, example2_objective_with, ssd_run, ssd_step, ssd_subgradient,
    SampledLandscape, SsdOptions, EXAMPLE2_GRID_STEP,
};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search_box::SearchBox;
use crate::smoothing::SmoothedObjective;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ProblemId {
    F1,
    F2,
    F3,
    F4,
    F5,
    F6,
    F7,
    F8,
    /// The Rastrigin-type function `f1` on `[−5, 5]^d`.
    Example1Rastrigin,
    /// Empirical average of a sampled one-dimensional landscape.
    Example2Landscape,
}

impl ProblemId {
    pub const BENCHMARKS: [ProblemId; 8] = [
        ProblemId::F1,
        ProblemId::F2,
        ProblemId::F3,
        ProblemId::F4,
        ProblemId::F5,
        ProblemId::F6,
        ProblemId::F7,
        ProblemId::F8,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProblemId::F1 => "f1",
            ProblemId::F2 => "f2",
            ProblemId::F3 => "f3",
            ProblemId::F4 => "f4",
            ProblemId::F5 => "f5",
            ProblemId::F6 => "f6",
            ProblemId::F7 => "f7",
            ProblemId::F8 => "f8",
            ProblemId::Example1Rastrigin => "example1",
            ProblemId::Example2Landscape => "example2",
        }
    }
}

impl fmt::Display for ProblemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProblemId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_lowercase();
        Self::BENCHMARKS
            .into_iter()
            .chain([ProblemId::Example1Rastrigin, ProblemId::Example2Landscape])
            .find(|id| id.as_str() == t)
            .ok_or_else(|| Error::input(format!("unknown problem '{s}' (expected f1..f8, example1 or example2)")))
    }
}

impl From<ProblemId> for String {
    fn from(id: ProblemId) -> String {
        id.as_str().to_string()
    }
}

impl TryFrom<String> for ProblemId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// A minimization problem with its known solution and success criterion.
#[derive(Clone)]
pub struct BenchmarkProblem {
    pub id: ProblemId,
    pub dim: usize,
    pub objective: Arc<dyn SmoothedObjective>,
    pub minimizer: Vec<f64>,
    pub min_value: f64,
    pub init_box: SearchBox,
    /// A run succeeds when every final particle is closer than this to
    /// `minimizer`.
    pub success_threshold: f64,
    /// Sample data behind data-driven objectives, used by the subgradient
    /// baseline.
    pub landscape: Option<Arc<SampledLandscape>>,
}

impl fmt::Debug for BenchmarkProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BenchmarkProblem")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("minimizer", &self.minimizer)
            .field("min_value", &self.min_value)
            .field("init_box", &self.init_box)
            .field("success_threshold", &self.success_threshold)
            .finish_non_exhaustive()
    }
}

impl BenchmarkProblem {
    /// One of `f1..f8` on `[−3, 3]^dim` with success threshold `1e-2`.
    pub fn benchmark(id: ProblemId, dim: usize) -> Result<Self> {
        if !ProblemId::BENCHMARKS.contains(&id) {
            return Err(Error::input(format!("{id} is not one of f1..f8")));
        }
        Self::closed_form(id, dim, 3.0, 1e-2)
    }

    /// The Rastrigin-type problem on `[−5, 5]^dim`.
    pub fn example1(dim: usize) -> Result<Self> {
        Self::closed_form(ProblemId::Example1Rastrigin, dim, 5.0, 1e-2)
    }

    /// Closed-form problem on `[−radius, radius]^dim` with its minimizer at
    /// the origin.
    pub fn closed_form(id: ProblemId, dim: usize, radius: f64, threshold: f64) -> Result<Self> {
        if !(threshold > 0.0) {
            return Err(Error::param(format!("success threshold must be positive, got {threshold}")));
        }
        let f = TestFunction::new(id, dim, radius)?;
        Ok(Self {
            id,
            dim,
            objective: Arc::new(f),
            minimizer: vec![0.0; dim],
            min_value: 0.0,
            init_box: SearchBox::cube(dim, -radius, radius)?,
            success_threshold: threshold,
            landscape: None,
        })
    }

    /// Problem selected by id, using `dim` for the closed-form families and
    /// the default sampled landscape (10⁴ samples, `noise_seed`) otherwise.
    pub fn by_id(id: ProblemId, dim: usize, noise_seed: u64) -> Result<Self> {
        match id {
            ProblemId::Example1Rastrigin => Self::example1(dim),
            ProblemId::Example2Landscape => example2_objective(10_000, noise_seed),
            _ => Self::benchmark(id, dim),
        }
    }

    /// Raw objective value with a dimension check.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::input(format!(
                "point has dimension {}, {} expects {}",
                x.len(),
                self.id,
                self.dim
            )));
        }
        Ok(self.objective.raw(x))
    }

    /// Copy with a different success threshold.
    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.success_threshold = threshold;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in ProblemId::BENCHMARKS
            .into_iter()
            .chain([ProblemId::Example1Rastrigin, ProblemId::Example2Landscape])
        {
            assert_eq!(id.to_string().parse::<ProblemId>().unwrap(), id);
            let json = serde_json::to_string(&id).unwrap();
            assert_eq!(serde_json::from_str::<ProblemId>(&json).unwrap(), id);
        }
        assert_eq!(" F4 ".parse::<ProblemId>().unwrap(), ProblemId::F4);
        assert!("f9".parse::<ProblemId>().is_err());
    }

    #[test]
    fn minimizer_attains_min_value() {
        for id in ProblemId::BENCHMARKS {
            let p = BenchmarkProblem::benchmark(id, 3).unwrap();
            assert!((p.eval(&p.minimizer).unwrap() - p.min_value).abs() <= 1e-12);
            assert_eq!(p.init_box, SearchBox::cube(3, -3.0, 3.0).unwrap());
        }
        let p = BenchmarkProblem::example1(4).unwrap();
        assert_eq!(p.eval(&[0.0; 4]).unwrap(), 0.0);
        assert!(p.eval(&[0.0; 3]).is_err());
        assert!(BenchmarkProblem::benchmark(ProblemId::Example1Rastrigin, 3).is_err());
    }
}
