use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::search_box::SearchBox;
use crate::smoothing::MuSchedule;

/// Termination tests evaluated between consecutive iterates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum StopRule {
    /// Stop once `K` iterations have been taken.
    MaxIterOnly { k: u64 },
    /// `max_i ‖x^{i,k+1} − x^{i,k}‖ ≤ eps`
    StepNorm { eps: f64 },
    /// Step test with `eps1` and slope test
    /// `max_i |f(x^{i,k+1}) − f(x^{i,k})| / ‖x^{i,k+1} − x^{i,k}‖ ≤ eps2`.
    StepNormAndSlope { eps1: f64, eps2: f64 },
    /// `max_i |f(x^{i,k+1}) − f(x^{i,k})| ≤ eps`
    FunChange { eps: f64 },
}

impl StopRule {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        let valid = match *self {
            StopRule::MaxIterOnly { k } => k > 0,
            StopRule::StepNorm { eps } | StopRule::FunChange { eps } => ok(eps),
            StopRule::StepNormAndSlope { eps1, eps2 } => ok(eps1) && ok(eps2),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::param(format!("stop rule tolerances must be positive: {self:?}")))
        }
    }
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule::StepNormAndSlope {
            eps1: 1e-10,
            eps2: 1e-10,
        }
    }
}

/// Whether `(1 − γ)² + ζ² < 1`, the sufficient condition for consensus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsensusCondition {
    pub satisfied: bool,
    pub contraction: f64,
}

pub fn check_consensus_condition(gamma: f64, zeta: f64) -> ConsensusCondition {
    let contraction = (1.0 - gamma).powi(2) + zeta * zeta;
    ConsensusCondition {
        satisfied: contraction < 1.0,
        contraction,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SicboConfig {
    pub n_particles: usize,
    pub beta: f64,
    pub gamma: f64,
    pub zeta: f64,
    pub schedule: MuSchedule,
    pub stop: StopRule,
    pub max_iter: u64,
    pub seed: u64,
    pub init_box: SearchBox,
}

impl SicboConfig {
    /// Defaults used throughout the benchmark experiments: `γ = 0.01`,
    /// `ζ = 0.1`, `μ_k = 1/(1+k)²`, step-and-slope stopping at `1e-10`.
    pub fn new(n_particles: usize, beta: f64, init_box: SearchBox) -> Self {
        Self {
            n_particles,
            beta,
            gamma: 0.01,
            zeta: 0.1,
            schedule: MuSchedule::inverse_power(2.0, 1.0).expect("static schedule"),
            stop: StopRule::default(),
            max_iter: 20_000,
            seed: 0,
            init_box,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_gamma_zeta(mut self, gamma: f64, zeta: f64) -> Self {
        self.gamma = gamma;
        self.zeta = zeta;
        self
    }

    pub fn with_schedule(mut self, schedule: MuSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    pub fn with_stop(mut self, stop: StopRule) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_max_iter(mut self, max_iter: u64) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn dim(&self) -> usize {
        self.init_box.dim()
    }

    pub fn consensus_condition(&self) -> ConsensusCondition {
        check_consensus_condition(self.gamma, self.zeta)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_particles < 2 {
            return Err(Error::param(format!(
                "need at least 2 particles, got {}",
                self.n_particles
            )));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::param(format!("beta must be positive and finite, got {}", self.beta)));
        }
        if !self.gamma.is_finite() {
            return Err(Error::param("gamma must be finite"));
        }
        if !(self.zeta >= 0.0 && self.zeta.is_finite()) {
            return Err(Error::param(format!("zeta must be nonnegative, got {}", self.zeta)));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter must be positive"));
        }
        // re-run the constructor checks: deserialized schedules bypass them
        MuSchedule::new(self.schedule.kind, self.schedule.mu0)?;
        SearchBox::new(self.init_box.lower.clone(), self.init_box.upper.clone())?;
        self.stop.validate()
    }
}
