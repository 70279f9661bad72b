//! Experiment manifests: a TOML file with `[run]`, `[bench]` and `[nn]`
//! sections of flat keys. Command-line flags are parsed into the same
//! [`Section`] shape and laid over the file values.

use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sicbo::diagnostics::SolErrConvention;
use sicbo::nn::{nn_default_config, DatasetOptions, MlpShape, NnSeeds};
use sicbo::smoothing::{MuSchedule, ScheduleKind};
use sicbo::testbed::{example2_objective_with, BenchmarkProblem, ProblemId};
use sicbo::{Error, Result, SearchBox, SicboConfig, StopRule};

const SECTIONS: [&str; 3] = ["run", "bench", "nn"];

/// Every key a section may hold. Keys that do not apply to a subcommand are
/// ignored by it.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Section {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<u64>,
    /// `inverse_power` or `exponential`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub schedule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    /// `max_iter_only`, `step_norm`, `step_norm_and_slope` or `fun_change`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_lo: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_hi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// `norm` or `squared_norm`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sol_err: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sample_std: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_trials: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub functions: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_values: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_values: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub full_grid: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub widths: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_train: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_test: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_scale: Option<f64>,
}

impl Section {
    /// Values of `top` replace those of `self` where present.
    pub fn overlay(&self, top: &Section) -> Result<Section> {
        let mut base = serde_json::to_value(self)?;
        let top = serde_json::to_value(top)?;
        if let (Some(b), Some(t)) = (base.as_object_mut(), top.as_object()) {
            for (k, v) in t {
                b.insert(k.clone(), v.clone());
            }
        }
        Ok(serde_json::from_value(base)?)
    }
}

/// A parsed manifest.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub run: Section,
    #[serde(default)]
    pub bench: Section,
    #[serde(default)]
    pub nn: Section,
}

fn parse_section(name: &str, value: &toml::Value) -> Result<Section> {
    let table = value
        .as_table()
        .ok_or_else(|| Error::config(name, "expected a table of keys"))?;
    // Deserialize key by key first so that an error names its key.
    for (key, v) in table {
        let mut single = toml::Table::new();
        single.insert(key.clone(), v.clone());
        Section::deserialize(toml::Value::Table(single)).map_err(|e| {
            let msg = e.message().to_string();
            let msg = if msg.starts_with("unknown field") { "unknown key".to_string() } else { msg };
            Error::config(format!("{name}.{key}"), msg)
        })?;
    }
    Section::deserialize(value.clone()).map_err(|e| Error::config(name, e.message().to_string()))
}

/// Parses manifest text. Errors carry the dotted key that caused them.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let root: toml::Table = text.parse().map_err(|e: toml::de::Error| {
        Error::config("<syntax>", e.message().trim().to_string())
    })?;
    let mut cfg = ExperimentConfig::default();
    for (name, value) in &root {
        let section = parse_section(name, value);
        match name.as_str() {
            "run" => cfg.run = section?,
            "bench" => cfg.bench = section?,
            "nn" => cfg.nn = section?,
            _ => {
                return Err(Error::config(
                    name.clone(),
                    format!("unknown section (expected one of {SECTIONS:?})"),
                ))
            }
        }
    }
    Ok(cfg)
}

/// Splits a comma-separated list such as `50,100,200` or `1e8, 1e12`.
/// Surrounding brackets and blank entries are ignored, so `[]` and the
/// empty string give an empty list.
pub fn parse_grid_list<T: FromStr>(text: &str) -> Result<Vec<T>> {
    let inner = text.trim();
    let inner = inner
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .unwrap_or(inner);
    inner
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|_| Error::input(format!("'{s}' is not a valid list entry")))
        })
        .collect()
}

fn convention(s: &Section, default: SolErrConvention) -> Result<SolErrConvention> {
    match s.sol_err.as_deref() {
        None => Ok(default),
        Some("norm") => Ok(SolErrConvention::Norm),
        Some("squared_norm") => Ok(SolErrConvention::SquaredNorm),
        Some(other) => Err(Error::config("sol_err", format!("'{other}' is not norm or squared_norm"))),
    }
}

/// Defaults that differ between experiment families.
struct SolverDefaults {
    n: usize,
    beta: f64,
    init_box: SearchBox,
    schedule: MuSchedule,
    eps: f64,
    max_iter: u64,
}

fn solver_config(s: &Section, d: SolverDefaults) -> Result<SicboConfig> {
    let init_box = match (s.box_lo, s.box_hi) {
        (None, None) => d.init_box,
        (lo, hi) => {
            let lo = lo.unwrap_or(d.init_box.lower[0]);
            let hi = hi.unwrap_or(d.init_box.upper[0]);
            SearchBox::cube(d.init_box.dim(), lo, hi).map_err(|e| Error::config("box_lo", e.to_string()))?
        }
    };
    let mu0 = s.mu0.unwrap_or(d.schedule.mu0);
    let schedule = match s.schedule.as_deref() {
        None => match d.schedule.kind {
            ScheduleKind::InversePower { exponent } => {
                MuSchedule::inverse_power(s.exponent.unwrap_or(exponent), mu0)
            }
            ScheduleKind::Exponential { rate } => MuSchedule::exponential(s.rate.unwrap_or(rate), mu0),
        },
        Some("inverse_power") => MuSchedule::inverse_power(s.exponent.unwrap_or(2.0), mu0),
        Some("exponential") => MuSchedule::exponential(s.rate.unwrap_or(0.1), mu0),
        Some(other) => {
            return Err(Error::config(
                "schedule",
                format!("'{other}' is not inverse_power or exponential"),
            ))
        }
    }
    .map_err(|e| Error::config("schedule", e.to_string()))?;
    let max_iter = s.max_iter.unwrap_or(d.max_iter);
    let eps = |v: Option<f64>| v.unwrap_or(d.eps);
    let stop = match s.stop.as_deref().unwrap_or("step_norm_and_slope") {
        "max_iter_only" => StopRule::MaxIterOnly { k: max_iter },
        "step_norm" => StopRule::StepNorm { eps: eps(s.eps) },
        "fun_change" => StopRule::FunChange { eps: eps(s.eps) },
        "step_norm_and_slope" => StopRule::StepNormAndSlope {
            eps1: eps(s.eps1),
            eps2: eps(s.eps2),
        },
        other => return Err(Error::config("stop", format!("'{other}' is not a known stop rule"))),
    };
    let mut c = SicboConfig::new(s.n.unwrap_or(d.n), s.beta.unwrap_or(d.beta), init_box)
        .with_schedule(schedule)
        .with_stop(stop)
        .with_max_iter(max_iter)
        .with_seed(s.seed.unwrap_or(0));
    c.gamma = s.gamma.unwrap_or(c.gamma);
    c.zeta = s.zeta.unwrap_or(c.zeta);
    c.validate().map_err(|e| Error::config("solver", e.to_string()))?;
    Ok(c)
}

fn default_schedule() -> MuSchedule {
    MuSchedule::inverse_power(2.0, 1.0).expect("static schedule")
}

/// A fully resolved single run.
#[derive(Clone, Debug)]
pub struct RunPlan {
    pub problem: BenchmarkProblem,
    pub config: SicboConfig,
    pub convention: SolErrConvention,
}

fn problem_id(s: &Section) -> Result<ProblemId> {
    let name = s
        .problem
        .as_deref()
        .ok_or_else(|| Error::config("problem", "a problem selector is required"))?;
    name.parse().map_err(|e: Error| Error::config("problem", e.to_string()))
}

fn build_problem(id: ProblemId, s: &Section) -> Result<BenchmarkProblem> {
    let mut p = match id {
        ProblemId::Example2Landscape => example2_objective_with(
            s.n_samples.unwrap_or(10_000),
            s.noise_seed.unwrap_or(0),
            s.sample_std.unwrap_or(0.1_f64.sqrt()),
        ),
        ProblemId::Example1Rastrigin => BenchmarkProblem::example1(s.dim.unwrap_or(4)),
        _ => BenchmarkProblem::benchmark(id, s.dim.unwrap_or(3)),
    }
    .map_err(|e| Error::config("problem", e.to_string()))?;
    if let Some(t) = s.threshold {
        if t.is_nan() || t <= 0.0 {
            return Err(Error::config("threshold", "must be positive"));
        }
        p.success_threshold = t;
    }
    Ok(p)
}

/// Resolves the `[run]` section. Defaults follow the selected problem:
/// `example1` uses `N = 100`, `β = 100`; `example2` uses `N = 100`,
/// `β = 50`; `f1..f8` use `N = 200`, `β = 1e15` in three dimensions.
pub fn resolve_run(s: &Section) -> Result<RunPlan> {
    let id = problem_id(s)?;
    let problem = build_problem(id, s)?;
    let (n, beta, conv) = match id {
        ProblemId::Example1Rastrigin => (100, 100.0, SolErrConvention::Norm),
        ProblemId::Example2Landscape => (100, 50.0, SolErrConvention::Norm),
        _ => (200, 1e15, SolErrConvention::SquaredNorm),
    };
    let config = solver_config(
        s,
        SolverDefaults {
            n,
            beta,
            init_box: problem.init_box.clone(),
            schedule: default_schedule(),
            eps: 1e-10,
            max_iter: 20_000,
        },
    )?;
    Ok(RunPlan {
        convention: convention(s, conv)?,
        problem,
        config,
    })
}

/// One `(function, N, β)` cell of a benchmark grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchCell {
    pub function: ProblemId,
    pub n: usize,
    pub beta: f64,
}

#[derive(Clone, Debug)]
pub struct BenchPlan {
    pub cells: Vec<BenchCell>,
    pub dim: usize,
    pub n_trials: usize,
    pub base_seed: u64,
    pub convention: SolErrConvention,
    section: Section,
}

impl BenchPlan {
    /// Problem and solver settings of one cell.
    pub fn cell_setup(&self, cell: &BenchCell) -> Result<(BenchmarkProblem, SicboConfig)> {
        let problem = build_problem(cell.function, &self.section)?;
        let mut s = self.section.clone();
        s.n = Some(cell.n);
        s.beta = Some(cell.beta);
        let config = solver_config(
            &s,
            SolverDefaults {
                n: cell.n,
                beta: cell.beta,
                init_box: problem.init_box.clone(),
                schedule: default_schedule(),
                eps: 1e-10,
                max_iter: 20_000,
            },
        )?;
        Ok((problem, config))
    }
}

/// Cells of the full reference grid: `β = 1e15` with `N ∈ {50, 100, 200,
/// 400}`, and `N = 200` with `β ∈ {1e8, 1e12, 1e16, 1e20}`, for `f1..f8`.
pub fn full_grid() -> Vec<BenchCell> {
    let mut cells = Vec::new();
    for function in ProblemId::BENCHMARKS {
        for n in [50, 100, 200, 400] {
            cells.push(BenchCell { function, n, beta: 1e15 });
        }
        for beta in [1e8, 1e12, 1e16, 1e20] {
            cells.push(BenchCell { function, n: 200, beta });
        }
    }
    sort_cells(&mut cells);
    cells
}

fn sort_cells(cells: &mut [BenchCell]) {
    cells.sort_by(|a, b| {
        (a.function, a.n)
            .cmp(&(b.function, b.n))
            .then(a.beta.total_cmp(&b.beta))
    });
}

/// Resolves the `[bench]` section. Without explicit lists this is `f1` and
/// `f4` at `(N, β) ∈ {(400, 1e15), (200, 1e20)}` with 20 trials each.
pub fn resolve_bench(s: &Section) -> Result<BenchPlan> {
    let full = s.full_grid.unwrap_or(false);
    let functions: Vec<ProblemId> = match &s.functions {
        Some(list) => list
            .iter()
            .map(|f| f.parse().map_err(|e: Error| Error::config("functions", e.to_string())))
            .collect::<Result<_>>()?,
        None if full => ProblemId::BENCHMARKS.to_vec(),
        None => vec![ProblemId::F1, ProblemId::F4],
    };
    if let Some(bad) = functions.iter().find(|f| !ProblemId::BENCHMARKS.contains(f)) {
        return Err(Error::config("functions", format!("{bad} is not one of f1..f8")));
    }
    let pairs: Vec<(usize, f64)> = if full && s.n_values.is_none() && s.beta_values.is_none() {
        let mut v: Vec<(usize, f64)> = [50, 100, 200, 400].iter().map(|&n| (n, 1e15)).collect();
        v.extend([1e8, 1e12, 1e16, 1e20].iter().map(|&b| (200, b)));
        v
    } else if s.n_values.is_some() || s.beta_values.is_some() {
        let ns = s.n_values.clone().unwrap_or_else(|| vec![200]);
        let bs = s.beta_values.clone().unwrap_or_else(|| vec![1e15]);
        ns.iter().flat_map(|&n| bs.iter().map(move |&b| (n, b))).collect()
    } else {
        vec![(400, 1e15), (200, 1e20)]
    };
    let mut cells: Vec<BenchCell> = functions
        .iter()
        .flat_map(|&function| pairs.iter().map(move |&(n, beta)| BenchCell { function, n, beta }))
        .collect();
    sort_cells(&mut cells);
    cells.dedup();
    let n_trials = s.n_trials.unwrap_or(if full { 100 } else { 20 });
    if n_trials == 0 {
        return Err(Error::config("n_trials", "must be at least 1"));
    }
    Ok(BenchPlan {
        cells,
        dim: s.dim.unwrap_or(3),
        n_trials,
        base_seed: s.base_seed.or(s.seed).unwrap_or(0),
        convention: convention(s, SolErrConvention::SquaredNorm)?,
        section: s.clone(),
    })
}

#[derive(Clone, Debug)]
pub struct NnPlan {
    pub shape: MlpShape,
    pub dataset: DatasetOptions,
    pub seed: u64,
    pub seeds: NnSeeds,
    pub config: SicboConfig,
}

/// Resolves the `[nn]` section: a `[5, 10, 10, 10, 1]` network, 80/20
/// rows, `N = 200`, `β = 1e20`, `μ_k = e^{−0.1k}` and `1e-6` stopping.
pub fn resolve_nn(s: &Section) -> Result<NnPlan> {
    let shape = match &s.widths {
        Some(w) => MlpShape::new(w.clone()).map_err(|e| Error::config("widths", e.to_string()))?,
        None => MlpShape::reference(),
    };
    let seed = s.seed.unwrap_or(0);
    let seeds = NnSeeds::from_seed(seed);
    let base = nn_default_config(&shape, seeds.solver);
    let mut cfg = solver_config(
        s,
        SolverDefaults {
            n: base.n_particles,
            beta: base.beta,
            init_box: base.init_box.clone(),
            schedule: base.schedule,
            eps: 1e-6,
            max_iter: base.max_iter,
        },
    )?;
    cfg.seed = seeds.solver;
    let defaults = DatasetOptions::default();
    let dataset = DatasetOptions {
        n_train: s.n_train.unwrap_or(defaults.n_train),
        n_test: s.n_test.unwrap_or(defaults.n_test),
        noise_scale: s.noise_scale.unwrap_or(defaults.noise_scale),
    };
    if dataset.n_train == 0 {
        return Err(Error::config("n_train", "must be at least 1"));
    }
    Ok(NnPlan {
        shape,
        dataset,
        seed,
        seeds,
        config: cfg,
    })
}
