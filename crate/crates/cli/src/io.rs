//! On-disk formats written by the commands.

use std::io::Write;

use serde::{Deserialize, Serialize};
use sicbo::diagnostics::SolErrConvention;
use sicbo::nn::{MlpShape, NnSeeds, NnTracePoint};
use sicbo::solver::Termination;
use sicbo::testbed::{ExperimentSummary, ProblemId};
use sicbo::{Error, Result, RunReport, SicboConfig};

/// Bumped whenever a JSON layout changes incompatibly.
pub const FORMAT_VERSION: u32 = 1;

/// `run_report.json`: a single run together with its scoring.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReportFile {
    pub version: u32,
    pub problem: ProblemId,
    pub dim: usize,
    pub minimizer: Vec<f64>,
    pub min_value: f64,
    pub success_threshold: f64,
    pub convention: SolErrConvention,
    pub sol_err: f64,
    pub fun_err: f64,
    pub max_distance: f64,
    pub success: bool,
    pub report: RunReport,
}

/// `nn_summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NnSummaryFile {
    pub version: u32,
    pub seed: u64,
    pub seeds: NnSeeds,
    pub shape: MlpShape,
    pub n_train: usize,
    pub n_test: usize,
    pub noise_scale: f64,
    pub config: SicboConfig,
    pub iterations: u64,
    pub termination: Termination,
    pub err_train: f64,
    pub err_test: Option<f64>,
}

fn check_version(found: u32) -> Result<()> {
    if found != FORMAT_VERSION {
        return Err(Error::input(format!(
            "unsupported format version {found}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

pub fn parse_report_json(text: &str) -> Result<RunReportFile> {
    let file: RunReportFile = serde_json::from_str(text)?;
    check_version(file.version)?;
    if file.minimizer.len() != file.dim || file.report.consensus_point.len() != file.dim {
        return Err(Error::input("report dimensions are inconsistent"));
    }
    Ok(file)
}

pub fn parse_nn_summary_json(text: &str) -> Result<NnSummaryFile> {
    let file: NnSummaryFile = serde_json::from_str(text)?;
    check_version(file.version)?;
    Ok(file)
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub const BENCH_HEADER: [&str; 8] = [
    "function", "N", "beta", "suc_rat", "sol_err", "fun_err", "n_trials", "base_seed",
];

/// One summary row per grid cell.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub n: usize,
    pub beta: f64,
    pub summary: ExperimentSummary,
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(BENCH_HEADER)?;
    for r in rows {
        let s = &r.summary;
        w.write_record([
            s.problem.as_str().to_string(),
            r.n.to_string(),
            format!("{:e}", r.beta),
            format!("{:?}", s.suc_rat),
            format!("{:?}", s.mean_sol_err),
            format!("{:?}", s.mean_fun_err),
            s.n_trials.to_string(),
            s.base_seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub const TRACE_HEADER: [&str; 3] = ["iteration", "err_train", "err_test"];

/// `err_test` is left empty when there are no test rows.
pub fn write_trace_csv<W: Write>(trace: &[NnTracePoint], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for p in trace {
        w.write_record([
            p.iteration.to_string(),
            format!("{:?}", p.err_train),
            p.err_test.map(|v| format!("{v:?}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
