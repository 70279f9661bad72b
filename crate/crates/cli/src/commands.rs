use std::fs;
use std::path::{Path, PathBuf};

use sicbo::diagnostics::{max_distance, optimality_gap};
use sicbo::nn::{generate_dataset_with, train_with_sicbo, write_dataset_csv};
use sicbo::testbed::run_success_experiment;
use sicbo::{run, Result};

use crate::config::{resolve_bench, resolve_nn, resolve_run, Section};
use crate::io::{to_json, write_bench_csv, write_trace_csv, BenchRow, NnSummaryFile, RunReportFile, FORMAT_VERSION};

pub const RUN_REPORT: &str = "run_report.json";
pub const BENCH_CSV: &str = "bench.csv";
pub const NN_TRACE: &str = "nn_trace.csv";
pub const NN_SUMMARY: &str = "nn_summary.json";
pub const NN_DATASET: &str = "nn_dataset.csv";

fn prepare(out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    Ok(())
}

/// Runs once and writes `run_report.json`.
pub fn cmd_run(section: &Section, out: &Path) -> Result<RunReportFile> {
    let plan = resolve_run(section)?;
    prepare(out)?;
    let report = run(&plan.config, plan.problem.objective.as_ref())?;
    let gap = optimality_gap(&report, &plan.problem, plan.convention);
    let dist = max_distance(&report.final_ensemble, &plan.problem.minimizer);
    let file = RunReportFile {
        version: FORMAT_VERSION,
        problem: plan.problem.id,
        dim: plan.problem.dim,
        minimizer: plan.problem.minimizer.clone(),
        min_value: plan.problem.min_value,
        success_threshold: plan.problem.success_threshold,
        convention: plan.convention,
        sol_err: gap.sol_err,
        fun_err: gap.fun_err,
        max_distance: dist,
        success: dist < plan.problem.success_threshold,
        report,
    };
    fs::write(out.join(RUN_REPORT), to_json(&file)?)?;
    Ok(file)
}

/// Runs every grid cell and writes `bench.csv` in `(function, N, β)` order.
pub fn cmd_bench(section: &Section, out: &Path) -> Result<Vec<BenchRow>> {
    let plan = resolve_bench(section)?;
    prepare(out)?;
    let mut rows = Vec::with_capacity(plan.cells.len());
    for cell in &plan.cells {
        let (problem, config) = plan.cell_setup(cell)?;
        let summary = run_success_experiment(&problem, &config, plan.n_trials, plan.base_seed, plan.convention)?;
        eprintln!(
            "{} N={} beta={:e}: suc_rat={:.2} sol_err={:.3e} fun_err={:.3e}",
            cell.function, cell.n, cell.beta, summary.suc_rat, summary.mean_sol_err, summary.mean_fun_err
        );
        rows.push(BenchRow {
            n: cell.n,
            beta: cell.beta,
            summary,
        });
    }
    write_bench_csv(&rows, fs::File::create(out.join(BENCH_CSV))?)?;
    Ok(rows)
}

/// Generates the teacher data, trains, and writes the trace, the summary
/// and the dataset itself.
pub fn cmd_nn(section: &Section, out: &Path) -> Result<NnSummaryFile> {
    let plan = resolve_nn(section)?;
    prepare(out)?;
    let data = generate_dataset_with(&plan.shape, plan.seeds.teacher, plan.seeds.samples, &plan.dataset)?;
    write_dataset_csv(&data, fs::File::create(out.join(NN_DATASET))?)?;
    let result = train_with_sicbo(&plan.shape, &data, &plan.config)?;
    write_trace_csv(&result.trace, fs::File::create(out.join(NN_TRACE))?)?;
    let summary = NnSummaryFile {
        version: FORMAT_VERSION,
        seed: plan.seed,
        seeds: plan.seeds,
        shape: plan.shape,
        n_train: plan.dataset.n_train,
        n_test: plan.dataset.n_test,
        noise_scale: plan.dataset.noise_scale,
        config: plan.config,
        iterations: result.report.iterations,
        termination: result.report.termination,
        err_train: result.err_train,
        err_test: result.err_test,
    };
    fs::write(out.join(NN_SUMMARY), to_json(&summary)?)?;
    Ok(summary)
}

/// Paths written by each command, relative to the output directory.
pub fn outputs(command: &str, out: &Path) -> Vec<PathBuf> {
    let names: &[&str] = match command {
        "run" => &[RUN_REPORT],
        "bench" => &[BENCH_CSV],
        "nn" => &[NN_DATASET, NN_TRACE, NN_SUMMARY],
        _ => &[],
    };
    names.iter().map(|n| out.join(n)).collect()
}
