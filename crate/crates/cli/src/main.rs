use std::path::PathBuf;
use std::process::ExitCode;

use clap::{error::ErrorKind, Args, CommandFactory, Parser, Subcommand};
use sicbo::Result;
use sicbo_cli::commands::{cmd_bench, cmd_nn, cmd_run, outputs};
use sicbo_cli::{parse_config, parse_grid_list, with_workers, ExperimentConfig, Section};

/// Consensus-based global minimization with smoothing.
#[derive(Parser, Debug)]
#[command(name = "sicbo", version)]
struct Cli {
    /// TOML manifest with [run], [bench] and [nn] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// One seeded run on a test problem; writes run_report.json.
    Run(Flags),
    /// Success-rate grid over f1..f8; writes bench.csv.
    Bench(Flags),
    /// Trains the teacher-student network; writes nn_trace.csv and nn_summary.json.
    Nn(Flags),
}

#[derive(Args, Debug, Default)]
struct Flags {
    /// f1..f8, example1 or example2.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    /// Number of particles.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iter: Option<u64>,
    /// inverse_power or exponential.
    #[arg(long)]
    schedule: Option<String>,
    #[arg(long)]
    mu0: Option<f64>,
    /// max_iter_only, step_norm, step_norm_and_slope or fun_change.
    #[arg(long)]
    stop: Option<String>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    eps1: Option<f64>,
    #[arg(long)]
    eps2: Option<f64>,
    /// norm or squared_norm.
    #[arg(long)]
    sol_err: Option<String>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    n_trials: Option<usize>,
    #[arg(long)]
    base_seed: Option<u64>,
    /// Comma-separated, e.g. `f1,f4`.
    #[arg(long)]
    functions: Option<String>,
    /// Comma-separated particle counts.
    #[arg(long)]
    n_values: Option<String>,
    /// Comma-separated β values.
    #[arg(long)]
    beta_values: Option<String>,
    /// Every (function, N, β) cell of the reference grid with 100 trials.
    #[arg(long)]
    full_grid: bool,
    /// Layer widths, e.g. `5,10,10,10,1`.
    #[arg(long)]
    widths: Option<String>,
}

impl Flags {
    fn to_section(&self) -> Result<Section> {
        Ok(Section {
            problem: self.problem.clone(),
            dim: self.dim,
            n: self.n,
            beta: self.beta,
            gamma: self.gamma,
            zeta: self.zeta,
            seed: self.seed,
            max_iter: self.max_iter,
            schedule: self.schedule.clone(),
            mu0: self.mu0,
            stop: self.stop.clone(),
            eps: self.eps,
            eps1: self.eps1,
            eps2: self.eps2,
            sol_err: self.sol_err.clone(),
            threshold: self.threshold,
            n_trials: self.n_trials,
            base_seed: self.base_seed,
            functions: self.functions.as_deref().map(parse_grid_list).transpose()?,
            n_values: self.n_values.as_deref().map(parse_grid_list).transpose()?,
            beta_values: self.beta_values.as_deref().map(parse_grid_list).transpose()?,
            full_grid: self.full_grid.then_some(true),
            widths: self.widths.as_deref().map(parse_grid_list).transpose()?,
            ..Section::default()
        })
    }
}

fn load(path: Option<&PathBuf>) -> Result<ExperimentConfig> {
    match path {
        None => Ok(ExperimentConfig::default()),
        Some(p) => parse_config(&std::fs::read_to_string(p)?),
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let file = load(cli.config.as_ref())?;
    let (name, base, flags) = match &cli.command {
        Command::Run(f) => ("run", &file.run, f),
        Command::Bench(f) => ("bench", &file.bench, f),
        Command::Nn(f) => ("nn", &file.nn, f),
    };
    let section = base.overlay(&flags.to_section()?)?;
    if name == "run" && section.problem.is_none() {
        Cli::command()
            .error(
                ErrorKind::MissingRequiredArgument,
                "a problem is required: pass --problem or set run.problem in the config",
            )
            .exit();
    }
    with_workers(cli.workers, || match name {
        "run" => {
            let r = cmd_run(&section, &cli.out)?;
            eprintln!(
                "{}: {} iterations, max distance {:.3e}, success {}",
                r.problem, r.report.iterations, r.max_distance, r.success
            );
            Ok(())
        }
        "bench" => cmd_bench(&section, &cli.out).map(drop),
        _ => {
            let s = cmd_nn(&section, &cli.out)?;
            eprintln!(
                "{} iterations, err_train {:.4e}, err_test {}",
                s.iterations,
                s.err_train,
                s.err_test.map_or("-".to_string(), |v| format!("{v:.4e}"))
            );
            Ok(())
        }
    })??;
    for p in outputs(name, &cli.out) {
        eprintln!("wrote {}", p.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
