//! Acceptance runner: one PASS/FAIL line per criterion.
//!
//! Every stochastic criterion derives its trial seeds from [`BASE_SEED`]
//! with `trial_seed`. Set `SICBO_ACCEPTANCE_STRICT=1` to turn failures into
//! a nonzero exit status.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use sicbo::diagnostics::{fit_geometric_rate, pathwise_dispersion_bound, SolErrConvention};
use sicbo::nn::{generate_dataset, nn_default_config, train_with_sicbo, MlpShape, NnSeeds};
use sicbo::smoothing::spot_check_gap;
use sicbo::solver::{check_consensus_condition, SicboRng};
use sicbo::testbed::{
    example2_objective, run_ssd_experiment, run_success_experiment, trial_seed, BenchmarkProblem, ProblemId,
    SsdOptions,
};
use sicbo::{run, SicboConfig, StopRule};

const BASE_SEED: u64 = 1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

type Criterion = fn() -> Result<Outcome, String>;

fn example1_config(seed: u64) -> (BenchmarkProblem, SicboConfig) {
    let p = BenchmarkProblem::example1(4).expect("example problem");
    let cfg = SicboConfig::new(100, 100.0, p.init_box.clone())
        .with_gamma_zeta(0.01, 0.1)
        .with_schedule(common::inverse_square())
        .with_seed(seed);
    (p, cfg)
}

fn c1_invariants() -> Result<Outcome, String> {
    let mut failed = Vec::new();
    let mut total = 0;
    for (name, check) in common::invariant_suite() {
        match check {
            Ok(n) => total += n,
            Err(msg) => failed.push(format!("{name}: {msg}")),
        }
    }
    Ok(if failed.is_empty() {
        outcome(true, format!("7 invariant families, {total} cases"))
    } else {
        outcome(false, failed.join("; "))
    })
}

fn c2_dispersion_bound() -> Result<Outcome, String> {
    let (mut violations, mut checked, mut worst) = (0, 0, 0.0_f64);
    for t in 0..20 {
        let (p, cfg) = example1_config(trial_seed(BASE_SEED, t));
        let r = run(&cfg, p.objective.as_ref()).map_err(|e| e.to_string())?;
        let b = pathwise_dispersion_bound(&r.trace, &r.trace.initial_dispersion).map_err(|e| e.to_string())?;
        violations += b.violations;
        checked += b.checked;
        worst = worst.max(b.max_relative_excess);
    }
    Ok(outcome(
        violations == 0,
        format!("{violations} violations over {checked} iterations of 20 traces, worst relative excess {worst:.2e}"),
    ))
}

fn c3_consensus_rate() -> Result<Outcome, String> {
    const RUNS: usize = 100;
    const WINDOW: u64 = 200;
    let p = BenchmarkProblem::closed_form(ProblemId::F1, 4, 5.0, 1e-2).map_err(|e| e.to_string())?;
    let mut mean = vec![0.0; WINDOW as usize];
    for t in 0..RUNS {
        let cfg = SicboConfig::new(100, 100.0, p.init_box.clone())
            .with_gamma_zeta(0.01, 0.1)
            .with_schedule(common::inverse_square())
            .with_stop(StopRule::MaxIterOnly { k: WINDOW })
            .with_max_iter(WINDOW)
            .with_seed(trial_seed(BASE_SEED, t));
        let r = run(&cfg, p.objective.as_ref()).map_err(|e| e.to_string())?;
        for (m, d) in mean.iter_mut().zip(&r.trace.diameter) {
            *m += d * d / RUNS as f64;
        }
    }
    let rate = fit_geometric_rate(&mean, 0).map_err(|e| e.to_string())?;
    let expected = check_consensus_condition(0.01, 0.1).contraction;
    Ok(outcome(
        (rate - 0.9901).abs() <= 0.01,
        format!("fitted ratio {rate:.5} over {WINDOW} iterations, (1-γ)²+ζ² = {expected:.5}, target 0.9901 ± 0.01"),
    ))
}

fn c4_consensus_emergence() -> Result<Outcome, String> {
    let mut ok = 0;
    let mut worst_coord = Vec::new();
    for t in 0..10 {
        let (p, cfg) = example1_config(trial_seed(BASE_SEED, t));
        let r = run(&cfg, p.objective.as_ref()).map_err(|e| e.to_string())?;
        let dev = r.consensus_point.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        worst_coord.push(format!("{dev:.2}"));
        if r.final_diameter < 1e-6 && dev < 0.1 {
            ok += 1;
        }
    }
    Ok(outcome(
        ok >= 8,
        format!("{ok}/10 runs collapsed within 0.1 of the origin (need 8); max |coordinate| per run [{}]", worst_coord.join(", ")),
    ))
}

fn c5_landscape_comparison() -> Result<Outcome, String> {
    let p = example2_objective(10_000, BASE_SEED).map_err(|e| e.to_string())?;
    let cfg = SicboConfig::new(100, 50.0, p.init_box.clone()).with_gamma_zeta(0.01, 0.1);
    let s = run_success_experiment(&p, &cfg, 20, BASE_SEED, SolErrConvention::Norm).map_err(|e| e.to_string())?;
    let d = run_ssd_experiment(&p, &SsdOptions::default(), 20, BASE_SEED).map_err(|e| e.to_string())?;
    Ok(outcome(
        s.suc_rat >= 0.7 && d.suc_rat <= 0.5,
        format!(
            "SICBO {:.0}% (need ≥ 70%, sol_err {:.3e}, fun_err {:.3e}); SSD {:.0}% (need ≤ 50%, sol_err {:.3e}, fun_err {:.3e})",
            100.0 * s.suc_rat,
            s.mean_sol_err,
            s.mean_fun_err,
            100.0 * d.suc_rat,
            d.mean_sol_err,
            d.mean_fun_err
        ),
    ))
}

fn c6_spot_cells() -> Result<Outcome, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for (id, n, beta) in [(ProblemId::F4, 400, 1e15), (ProblemId::F1, 200, 1e20)] {
        let p = BenchmarkProblem::benchmark(id, 3).map_err(|e| e.to_string())?;
        let cfg = SicboConfig::new(n, beta, p.init_box.clone())
            .with_gamma_zeta(0.01, 0.1)
            .with_schedule(common::inverse_square());
        let s = run_success_experiment(&p, &cfg, 20, BASE_SEED, SolErrConvention::SquaredNorm)
            .map_err(|e| e.to_string())?;
        pass &= s.suc_rat >= 0.8;
        parts.push(format!("{id} N={n} β={beta:e}: {:.0}%", 100.0 * s.suc_rat));
    }
    Ok(outcome(pass, format!("{} (need ≥ 80% each)", parts.join("; "))))
}

fn c7_network_training() -> Result<Outcome, String> {
    let shape = MlpShape::reference();
    let mut ok = 0;
    let mut errs = Vec::new();
    for s in 0..10 {
        let seeds = NnSeeds::from_seed(trial_seed(BASE_SEED, s));
        let data = generate_dataset(&shape, seeds.teacher, seeds.samples).map_err(|e| e.to_string())?;
        let cfg = nn_default_config(&shape, seeds.solver);
        let r = train_with_sicbo(&shape, &data, &cfg).map_err(|e| e.to_string())?;
        if r.err_train <= 1e-2 && r.report.iterations <= 2000 {
            ok += 1;
        }
        errs.push(format!("{:.2e}", r.err_train));
    }
    Ok(outcome(
        ok >= 6,
        format!("{ok}/10 seeds reached err_train ≤ 1e-2 (need 6); err_train per seed [{}]", errs.join(", ")),
    ))
}

fn c8_benchmarks() -> Result<Outcome, String> {
    let mut worst_zero = 0.0_f64;
    let mut worst_gap = 0.0_f64;
    for id in ProblemId::BENCHMARKS {
        for dim in [1, 3, 10] {
            let p = BenchmarkProblem::benchmark(id, dim).map_err(|e| e.to_string())?;
            worst_zero = worst_zero.max(p.eval(&vec![0.0; dim]).map_err(|e| e.to_string())?.abs());
        }
        let p = BenchmarkProblem::benchmark(id, 3).map_err(|e| e.to_string())?;
        let mut rng = SicboRng::seed_from_u64(trial_seed(BASE_SEED, id as usize));
        let g = spot_check_gap(p.objective.as_ref(), &p.init_box, 1000, &mut rng).map_err(|e| e.to_string())?;
        worst_gap = worst_gap.max(g);
    }
    Ok(outcome(
        worst_zero <= 1e-12 && worst_gap <= 1.0,
        format!("max |f(0)| = {worst_zero:.1e}; worst gap ratio {worst_gap:.3} over 1000 points per function (need ≤ 1)"),
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion, Duration); 8] = [
        ("exact invariant suite", c1_invariants, Duration::from_secs(30)),
        ("pathwise dispersion bound", c2_dispersion_bound, Duration::from_secs(60)),
        ("consensus rate", c3_consensus_rate, Duration::from_secs(300)),
        ("consensus emergence", c4_consensus_emergence, Duration::from_secs(120)),
        ("sampled landscape comparison", c5_landscape_comparison, Duration::from_secs(600)),
        ("benchmark spot cells", c6_spot_cells, Duration::from_secs(1800)),
        ("network training", c7_network_training, Duration::from_secs(1200)),
        ("benchmark correctness", c8_benchmarks, Duration::from_secs(10)),
    ];
    let mut failures = 0;
    for (i, (name, criterion, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = criterion();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(o) => (o.pass && elapsed <= *budget, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let timing = if elapsed <= *budget { "" } else { " [over time budget]" };
        if !pass {
            failures += 1;
        }
        println!(
            "criterion {}: {} {name} ({:.1}s of {}s){timing}: {detail}",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    let strict = std::env::var("SICBO_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failures > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
