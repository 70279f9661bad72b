//! Exact-arithmetic helpers and deterministic invariant checks shared by the
//! integration tests and the acceptance runner.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use sicbo::nn::{FlatParams, Layer, MlpShape};
use sicbo::smoothing::{phi1_abs, phi1_abs_deriv, phi2_relu, MuSchedule};
use sicbo::solver::{consensus_point, step, ParticleEnsemble, SicboRng};
use sicbo::testbed::{ProblemId, TestFunction};
use sicbo::{SearchBox, SicboConfig, SmoothedObjective, StopRule};

pub type Check = Result<usize, String>;

/// `a + b = s + e` exactly.
pub fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

/// `a · b = p + e` exactly.
pub fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Sum of `terms` with a single final rounding, via a growing expansion.
pub fn exact_sum(terms: &[f64]) -> f64 {
    let mut expansion: Vec<f64> = Vec::new();
    for &t in terms {
        let mut q = t;
        let mut next = Vec::with_capacity(expansion.len() + 1);
        for &e in &expansion {
            let (s, err) = two_sum(q, e);
            if err != 0.0 {
                next.push(err);
            }
            q = s;
        }
        next.push(q);
        expansion = next;
    }
    expansion.iter().rev().fold(0.0, |acc, v| acc + v)
}

/// Distance from `|x|` to the next larger double.
pub fn ulp(x: f64) -> f64 {
    let a = x.abs();
    if a == f64::INFINITY {
        return f64::INFINITY;
    }
    f64::from_bits(a.to_bits() + 1) - a
}

/// `(x_i' − x_j') − a (x_i − x_j)` evaluated without rounding error beyond
/// the final one.
pub fn pair_residual(xi: f64, xj: f64, xi_new: f64, xj_new: f64, a: f64) -> f64 {
    let (d_hi, d_lo) = two_sum(xi_new, -xj_new);
    let (s_hi, s_lo) = two_sum(xi, -xj);
    let (p1, e1) = two_prod(a, s_hi);
    let (p2, e2) = two_prod(a, s_lo);
    exact_sum(&[d_hi, d_lo, -p1, -e1, -p2, -e2])
}

fn random_ensemble(rng: &mut SicboRng, n: usize, dim: usize, half_width: f64) -> ParticleEnsemble {
    let b = SearchBox::cube(dim, -half_width, half_width).unwrap();
    ParticleEnsemble::uniform(n, &b, rng).unwrap()
}

fn f1_objective(dim: usize) -> TestFunction {
    TestFunction::new(ProblemId::F1, dim, 5.0).unwrap()
}

/// After one step every particle difference scales by the realized factor:
/// `|(x_i' − x_j') − a_l (x_i − x_j)| ≤ (1 + |a_l|) ulp(M)` with `M` the
/// largest magnitude involved, i.e. at most 2 ulp whenever `|a_l| ≤ 1`.
/// The cases with `|a_l| ≤ 1` are checked against exactly `2 ulp(M)`.
pub fn check_pairwise_recursion() -> Check {
    let settings = [(0.5, 0.1, 1.0), (0.01, 0.1, 5.0), (0.3, 0.05, 1e3), (0.01, 0.2, 1e-3)];
    let mut cases = 0;
    for (case, &(gamma, zeta, width)) in settings.iter().enumerate() {
        let mut rng = SicboRng::seed_from_u64(100 + case as u64);
        let dim = 4;
        let obj = f1_objective(dim);
        let cfg = SicboConfig::new(12, 100.0, SearchBox::cube(dim, -width, width).unwrap())
            .with_gamma_zeta(gamma, zeta);
        let mut ens = random_ensemble(&mut rng, 12, dim, width);
        for _ in 0..25 {
            let rec = step(&ens, &cfg, &obj, &mut rng).map_err(|e| e.to_string())?;
            for l in 0..dim {
                let a = rec.factors[l];
                let c = rec.consensus[l];
                let limit = if a.abs() <= 1.0 { 2.0 } else { 1.0 + a.abs() };
                for i in 0..ens.n() {
                    for j in (i + 1)..ens.n() {
                        let (xi, xj) = (ens.particle(i)[l], ens.particle(j)[l]);
                        let (yi, yj) = (rec.next.particle(i)[l], rec.next.particle(j)[l]);
                        let m = [xi, xj, yi, yj, c, xi - c, xj - c]
                            .iter()
                            .fold(0.0_f64, |acc, v| acc.max(v.abs()));
                        let r = pair_residual(xi, xj, yi, yj, a);
                        if r.abs() > limit * ulp(m) {
                            return Err(format!(
                                "pair ({i},{j}) coord {l}: residual {r:e} exceeds {limit} ulp({m:e}) = {:e}",
                                limit * ulp(m)
                            ));
                        }
                        cases += 1;
                    }
                }
            }
            ens = rec.next;
        }
    }
    Ok(cases)
}

/// The consensus point lies in the coordinate hull and does not change when
/// all objective values are shifted by an exactly representable constant.
pub fn check_consensus_hull_and_shift() -> Check {
    let mut rng = SicboRng::seed_from_u64(7);
    let mut cases = 0;
    for trial in 0..200 {
        let n = rng.random_range(1..40);
        let dim = rng.random_range(1..6);
        let ens = random_ensemble(&mut rng, n, dim, 10.0);
        // multiples of 2^-10 in [-64, 64] keep the shifted values exact
        let values: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(-65536..65536) as f64) / 1024.0)
            .collect();
        let beta = [1e-3, 1.0, 50.0, 1e4, 1e20][trial % 5];
        let c = consensus_point(&ens, &values, beta).map_err(|e| e.to_string())?;
        for l in 0..dim {
            let lo = ens.rows().map(|x| x[l]).fold(f64::INFINITY, f64::min);
            let hi = ens.rows().map(|x| x[l]).fold(f64::NEG_INFINITY, f64::max);
            if !(lo <= c[l] && c[l] <= hi) {
                return Err(format!("trial {trial}: coordinate {l} = {} outside [{lo}, {hi}]", c[l]));
            }
        }
        let shift = (rng.random_range(-64..64) as f64) / 8.0;
        let shifted: Vec<f64> = values.iter().map(|v| v + shift).collect();
        let cs = consensus_point(&ens, &shifted, beta).map_err(|e| e.to_string())?;
        if cs != c {
            return Err(format!("trial {trial}: shift by {shift} moved consensus {c:?} -> {cs:?}"));
        }
        cases += 1;
    }
    Ok(cases)
}

/// Identical particles stay put under a step for any `γ`, `ζ`, `β`.
pub fn check_degenerate_fixed_point() -> Check {
    let mut rng = SicboRng::seed_from_u64(11);
    let mut cases = 0;
    for trial in 0..100 {
        let dim = rng.random_range(1..8);
        let n = rng.random_range(1..30);
        let point: Vec<f64> = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
        let ens = ParticleEnsemble::from_rows(&vec![point.clone(); n]).unwrap();
        let gamma = rng.random_range(-0.5..1.5);
        let zeta = rng.random_range(0.0..2.0);
        let beta = 10f64.powf(rng.random_range(-3.0..20.0));
        let cfg = SicboConfig::new(n.max(1), beta, SearchBox::cube(dim, -5.0, 5.0).unwrap())
            .with_gamma_zeta(gamma, zeta);
        let rec = step(&ens, &cfg, &f1_objective(dim), &mut rng).map_err(|e| e.to_string())?;
        if rec.next.rows().any(|x| x != point.as_slice()) {
            return Err(format!("trial {trial}: collapsed ensemble moved"));
        }
        cases += 1;
    }
    Ok(cases)
}

/// With `γ = 1` and `ζ = 0` one step lands every particle on the consensus
/// point.
pub fn check_one_step_collapse() -> Check {
    let mut rng = SicboRng::seed_from_u64(13);
    let mut cases = 0;
    for trial in 0..100 {
        let dim = rng.random_range(1..8);
        let n = rng.random_range(2..50);
        let ens = random_ensemble(&mut rng, n, dim, 5.0);
        let cfg = SicboConfig::new(n, 100.0, SearchBox::cube(dim, -5.0, 5.0).unwrap())
            .with_gamma_zeta(1.0, 0.0)
            .with_stop(StopRule::MaxIterOnly { k: 1 });
        let rec = step(&ens, &cfg, &f1_objective(dim), &mut rng).map_err(|e| e.to_string())?;
        if rec.next.rows().any(|x| x != rec.consensus.as_slice()) {
            return Err(format!("trial {trial}: particles did not land on the consensus point"));
        }
        cases += 1;
    }
    Ok(cases)
}

/// Packing layers and unpacking them again is the identity.
pub fn check_flatten_identity() -> Check {
    let mut rng = SicboRng::seed_from_u64(17);
    let mut cases = 0;
    for _ in 0..100 {
        let depth = rng.random_range(2..6);
        let widths: Vec<usize> = (0..depth).map(|_| rng.random_range(1..8)).collect();
        let shape = MlpShape::new(widths).unwrap();
        let layers: Vec<Layer> = shape
            .widths()
            .windows(2)
            .map(|w| Layer {
                weights: (0..w[0] * w[1]).map(|_| rng.random_range(-3.0..3.0)).collect(),
                biases: (0..w[1]).map(|_| rng.random_range(-3.0..3.0)).collect(),
            })
            .collect();
        let flat = FlatParams::flatten(&shape, &layers).map_err(|e| e.to_string())?;
        if flat.values.len() != shape.param_count() {
            return Err("packed length differs from the parameter count".into());
        }
        let back = flat.unflatten(&shape).map_err(|e| e.to_string())?;
        if back != layers {
            return Err(format!("round trip changed layers for {:?}", shape.widths()));
        }
        cases += 1;
    }
    Ok(cases)
}

/// `|s| ≤ φ1 ≤ |s| + μ/2`, `max(0, s) ≤ φ2 ≤ max(0, s) + μ/8`, and both
/// are continuous at their breakpoints.
pub fn check_envelopes_and_breakpoints() -> Check {
    let mut rng = SicboRng::seed_from_u64(19);
    let mut cases = 0;
    for _ in 0..10_000 {
        let mu = 10f64.powf(rng.random_range(-6.0..1.0));
        let s = rng.random_range(-3.0..3.0) * mu;
        let p1 = phi1_abs(s, mu).unwrap();
        let p2 = phi2_relu(s, mu).unwrap();
        let tol = 4.0 * f64::EPSILON * (s.abs() + mu);
        if p1 < s.abs() - tol || p1 > s.abs() + mu / 2.0 + tol {
            return Err(format!("phi1({s:e}, {mu:e}) = {p1:e} leaves its envelope"));
        }
        if p2 < s.max(0.0) - tol || p2 > s.max(0.0) + mu / 8.0 + tol {
            return Err(format!("phi2({s:e}, {mu:e}) = {p2:e} leaves its envelope"));
        }
        cases += 1;
    }
    for mu in [1e-6_f64, 1e-3, 0.25, 1.0, 3.0] {
        let below = |x: f64| f64::from_bits(x.to_bits() - 1);
        for b in [mu, -mu] {
            let (l, r) = (phi1_abs(below(b.abs()).copysign(b), mu).unwrap(), phi1_abs(b, mu).unwrap());
            if (l - r).abs() > 4.0 * f64::EPSILON * mu {
                return Err(format!("phi1 jumps at {b}: {l} vs {r}"));
            }
        }
        for b in [mu / 2.0, -mu / 2.0] {
            let inside = below(b.abs()).copysign(b);
            let (l, r) = (phi2_relu(inside, mu).unwrap(), phi2_relu(b, mu).unwrap());
            if (l - r).abs() > 4.0 * f64::EPSILON * mu {
                return Err(format!("phi2 jumps at {b}: {l} vs {r}"));
            }
        }
        cases += 4;
    }
    Ok(cases)
}

fn central_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Analytic derivatives against central differences away from breakpoints,
/// and matching one-sided differences of smoothed benchmarks.
pub fn check_finite_differences() -> Check {
    let mut rng = SicboRng::seed_from_u64(23);
    let mut cases = 0;
    for _ in 0..2000 {
        let mu = 10f64.powf(rng.random_range(-2.0..0.5));
        let s = rng.random_range(-3.0..3.0) * mu;
        let h = 1e-6 * mu;
        if (s.abs() - mu).abs() > 10.0 * h {
            let fd = central_difference(|t| phi1_abs(t, mu).unwrap(), s, h);
            let d = phi1_abs_deriv(s, mu).unwrap();
            if (fd - d).abs() > 1e-6 {
                return Err(format!("phi1' at ({s:e}, {mu:e}): analytic {d} vs difference {fd}"));
            }
            cases += 1;
        }
        if (s.abs() - mu / 2.0).abs() > 10.0 * h {
            let fd = central_difference(|t| phi2_relu(t, mu).unwrap(), s, h);
            let d = if s >= mu / 2.0 {
                1.0
            } else if s <= -mu / 2.0 {
                0.0
            } else {
                s / mu + 0.5
            };
            if (fd - d).abs() > 1e-6 {
                return Err(format!("phi2' at ({s:e}, {mu:e}): analytic {d} vs difference {fd}"));
            }
            cases += 1;
        }
    }
    // smoothed benchmarks are C¹: forward and backward slopes agree
    for id in [ProblemId::F1, ProblemId::F2, ProblemId::F3, ProblemId::F7, ProblemId::F8] {
        let f = TestFunction::new(id, 3, 3.0).unwrap();
        for _ in 0..200 {
            let mu = rng.random_range(0.05..1.0);
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
            let h = 1e-6;
            for l in 0..3 {
                let at = |t: f64| {
                    let mut y = x.clone();
                    y[l] += t;
                    f.smoothed(&y, mu)
                };
                let fwd = (at(h) - at(0.0)) / h;
                let bwd = (at(0.0) - at(-h)) / h;
                if (fwd - bwd).abs() > 1e-3 * (1.0 + fwd.abs()) {
                    return Err(format!("{id} smoothed slope jumps at {x:?} coord {l}: {fwd} vs {bwd}"));
                }
                cases += 1;
            }
        }
    }
    Ok(cases)
}

/// All exact invariants in a fixed order, with their names.
pub fn invariant_suite() -> Vec<(&'static str, Check)> {
    vec![
        ("pairwise recursion", check_pairwise_recursion()),
        ("consensus hull and shift", check_consensus_hull_and_shift()),
        ("degenerate fixed point", check_degenerate_fixed_point()),
        ("one-step collapse", check_one_step_collapse()),
        ("flatten identity", check_flatten_identity()),
        ("envelopes and breakpoints", check_envelopes_and_breakpoints()),
        ("finite differences", check_finite_differences()),
    ]
}

/// The schedule used by the consensus examples.
pub fn inverse_square() -> MuSchedule {
    MuSchedule::inverse_power(2.0, 1.0).unwrap()
}
