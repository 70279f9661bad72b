use super::config::StopRule;
use super::ensemble::ParticleEnsemble;
use crate::smoothing::SmoothedObjective;

fn step_norm(prev: &[f64], next: &[f64]) -> f64 {
    prev.iter()
        .zip(next)
        .map(|(a, b)| (b - a) * (b - a))
        .sum::<f64>()
        .sqrt()
}

/// Evaluates `rule` on two consecutive iterates whose raw objective values
/// are already known.
pub(crate) fn stop_test(
    rule: &StopRule,
    prev: &ParticleEnsemble,
    next: &ParticleEnsemble,
    prev_values: &[f64],
    next_values: &[f64],
) -> bool {
    let max_step = || {
        prev.rows()
            .zip(next.rows())
            .map(|(a, b)| step_norm(a, b))
            .fold(0.0_f64, f64::max)
    };
    match *rule {
        StopRule::MaxIterOnly { k } => next.iteration >= k,
        StopRule::StepNorm { eps } => max_step() <= eps,
        StopRule::StepNormAndSlope { eps1, eps2 } => {
            if max_step() > eps1 {
                return false;
            }
            // particles that did not move are left out of the quotient
            let slope = prev
                .rows()
                .zip(next.rows())
                .zip(prev_values.iter().zip(next_values))
                .filter_map(|((a, b), (fa, fb))| {
                    let s = step_norm(a, b);
                    (s > 0.0).then(|| (fb - fa).abs() / s)
                })
                .fold(0.0_f64, f64::max);
            slope <= eps2
        }
        StopRule::FunChange { eps } => prev_values
            .iter()
            .zip(next_values)
            .all(|(a, b)| (b - a).abs() <= eps),
    }
}

/// Whether the iteration should terminate after moving from `prev` to `next`.
/// Function-value tests use the raw (unsmoothed) objective.
pub fn should_stop<O: SmoothedObjective + ?Sized>(
    rule: &StopRule,
    prev: &ParticleEnsemble,
    next: &ParticleEnsemble,
    objective: &O,
) -> bool {
    let needs_values = matches!(
        rule,
        StopRule::StepNormAndSlope { .. } | StopRule::FunChange { .. }
    );
    let (pv, nv): (Vec<f64>, Vec<f64>) = if needs_values {
        (
            prev.rows().map(|x| objective.raw(x)).collect(),
            next.rows().map(|x| objective.raw(x)).collect(),
        )
    } else {
        (Vec::new(), Vec::new())
    };
    stop_test(rule, prev, next, &pv, &nv)
}
