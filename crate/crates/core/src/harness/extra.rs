//! EXTRA baseline with mixing matrices `Z` and `W̃ = (I + Z)/2`.
//!
//! Kept separate from the DISH engines so it can serve as a cross-check.

use nalgebra::DVector;

use crate::engine::{ErrorTracker, RunFailure, RunOptions, RunState, Trace};
use crate::error::{DishError, Result};
use crate::objectives::ProblemInstance;

/// `(M ⊗ I_d) v` for a dense `n × n` mixing matrix given entrywise.
fn mix(instance: &ProblemInstance, weight: impl Fn(usize, usize) -> f64, v: &DVector<f64>) -> DVector<f64> {
    let (n, d) = (instance.n(), instance.d());
    let mut out = DVector::zeros(n * d);
    for i in 0..n {
        for j in 0..n {
            let w = weight(i, j);
            if w != 0.0 {
                for c in 0..d {
                    out[i * d + c] += w * v[j * d + c];
                }
            }
        }
    }
    out
}

/// Runs EXTRA from `x0` with stepsize `alpha`.
#[allow(clippy::result_large_err)]
pub fn run_extra(
    instance: &ProblemInstance,
    alpha: f64,
    x0: &DVector<f64>,
    options: &RunOptions,
) -> std::result::Result<Trace, RunFailure> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(DishError::InvalidParameter(format!("EXTRA stepsize must be positive, got {alpha}")).into());
    }
    let mut tracker = ErrorTracker::new(instance, x0, options.stop_rel_err, options.record_rows)?;
    let z = instance.topology().z();
    let z_mix = |i: usize, j: usize| z[(i, j)];
    let half_mix = |i: usize, j: usize| 0.5 * (z[(i, j)] + if i == j { 1.0 } else { 0.0 });
    let full_mix = |i: usize, j: usize| z[(i, j)] + if i == j { 1.0 } else { 0.0 };
    let label = || if options.record_rows { "extra".to_string() } else { String::new() };

    let observe = |tracker: &mut ErrorTracker<'_>, k: usize, x: &DVector<f64>| -> Result<bool> {
        Ok(tracker.observe(k, x, label())?.0 || k >= options.max_iters)
    };
    let fail = |error: DishError, tracker: ErrorTracker<'_>| RunFailure { error, trace: tracker.finish() };

    let mut prev = x0.clone();
    match observe(&mut tracker, 0, &prev) {
        Ok(true) => return Ok(finish(tracker, prev, 0)),
        Ok(false) => {}
        Err(e) => return Err(fail(e, tracker)),
    }
    let mut grad_prev = instance.gradient(&prev);
    let mut cur = mix(instance, z_mix, &prev) - &grad_prev * alpha;
    let mut k = 1;
    loop {
        match observe(&mut tracker, k, &cur) {
            Ok(true) => break,
            Ok(false) => {}
            Err(e) => return Err(fail(e, tracker)),
        }
        let grad_cur = instance.gradient(&cur);
        let next = mix(instance, full_mix, &cur) - mix(instance, half_mix, &prev) - (&grad_cur - &grad_prev) * alpha;
        prev = cur;
        cur = next;
        grad_prev = grad_cur;
        k += 1;
    }
    Ok(finish(tracker, cur, k))
}

/// EXTRA has no multiplier, so the stored state carries `λ = 0`.
fn finish(tracker: ErrorTracker<'_>, x: DVector<f64>, k: usize) -> Trace {
    let mut trace = tracker.finish();
    let nd = x.len();
    trace.final_state = Some(RunState { x, lambda: DVector::zeros(nd), k });
    trace
}
