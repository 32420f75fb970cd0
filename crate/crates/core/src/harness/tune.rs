//! Exhaustive grid search over uniform `(a, b, μ)`.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::Serialize;

use super::config::TuningConfig;
use super::extra::run_extra;
use crate::engine::{run, RunOptions, RunState, Stepsizes, UpdateSchedule};
use crate::error::{DishError, Result};
use crate::objectives::ProblemInstance;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TuneResult {
    pub steps: Stepsizes,
    /// Iterations to reach the target, `None` when no point reached it.
    pub iterations: Option<usize>,
    pub final_rel_err: f64,
    pub evaluated: usize,
}

impl TuneResult {
    pub fn targeted(&self) -> bool {
        self.iterations.is_some()
    }
}

#[derive(Debug, Clone)]
struct Outcome {
    index: usize,
    a: f64,
    iterations: Option<usize>,
    final_rel_err: f64,
}

/// Picks the best outcome: fewest iterations to target, then smaller final
/// error, then smaller `a`, then grid order.
fn select(mut outcomes: Vec<Outcome>) -> Option<Outcome> {
    outcomes.sort_by_key(|o| o.index);
    outcomes.into_iter().min_by(|x, y| {
        let key = |o: &Outcome| o.iterations.unwrap_or(usize::MAX);
        key(x)
            .cmp(&key(y))
            .then(x.final_rel_err.total_cmp(&y.final_rel_err))
            .then(x.a.total_cmp(&y.a))
            .then(x.index.cmp(&y.index))
    })
}

/// Evaluates each candidate, stopping early once a candidate can no longer
/// beat the best iteration count seen so far.
fn search<F>(count: usize, max_iters: usize, eval: F) -> Vec<Outcome>
where
    F: Fn(usize, usize) -> Option<Outcome> + Sync,
{
    let best = AtomicUsize::new(max_iters);
    let outcomes: Vec<Option<Outcome>> = (0..count)
        .into_par_iter()
        .map(|idx| {
            let cap = best.load(Ordering::Relaxed);
            let out = eval(idx, cap);
            if let Some(k) = out.as_ref().and_then(|o| o.iterations) {
                best.fetch_min(k, Ordering::Relaxed);
            }
            out
        })
        .collect();
    outcomes.into_iter().flatten().collect()
}

/// Grid search for a DISH schedule. Agents that always take Newton-type
/// primal steps keep `a_i = 1`.
pub fn tune(
    instance: &ProblemInstance,
    schedule: &UpdateSchedule,
    tuning: &TuningConfig,
    init: &RunState,
) -> Result<TuneResult> {
    tuning.validate()?;
    let grid = tuning.grid();
    let all_newton = (0..schedule.n()).all(|i| schedule.always_newton_primal(i));
    let a_grid = if all_newton { vec![1.0] } else { grid.clone() };
    let mu_grid: Vec<f64> = std::iter::once(0.0).chain(grid.iter().copied()).collect();
    let mut combos = vec![];
    for &mu in &mu_grid {
        for &a in &a_grid {
            for &b in &grid {
                combos.push((a, b, mu));
            }
        }
    }
    let outcomes = search(combos.len(), tuning.max_iters, |idx, cap| {
        let (a, b, mu) = combos[idx];
        let steps = Stepsizes::uniform_newton_unit(schedule, a, b, mu);
        let opts = RunOptions::new(cap).stop_at(tuning.target_rel_err).rows(false);
        run(instance, schedule, &steps, init, &opts).ok().map(|t| Outcome {
            index: idx,
            a,
            iterations: t.reached_target_at,
            final_rel_err: t.final_rel_err,
        })
    });
    let evaluated = combos.len();
    let best = select(outcomes).ok_or(DishError::Divergence { iteration: 0 })?;
    let (a, b, mu) = combos[best.index];
    Ok(TuneResult {
        steps: Stepsizes::uniform_newton_unit(schedule, a, b, mu),
        iterations: best.iterations,
        final_rel_err: best.final_rel_err,
        evaluated,
    })
}

/// Grid search over the EXTRA stepsize. The result stores `α` in `a`.
pub fn tune_extra(instance: &ProblemInstance, tuning: &TuningConfig, init: &RunState) -> Result<TuneResult> {
    tuning.validate()?;
    let grid = tuning.grid();
    let outcomes = search(grid.len(), tuning.max_iters, |idx, cap| {
        let opts = RunOptions::new(cap).stop_at(tuning.target_rel_err).rows(false);
        run_extra(instance, grid[idx], &init.x, &opts).ok().map(|t| Outcome {
            index: idx,
            a: grid[idx],
            iterations: t.reached_target_at,
            final_rel_err: t.final_rel_err,
        })
    });
    let best = select(outcomes).ok_or(DishError::Divergence { iteration: 0 })?;
    Ok(TuneResult {
        steps: Stepsizes::uniform(instance.n(), grid[best.index], grid[best.index], 0.0),
        iterations: best.iterations,
        final_rel_err: best.final_rel_err,
        evaluated: grid.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::quadratic_toy_ring;

    fn small_grid() -> TuningConfig {
        TuningConfig { grid_lo: 0.125, grid_hi: 2.0, max_iters: 3000, ..TuningConfig::default() }
    }

    #[test]
    fn single_point_grid() {
        let inst = quadratic_toy_ring(5, 2, 0).unwrap();
        let sched = UpdateSchedule::all_gradient(5);
        let cfg = TuningConfig { grid_lo: 0.5, grid_hi: 0.5, ..small_grid() };
        let res = tune(&inst, &sched, &cfg, &RunState::zeros(10)).unwrap();
        assert_eq!(res.steps.a, vec![0.5; 5]);
        assert_eq!(res.steps.b, vec![0.5; 5]);
        assert_eq!(res.evaluated, 2);
    }

    #[test]
    fn deterministic_and_newton_unit() {
        let inst = quadratic_toy_ring(5, 2, 1).unwrap();
        let sched = UpdateSchedule::all_newton(5);
        let a = tune(&inst, &sched, &small_grid(), &RunState::zeros(10)).unwrap();
        let b = tune(&inst, &sched, &small_grid(), &RunState::zeros(10)).unwrap();
        assert_eq!(a, b);
        assert!(a.targeted());
        assert_eq!(a.steps.a, vec![1.0; 5]);
    }

    #[test]
    fn selection_order() {
        let o = |index, a, iterations, final_rel_err| Outcome { index, a, iterations, final_rel_err };
        let best = select(vec![o(0, 1.0, Some(9), 1e-9), o(1, 0.5, Some(9), 1e-9), o(2, 2.0, Some(9), 5e-10)]);
        assert_eq!(best.unwrap().index, 2);
        let best = select(vec![o(0, 1.0, None, 1e-3), o(1, 0.5, None, 1e-4)]);
        assert_eq!(best.unwrap().index, 1);
    }

    #[test]
    fn extra_tuning() {
        let inst = quadratic_toy_ring(5, 2, 0).unwrap();
        let res = tune_extra(&inst, &small_grid(), &RunState::zeros(10)).unwrap();
        assert!(res.targeted());
    }
}
