//! Dual function, exact dual Newton step and the merit function.
//!
//! `cargo run --example dual_analysis`

use dish::analysis::{
    dish_newton_estimate, dual_newton_step_exact, dual_optimal_value, dual_value_grad, merit, INNER_TOL,
};
use dish::engine::{step_compact, RunState, Stepsizes, UpdateSchedule};
use dish::harness::verify::small_least_squares;
use nalgebra::DVector;

fn main() -> dish::Result<()> {
    let inst = small_least_squares(4, 2, 5)?;
    let mu = 0.5;
    let nd = inst.stacked_dim();
    let lambda = DVector::from_fn(nd, |r, _| (r as f64 * 0.7).sin());
    let dp = dual_value_grad(&inst, mu, &lambda, INNER_TOL, None)?;
    let g_star = dual_optimal_value(&inst);
    println!("g(lambda) = {:.6}  g* = {:.6}  |grad g| = {:.4}", dp.value, g_star, dp.grad.norm());

    let x = DVector::from_fn(nd, |r, _| (r as f64).cos());
    let exact = dual_newton_step_exact(&inst, mu, &x)?;
    let est = dish_newton_estimate(&inst, mu, &x)?;
    println!(
        "exact W dlambda vs DISH estimate: rel diff {:.3}  identity residual {:.1e}",
        (&exact.w_delta_lambda - &est).norm() / exact.w_delta_lambda.norm(),
        exact.identity_residual
    );

    let sched = UpdateSchedule::all_newton(inst.n());
    let steps = Stepsizes::uniform_newton_unit(&sched, 1.0, 0.05, mu);
    let mut state = RunState::zeros(nd);
    for k in 0..=40 {
        if k % 10 == 0 {
            let m = merit(&inst, mu, &state, g_star, INNER_TOL)?;
            println!("k {k:>3}  merit {:.4e}  dual gap {:.3e}  primal err {:.3e}", m.delta, m.delta_lambda, m.delta_x);
        }
        state = step_compact(&state, &inst, &sched, &steps)?;
    }
    Ok(())
}
