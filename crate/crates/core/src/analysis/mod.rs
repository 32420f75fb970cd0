//! Theory-side quantities: augmented Lagrangian, dual function, merit,
//! stepsize bounds and the per-step inequalities.

mod constants;
mod lagrangian;
mod merit;
mod newton_step;

pub use constants::{corollary_envelope, theoretical_stepsizes, AgentBounds, ConstantCatalog, TheoreticalStepsizes};
pub use lagrangian::{
    dual_optimal_value, dual_value_grad, inner_minimizer, lagrangian, lagrangian_grad, primal_hessian, DualPoint,
    InnerSolution, INNER_MAX_ITERS, INNER_TOL,
};
pub use merit::{
    merit, merit_from_dual, verify_proposition_bounds, MeritReport, PropositionReport, MERIT_FLOOR, SLACK_TOL,
};
pub use newton_step::{
    dish_newton_estimate, dual_newton_step_exact, hessian_weighted_average, DualNewtonStep, PINV_CUTOFF,
};
