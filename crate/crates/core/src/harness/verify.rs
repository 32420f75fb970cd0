//! Fast invariant checks behind `dish verify`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{
    dual_newton_step_exact, dual_optimal_value, dual_value_grad, primal_hessian, theoretical_stepsizes, INNER_TOL,
    SLACK_TOL,
};
use crate::engine::{
    run, AnalysisOptions, CompactEngine, DistributedEngine, RunOptions, RunState, ScheduleSpec, Stepsizes,
    UpdateSchedule,
};
use crate::error::Result;
use crate::objectives::{make_least_squares, quadratic_toy_ring, ProblemInstance, SyntheticParams};

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &str, result: Result<(bool, String)>) -> CheckOutcome {
    match result {
        Ok((passed, detail)) => CheckOutcome { name: name.into(), passed, detail },
        Err(e) => CheckOutcome { name: name.into(), passed: false, detail: format!("error: {e}") },
    }
}

/// Small least-squares instance with unit feature scaling.
pub fn small_least_squares(n: usize, d: usize, seed: u64) -> Result<ProblemInstance> {
    let mut p = SyntheticParams::setup1(seed);
    p.n = n;
    p.d = d;
    p.p = 0.7;
    p.samples_per_agent = 20;
    p.scaling = vec![1.0; d];
    make_least_squares(&p)
}

fn random_schedule(rng: &mut ChaCha8Rng, n: usize) -> Result<UpdateSchedule> {
    Ok(match rng.random_range(0..5u32) {
        0 => UpdateSchedule::all_gradient(n),
        1 => UpdateSchedule::all_newton(n),
        2 => UpdateSchedule::esom0(n),
        3 => UpdateSchedule::dish_k(n, rng.random_range(0..=n)),
        _ => UpdateSchedule::from_spec(&ScheduleSpec::uniform_switching(2, 9, rng.random()), n)?,
    })
}

fn engine_equivalence(seed: u64, configs: usize) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..configs {
        let n = rng.random_range(3..=6usize);
        let d = rng.random_range(1..=3usize);
        let inst = small_least_squares(n, d, rng.random())?;
        let sched = random_schedule(&mut rng, n)?;
        let steps = Stepsizes {
            a: (0..n).map(|_| rng.random_range(0.05..0.5)).collect(),
            b: (0..n).map(|_| rng.random_range(0.01..0.2)).collect(),
            mu: if rng.random_bool(0.5) { 0.0 } else { rng.random_range(0.1..2.0) },
        };
        let nd = n * d;
        let init = RunState::new(
            DVector::from_fn(nd, |_, _| rng.random_range(-1.0..1.0)),
            DVector::from_fn(nd, |_, _| rng.random_range(-1.0..1.0)),
        );
        let mut compact = CompactEngine::new(&inst, &sched, &steps)?;
        let mut dist = DistributedEngine::new(&inst, &sched, &steps, &init)?;
        let mut state = init;
        for _ in 0..100 {
            state = compact.step(&state)?;
            dist.round()?;
            let other = dist.state();
            worst = worst.max((&state.x - &other.x).amax()).max((&state.lambda - &other.lambda).amax());
        }
    }
    Ok((worst <= 1e-12, format!("max deviation {worst:.3e} over {configs} configs")))
}

fn fixed_point() -> Result<(bool, String)> {
    let inst = small_least_squares(5, 3, 11)?;
    let x = inst.x_opt_stacked();
    let grad = inst.gradient(&x);
    let w = inst.topology().w_dense();
    let lambda =
        w.svd(true, true).solve(&(-grad), 1e-12).map_err(|e| crate::error::DishError::InvalidParameter(e.into()))?;
    let state = RunState::new(x, lambda);
    let mut worst: f64 = 0.0;
    for sched in [UpdateSchedule::all_gradient(5), UpdateSchedule::all_newton(5), UpdateSchedule::dish_k(5, 2)] {
        let steps = Stepsizes::uniform(5, 0.3, 0.7, 1.5);
        let next = CompactEngine::new(&inst, &sched, &steps)?.step(&state)?;
        worst = worst.max((&next.x - &state.x).amax()).max((&next.lambda - &state.lambda).amax());
    }
    Ok((worst <= 1e-10, format!("max move {worst:.3e}")))
}

fn dual_gradient_fd(seed: u64) -> Result<(bool, String)> {
    let inst = small_least_squares(4, 2, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nd = inst.stacked_dim();
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let mu = rng.random_range(0.0..1.0);
        let lambda = DVector::from_fn(nd, |_, _| rng.random_range(-1.0..1.0));
        let dp = dual_value_grad(&inst, mu, &lambda, INNER_TOL, None)?;
        let h = 1e-5;
        let mut fd = DVector::zeros(nd);
        for r in 0..nd {
            let mut lp = lambda.clone();
            let mut lm = lambda.clone();
            lp[r] += h;
            lm[r] -= h;
            let gp = dual_value_grad(&inst, mu, &lp, INNER_TOL, Some(&dp.x_star))?.value;
            let gm = dual_value_grad(&inst, mu, &lm, INNER_TOL, Some(&dp.x_star))?.value;
            fd[r] = (gp - gm) / (2.0 * h);
        }
        worst = worst.max((&fd - &dp.grad).norm() / dp.grad.norm().max(1e-12));
    }
    Ok((worst <= 1e-5, format!("max relative deviation {worst:.3e}")))
}

fn newton_identity(seed: u64) -> Result<(bool, String)> {
    let inst = small_least_squares(6, 3, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for mu in [0.0, 0.5, 2.0] {
        let x = DVector::from_fn(inst.stacked_dim(), |_, _| rng.random_range(-2.0..2.0));
        worst = worst.max(dual_newton_step_exact(&inst, mu, &x)?.identity_residual);
    }
    Ok((worst <= 1e-8, format!("max identity residual {worst:.3e}")))
}

fn extreme_eigs(m: DMatrix<f64>) -> (f64, f64) {
    let e = SymmetricEigen::new(m).eigenvalues;
    (e.min(), e.max())
}

fn curvature_bounds(seed: u64) -> Result<(bool, String)> {
    let inst = small_least_squares(5, 2, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nd = inst.stacked_dim();
    let (s, l) = (inst.s(), inst.l());
    let mu = 0.7;
    let mut ok = true;
    for _ in 0..10 {
        let x = DVector::from_fn(nd, |_, _| rng.random_range(-3.0..3.0));
        let (lo, hi) = extreme_eigs(primal_hessian(&inst, mu, &x));
        ok &= lo >= s - 1e-10 && hi <= l + 2.0 * mu + 1e-10;
    }
    let g_star = dual_optimal_value(&inst);
    let p_g = (1.0 - inst.topology().gamma()) / (l + 2.0 * mu);
    let mut pl_worst = f64::INFINITY;
    for _ in 0..10 {
        let lambda = DVector::from_fn(nd, |_, _| rng.random_range(-2.0..2.0));
        let dp = dual_value_grad(&inst, mu, &lambda, INNER_TOL, None)?;
        pl_worst = pl_worst.min(dp.grad.norm_squared() / (2.0 * p_g) - (g_star - dp.value));
    }
    ok &= pl_worst >= -1e-9;
    let mut lip_worst = f64::INFINITY;
    for _ in 0..20 {
        let l1 = DVector::from_fn(nd, |_, _| rng.random_range(-2.0..2.0));
        let l2 = DVector::from_fn(nd, |_, _| rng.random_range(-2.0..2.0));
        let g1 = dual_value_grad(&inst, mu, &l1, INNER_TOL, None)?.grad;
        let g2 = dual_value_grad(&inst, mu, &l2, INNER_TOL, None)?.grad;
        lip_worst = lip_worst.min(4.0 / s * (&l1 - &l2).norm() - (g1 - g2).norm());
    }
    ok &= lip_worst >= -1e-9;
    Ok((ok, format!("PL slack {pl_worst:.3e}, Lipschitz slack {lip_worst:.3e}")))
}

fn contraction_on_toy(iters: usize) -> Result<(bool, String)> {
    let inst = quadratic_toy_ring(5, 2, 0)?;
    let mut worst_contraction = f64::INFINITY;
    let mut worst_slack = f64::INFINITY;
    let mut worst_env: f64 = 0.0;
    for mu in [0.0, 1.0] {
        for sched in [UpdateSchedule::all_gradient(5), UpdateSchedule::all_newton(5), UpdateSchedule::dish_k(5, 2)] {
            let t = theoretical_stepsizes(&inst, &sched, mu)?;
            let opts = RunOptions::new(iters).with_analysis(AnalysisOptions {
                catalog: t.catalog.clone(),
                rho: t.rho,
                per_step: true,
            });
            let trace = run(&inst, &sched, &t.steps, &RunState::zeros(10), &opts).map_err(|f| f.error)?;
            for w in trace.rows.windows(2) {
                let (m0, m1) = (w[0].merit.unwrap_or(0.0), w[1].merit.unwrap_or(0.0));
                worst_contraction = worst_contraction.min((1.0 - t.rho) * m0 + 1e-9 - m1);
            }
            for r in &trace.rows {
                worst_slack = worst_slack.min(r.prop1_slack.unwrap_or(0.0)).min(r.prop2_slack.unwrap_or(0.0));
            }
            worst_env = worst_env.max(trace.envelope_max_ratio.unwrap_or(0.0));
        }
    }
    let ok = worst_contraction >= 0.0 && worst_slack >= SLACK_TOL && worst_env <= 1.0;
    Ok((
        ok,
        format!(
            "contraction slack {worst_contraction:.3e}, step-inequality slack {worst_slack:.3e}, envelope ratio {worst_env:.3e}"
        ),
    ))
}

/// Runs every check; `seed` drives the random configurations.
pub fn run_all(seed: u64) -> Vec<CheckOutcome> {
    vec![
        outcome("engine equivalence", engine_equivalence(seed, 5)),
        outcome("fixed point", fixed_point()),
        outcome("dual gradient vs finite differences", dual_gradient_fd(seed)),
        outcome("dual Newton identity", newton_identity(seed)),
        outcome("curvature, PL and dual Lipschitz bounds", curvature_bounds(seed)),
        outcome("merit contraction, step inequalities, envelope", contraction_on_toy(300)),
    ]
}
