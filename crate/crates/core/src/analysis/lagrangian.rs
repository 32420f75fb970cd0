//! Augmented Lagrangian `L(x, λ) = f(x) + λᵀWx + (μ/2) xᵀWx` and the dual
//! function `g(λ) = min_x L(x, λ)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{DishError, Result};
use crate::objectives::ProblemInstance;

/// Default gradient-norm tolerance for inner solves.
pub const INNER_TOL: f64 = 1e-11;
pub const INNER_MAX_ITERS: usize = 200;

fn w(instance: &ProblemInstance, v: &DVector<f64>) -> Result<DVector<f64>> {
    instance.topology().apply_w(v)
}

pub fn lagrangian(instance: &ProblemInstance, mu: f64, x: &DVector<f64>, lambda: &DVector<f64>) -> Result<f64> {
    instance.check_stacked(lambda)?;
    let wx = w(instance, x)?;
    Ok(instance.value(x) + lambda.dot(&wx) + 0.5 * mu * x.dot(&wx))
}

/// `∇_x L = ∇f(x) + Wλ + μWx`.
pub fn lagrangian_grad(
    instance: &ProblemInstance,
    mu: f64,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
) -> Result<DVector<f64>> {
    let wx = w(instance, x)?;
    let wl = w(instance, lambda)?;
    Ok(instance.gradient(x) + wl + wx * mu)
}

/// `∇²_xx L = ∇²f(x) + μW`, dense.
pub fn primal_hessian(instance: &ProblemInstance, mu: f64, x: &DVector<f64>) -> DMatrix<f64> {
    instance.hessian_dense(x) + instance.topology().w_dense() * mu
}

#[derive(Debug, Clone)]
pub struct InnerSolution {
    pub x: DVector<f64>,
    pub residual: f64,
    pub iterations: usize,
}

/// `x*(λ) = argmin_x L(x, λ)` by damped Newton on the full stacked problem.
/// `warm` seeds the iteration; zero otherwise.
pub fn inner_minimizer(
    instance: &ProblemInstance,
    mu: f64,
    lambda: &DVector<f64>,
    tol: f64,
    warm: Option<&DVector<f64>>,
) -> Result<InnerSolution> {
    if tol.is_nan() || tol <= 0.0 {
        return Err(DishError::InvalidParameter(format!("inner tolerance must be positive, got {tol}")));
    }
    instance.check_stacked(lambda)?;
    let nd = instance.stacked_dim();
    let mut x = match warm {
        Some(x0) => {
            instance.check_stacked(x0)?;
            x0.clone()
        }
        None => DVector::zeros(nd),
    };
    let wl = w(instance, lambda)?;
    let wd = instance.topology().w_dense();
    let value = |x: &DVector<f64>| {
        let wx = &wd * x;
        instance.value(x) + wl.dot(x) + 0.5 * mu * x.dot(&wx)
    };
    let grad = |x: &DVector<f64>| instance.gradient(x) + &wl + &wd * x * mu;

    let mut g = grad(&x);
    let mut stalls = 0;
    for it in 0..INNER_MAX_ITERS {
        let gn = g.norm();
        if gn <= tol {
            return Ok(InnerSolution { x, residual: gn, iterations: it });
        }
        let h = instance.hessian_dense(&x) + &wd * mu;
        let step = h
            .cholesky()
            .ok_or_else(|| DishError::NotPositiveDefinite("augmented Lagrangian Hessian".into()))?
            .solve(&g);
        let f0 = value(&x);
        let slope = g.dot(&step);
        let mut t = 1.0;
        let (next, next_g) = loop {
            let cand = &x - &step * t;
            let cand_g = grad(&cand);
            if value(&cand) <= f0 - 1e-4 * t * slope || cand_g.norm() < gn * (1.0 - 1e-4 * t) || t < 1e-12 {
                break (cand, cand_g);
            }
            t *= 0.5;
        };
        if next_g.norm() >= gn {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
        if next_g.norm() < gn {
            x = next;
            g = next_g;
        }
    }
    Err(DishError::InnerSolveFailed { iterations: INNER_MAX_ITERS, residual: g.norm() })
}

/// `g(λ)` together with its gradient `W x*(λ)` and the minimizer itself.
#[derive(Debug, Clone)]
pub struct DualPoint {
    pub value: f64,
    pub grad: DVector<f64>,
    pub x_star: DVector<f64>,
    pub residual: f64,
}

pub fn dual_value_grad(
    instance: &ProblemInstance,
    mu: f64,
    lambda: &DVector<f64>,
    tol: f64,
    warm: Option<&DVector<f64>>,
) -> Result<DualPoint> {
    let sol = inner_minimizer(instance, mu, lambda, tol, warm)?;
    let value = lagrangian(instance, mu, &sol.x, lambda)?;
    let grad = w(instance, &sol.x)?;
    Ok(DualPoint { value, grad, x_star: sol.x, residual: sol.residual })
}

/// Optimal dual value `g(λ*)`, equal to `Σ f_i(x_opt)` by strong duality.
pub fn dual_optimal_value(instance: &ProblemInstance) -> f64 {
    instance.global_value(instance.x_opt())
}
