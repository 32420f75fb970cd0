//! Exact dual Newton direction and the Hessian-weighted average `y`.

use nalgebra::{DMatrix, DVector};

use super::lagrangian::primal_hessian;
use crate::error::{DishError, Result};
use crate::objectives::ProblemInstance;

/// Relative singular-value cutoff for pseudo-inverse solves.
pub const PINV_CUTOFF: f64 = 1e-10;
const MAX_STACKED_DIM: usize = 200;
const CONSISTENCY_TOL: f64 = 1e-6;
const REFINE_STEPS: usize = 2;

#[derive(Debug, Clone)]
pub struct DualNewtonStep {
    /// Minimum-norm `Δλ` solving `−W (∇²_xx L)⁻¹ W Δλ = W x`.
    pub delta_lambda: DVector<f64>,
    pub w_delta_lambda: DVector<f64>,
    /// `(Σ H_i)⁻¹ Σ H_i x_i`.
    pub y: DVector<f64>,
    /// `‖WΔλ − ∇²_xx L (1⊗y − x)‖`.
    pub identity_residual: f64,
    pub system_residual: f64,
}

/// Hessian-weighted average of the local primal iterates.
pub fn hessian_weighted_average(instance: &ProblemInstance, x: &DVector<f64>) -> Result<DVector<f64>> {
    instance.check_stacked(x)?;
    let d = instance.d();
    let mut total = DMatrix::zeros(d, d);
    let mut weighted = DVector::zeros(d);
    for (i, h) in instance.hessian_blocks(x).into_iter().enumerate() {
        weighted += &h * DVector::from_column_slice(instance.block(x, i));
        total += h;
    }
    total
        .cholesky()
        .map(|c| c.solve(&weighted))
        .ok_or_else(|| DishError::NotPositiveDefinite("aggregate Hessian".into()))
}

pub fn dual_newton_step_exact(instance: &ProblemInstance, mu: f64, x: &DVector<f64>) -> Result<DualNewtonStep> {
    instance.check_stacked(x)?;
    let nd = instance.stacked_dim();
    if nd > MAX_STACKED_DIM {
        return Err(DishError::InvalidParameter(format!(
            "dense dual Newton step needs nd <= {MAX_STACKED_DIM}, got {nd}"
        )));
    }
    let w = instance.topology().w_dense();
    let h = primal_hessian(instance, mu, x);
    let h_inv_w = h
        .clone()
        .cholesky()
        .ok_or_else(|| DishError::NotPositiveDefinite("augmented Lagrangian Hessian".into()))?
        .solve(&w);
    let system = -(&w * h_inv_w);
    let rhs = &w * x;

    let svd = system.clone().svd(true, true);
    let cutoff = PINV_CUTOFF * svd.singular_values.max();
    let pinv_solve = |b: &DVector<f64>| svd.solve(b, cutoff).map_err(|e| DishError::InvalidParameter(e.to_string()));
    let mut delta_lambda = pinv_solve(&rhs)?;
    // the system is ill conditioned when local curvature is tiny
    for _ in 0..REFINE_STEPS {
        let r = &rhs - &system * &delta_lambda;
        delta_lambda += pinv_solve(&r)?;
    }
    let system_residual = (&system * &delta_lambda - &rhs).norm();
    if system_residual > CONSISTENCY_TOL {
        return Err(DishError::InconsistentSystem { residual: system_residual });
    }

    let y = hessian_weighted_average(instance, x)?;
    let w_delta_lambda = &w * &delta_lambda;
    let target = &h * (crate::objectives::stack_copies(&y, instance.n()) - x);
    let identity_residual = (&w_delta_lambda - target).norm();
    Ok(DualNewtonStep { delta_lambda, w_delta_lambda, y, identity_residual, system_residual })
}

/// `−W Q W x` with `Q = blockdiag(∇²f_i(x_i) + μI)`: the one-hop estimate of
/// `WΔλ` that Newton dual updates use.
pub fn dish_newton_estimate(instance: &ProblemInstance, mu: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
    let topo = instance.topology();
    let wx = topo.apply_w(x)?;
    let d = instance.d();
    let mut qwx = DVector::zeros(instance.stacked_dim());
    for (i, h) in instance.hessian_blocks(x).into_iter().enumerate() {
        let q = h + DMatrix::identity(d, d) * mu;
        qwx.rows_mut(i * d, d).copy_from(&(q * wx.rows(i * d, d)));
    }
    Ok(-topo.apply_w(&qwx)?)
}
