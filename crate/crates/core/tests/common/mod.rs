//! Reference implementations used as oracles by the integration tests.
//! Everything here works on dense stacked matrices and never calls the
//! library's update code.

#![allow(dead_code)]

use dish::objectives::{make_least_squares, make_logistic, ProblemInstance, SyntheticParams};
use nalgebra::{DMatrix, DVector};

/// `(I − Z) ⊗ I_d` built entry by entry.
pub fn dense_w(inst: &ProblemInstance) -> DMatrix<f64> {
    let (n, d) = (inst.n(), inst.d());
    let z = inst.topology().z();
    let mut w = DMatrix::zeros(n * d, n * d);
    for i in 0..n {
        for j in 0..n {
            let v = if i == j { 1.0 - z[(i, j)] } else { -z[(i, j)] };
            for c in 0..d {
                w[(i * d + c, j * d + c)] = v;
            }
        }
    }
    w
}

pub fn stacked_gradient(inst: &ProblemInstance, x: &DVector<f64>) -> DVector<f64> {
    let d = inst.d();
    let mut g = DVector::zeros(x.len());
    for i in 0..inst.n() {
        let gi = inst.objective(i).gradient(&x.as_slice()[i * d..(i + 1) * d]);
        g.rows_mut(i * d, d).copy_from(&gi);
    }
    g
}

pub fn block_hessian(inst: &ProblemInstance, x: &DVector<f64>) -> DMatrix<f64> {
    let d = inst.d();
    let mut h = DMatrix::zeros(x.len(), x.len());
    for i in 0..inst.n() {
        let hi = inst.objective(i).hessian(&x.as_slice()[i * d..(i + 1) * d]);
        h.view_mut((i * d, i * d), (d, d)).copy_from(&hi);
    }
    h
}

fn per_agent(v: &[f64], d: usize) -> DVector<f64> {
    DVector::from_iterator(v.len() * d, v.iter().flat_map(|&a| std::iter::repeat_n(a, d)))
}

/// Augmented Arrow–Hurwicz step:
/// `x⁺ = x − a(∇f + Wλ + μWx)`, `λ⁺ = λ + bWx`.
pub fn arrow_hurwicz(
    inst: &ProblemInstance,
    a: &[f64],
    b: &[f64],
    mu: f64,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let w = dense_w(inst);
    let wx = &w * x;
    let dir = stacked_gradient(inst, x) + &w * lambda + &wx * mu;
    let a = per_agent(a, inst.d());
    let b = per_agent(b, inst.d());
    (x - a.component_mul(&dir), lambda + b.component_mul(&wx))
}

/// ESOM-0 step: primal direction scaled by `(∇²f_i + μ(1 − z_ii) I)⁻¹`
/// per agent, plain dual ascent.
pub fn esom0(
    inst: &ProblemInstance,
    a: &[f64],
    b: &[f64],
    mu: f64,
    x: &DVector<f64>,
    lambda: &DVector<f64>,
) -> (DVector<f64>, DVector<f64>) {
    let (n, d) = (inst.n(), inst.d());
    let w = dense_w(inst);
    let wx = &w * x;
    let grad_l = stacked_gradient(inst, x) + &w * lambda + &wx * mu;
    let mut d_mat = block_hessian(inst, x);
    for i in 0..n {
        let shift = mu * (1.0 - inst.topology().z()[(i, i)]);
        for c in 0..d {
            d_mat[(i * d + c, i * d + c)] += shift;
        }
    }
    let dir = d_mat.lu().solve(&grad_l).expect("ESOM-0 block matrix is invertible");
    let a = per_agent(a, d);
    let b = per_agent(b, d);
    (x - a.component_mul(&dir), lambda + b.component_mul(&wx))
}

/// Scaled-down least squares with unit feature scaling.
pub fn scaled_setup1(seed: u64) -> ProblemInstance {
    let mut p = SyntheticParams::setup1(seed);
    p.n = 6;
    p.d = 3;
    p.samples_per_agent = 20;
    p.scaling = vec![1.0; 3];
    make_least_squares(&p).expect("instance")
}

pub fn small_instance(kind: u32, n: usize, d: usize, seed: u64) -> ProblemInstance {
    let mut p = SyntheticParams::setup1(seed);
    p.n = n;
    p.d = d;
    p.p = 0.6;
    p.samples_per_agent = 10;
    p.scaling = vec![1.0; d];
    if kind == 0 {
        make_least_squares(&p).expect("instance")
    } else {
        make_logistic(&p).expect("instance")
    }
}

pub fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax()
}
