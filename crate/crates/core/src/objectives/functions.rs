use nalgebra::{DMatrix, DVector, DVectorView, SymmetricEigen};
use serde_json::{json, Value};

use super::LocalObjective;
use crate::error::{DishError, Result};

fn view(x: &[f64]) -> DVectorView<'_, f64> {
    DVectorView::from_slice(x, x.len())
}

pub(crate) fn matrix_to_json(m: &DMatrix<f64>) -> Value {
    Value::Array(m.row_iter().map(|r| json!(r.iter().copied().collect::<Vec<_>>())).collect())
}

pub(crate) fn matrix_from_json(v: &Value) -> Result<DMatrix<f64>> {
    let rows: Vec<Vec<f64>> = serde_json::from_value(v.clone())?;
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(DishError::Parse("ragged matrix".into()));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

fn extreme_eigenvalues(m: &DMatrix<f64>) -> (f64, f64) {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    (eig.min(), eig.max())
}

/// `½‖x − c‖²`.
#[derive(Debug, Clone)]
pub struct Quadratic {
    center: DVector<f64>,
}

impl Quadratic {
    pub fn new(center: DVector<f64>) -> Self {
        Self { center }
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }
}

impl LocalObjective for Quadratic {
    fn kind(&self) -> &'static str {
        "quadratic"
    }

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * (view(x) - &self.center).norm_squared()
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        view(x) - &self.center
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(self.center.iter()) {
            *o = xi - ci;
        }
    }

    fn hessian(&self, _x: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim())
    }

    fn strong_convexity(&self) -> f64 {
        1.0
    }

    fn smoothness(&self) -> f64 {
        1.0
    }

    fn hessian_is_constant(&self) -> bool {
        true
    }

    fn to_json(&self) -> Value {
        json!({ "center": self.center.as_slice() })
    }
}

/// `(1/(2N))‖A ω − y‖² + (r/2)‖ω‖²` where `N` is the network-wide sample
/// count and `r` this agent's share of the ridge penalty.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    features: DMatrix<f64>,
    response: DVector<f64>,
    total_samples: usize,
    ridge: f64,
    hessian: DMatrix<f64>,
    linear: DVector<f64>,
    s: f64,
    l: f64,
}

impl LeastSquares {
    pub fn new(features: DMatrix<f64>, response: DVector<f64>, total_samples: usize, ridge: f64) -> Result<Self> {
        if features.nrows() != response.len() {
            return Err(DishError::DimensionMismatch { expected: features.nrows(), found: response.len() });
        }
        if total_samples == 0 || ridge < 0.0 {
            return Err(DishError::InvalidParameter("need N > 0 and a nonnegative ridge".into()));
        }
        let scale = 1.0 / total_samples as f64;
        let d = features.ncols();
        let hessian = features.tr_mul(&features) * scale + DMatrix::identity(d, d) * ridge;
        let linear = features.tr_mul(&response) * scale;
        let (s, l) = extreme_eigenvalues(&hessian);
        Ok(Self { features, response, total_samples, ridge, hessian, linear, s, l })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// `(1/N) Aᵀy`, so that the gradient is `H ω − linear`.
    pub fn linear_term(&self) -> &DVector<f64> {
        &self.linear
    }
}

impl LocalObjective for LeastSquares {
    fn kind(&self) -> &'static str {
        "least_squares"
    }

    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let w = view(x);
        let r = &self.features * w - &self.response;
        0.5 * r.norm_squared() / self.total_samples as f64 + 0.5 * self.ridge * w.norm_squared()
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        &self.hessian * view(x) - &self.linear
    }

    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        let d = x.len();
        let h = self.hessian.as_slice();
        for (j, xj) in x.iter().enumerate() {
            for (o, hij) in out.iter_mut().zip(&h[j * d..(j + 1) * d]) {
                *o += hij * xj;
            }
        }
        for (o, c) in out.iter_mut().zip(self.linear.iter()) {
            *o -= c;
        }
    }

    fn hessian(&self, _x: &[f64]) -> DMatrix<f64> {
        self.hessian.clone()
    }

    fn strong_convexity(&self) -> f64 {
        self.s
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn hessian_is_constant(&self) -> bool {
        true
    }

    fn to_json(&self) -> Value {
        json!({
            "features": matrix_to_json(&self.features),
            "response": self.response.as_slice(),
            "total_samples": self.total_samples,
            "ridge": self.ridge,
        })
    }
}

/// Cross-entropy of a logistic model, `(1/N) Σ_r [log(1+e^{t_r}) − y_r t_r]`
/// with `t = A ω`, plus `(r/2)‖ω‖²`.
#[derive(Debug, Clone)]
pub struct Logistic {
    features: DMatrix<f64>,
    labels: DVector<f64>,
    total_samples: usize,
    ridge: f64,
    s: f64,
    l: f64,
}

/// `log(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

pub fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl Logistic {
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>, total_samples: usize, ridge: f64) -> Result<Self> {
        if features.nrows() != labels.len() {
            return Err(DishError::DimensionMismatch { expected: features.nrows(), found: labels.len() });
        }
        if ridge <= 0.0 {
            return Err(DishError::InvalidParameter(format!("logistic ridge must be positive, got {ridge}")));
        }
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(DishError::InvalidParameter("labels must be 0 or 1".into()));
        }
        if total_samples == 0 {
            return Err(DishError::InvalidParameter("N must be positive".into()));
        }
        let gram = features.tr_mul(&features);
        let (_, top) = extreme_eigenvalues(&gram);
        let l = ridge + top.max(0.0) / (4.0 * total_samples as f64);
        Ok(Self { features, labels, total_samples, ridge, s: ridge, l })
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn labels(&self) -> &DVector<f64> {
        &self.labels
    }
}

impl LocalObjective for Logistic {
    fn kind(&self) -> &'static str {
        "logistic"
    }

    fn dim(&self) -> usize {
        self.features.ncols()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let w = view(x);
        let logits = &self.features * w;
        let loss: f64 = logits.iter().zip(self.labels.iter()).map(|(&t, &y)| softplus(t) - y * t).sum();
        loss / self.total_samples as f64 + 0.5 * self.ridge * w.norm_squared()
    }

    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        let w = view(x);
        let mut residual = &self.features * w;
        for (t, &y) in residual.iter_mut().zip(self.labels.iter()) {
            *t = sigmoid(*t) - y;
        }
        self.features.tr_mul(&residual) / self.total_samples as f64 + w * self.ridge
    }

    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        let d = self.dim();
        let logits = &self.features * view(x);
        let mut weighted = self.features.clone();
        for (mut row, &t) in weighted.row_iter_mut().zip(logits.iter()) {
            let h = sigmoid(t);
            row *= h * (1.0 - h);
        }
        self.features.tr_mul(&weighted) / self.total_samples as f64 + DMatrix::identity(d, d) * self.ridge
    }

    fn strong_convexity(&self) -> f64 {
        self.s
    }

    fn smoothness(&self) -> f64 {
        self.l
    }

    fn to_json(&self) -> Value {
        json!({
            "features": matrix_to_json(&self.features),
            "labels": self.labels.as_slice(),
            "total_samples": self.total_samples,
            "ridge": self.ridge,
        })
    }
}
