//! Local objectives `f_i` and the problem instances built from them.
//!
//! Every agent owns a smooth, strongly convex `f_i : R^d → R` and reports
//! certified curvature bounds `s_i I ⪯ ∇²f_i ⪯ l_i I`. A [`ProblemInstance`]
//! bundles the agents with their consensus matrix and the centralized
//! minimizer of `Σ f_i`.

mod functions;
mod generators;

use std::fmt::Debug;

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

pub use functions::{sigmoid, softplus, LeastSquares, Logistic, Quadratic};
pub use generators::{
    least_squares_from_data, logistic_from_data, make_least_squares, make_logistic, make_quadratic_toy,
    quadratic_toy_ring, NormalParams, SyntheticParams,
};

use crate::error::{DishError, Result};
use crate::topology::{custom_matrix, ConsensusMatrix, Graph};
use functions::{matrix_from_json, matrix_to_json};

/// Gradient-norm target for the centralized solve.
pub const CENTRALIZED_TOL: f64 = 1e-12;

/// A twice differentiable, strongly convex function held by one agent.
pub trait LocalObjective: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> DVector<f64>;
    /// Writes `∇f_i(x)` into `out` without allocating where possible.
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(self.gradient(x).as_slice());
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
    /// `s_i`, a lower bound on the Hessian spectrum.
    fn strong_convexity(&self) -> f64;
    /// `l_i`, an upper bound on the Hessian spectrum.
    fn smoothness(&self) -> f64;
    fn hessian_is_constant(&self) -> bool {
        false
    }
    /// Tag used in instance dumps.
    fn kind(&self) -> &'static str {
        "opaque"
    }
    fn to_json(&self) -> Value;
}

/// Origin of an instance, kept for dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceMeta {
    pub kind: String,
    pub seed: Option<u64>,
    pub params: Value,
}

impl InstanceMeta {
    pub fn custom() -> Self {
        Self { kind: "custom".into(), seed: None, params: Value::Null }
    }
}

#[derive(Debug)]
pub struct ProblemInstance {
    objectives: Vec<Box<dyn LocalObjective>>,
    topology: ConsensusMatrix,
    x_opt: DVector<f64>,
    s: f64,
    l: f64,
    meta: InstanceMeta,
}

impl ProblemInstance {
    /// Assembles an instance and solves the centralized problem for `x_opt`.
    pub fn new(
        objectives: Vec<Box<dyn LocalObjective>>,
        topology: ConsensusMatrix,
        meta: InstanceMeta,
    ) -> Result<Self> {
        let n = topology.node_count();
        if objectives.len() != n {
            return Err(DishError::DimensionMismatch { expected: n, found: objectives.len() });
        }
        let d = objectives[0].dim();
        if let Some(bad) = objectives.iter().find(|f| f.dim() != d) {
            return Err(DishError::DimensionMismatch { expected: d, found: bad.dim() });
        }
        let topology = if topology.block_dim() == d { topology } else { topology.with_block_dim(d) };
        let s = objectives.iter().map(|f| f.strong_convexity()).fold(f64::INFINITY, f64::min);
        let l = objectives.iter().map(|f| f.smoothness()).fold(0.0, f64::max);
        if s.is_nan() || s <= 0.0 {
            return Err(DishError::NotPositiveDefinite(format!("strong convexity constant s = {s}")));
        }
        let x_opt = centralized_newton(&objectives, &DVector::zeros(d), CENTRALIZED_TOL)?;
        Ok(Self { objectives, topology, x_opt, s, l, meta })
    }

    pub fn n(&self) -> usize {
        self.objectives.len()
    }

    pub fn d(&self) -> usize {
        self.topology.block_dim()
    }

    pub fn stacked_dim(&self) -> usize {
        self.n() * self.d()
    }

    pub fn objective(&self, i: usize) -> &dyn LocalObjective {
        self.objectives[i].as_ref()
    }

    pub fn objectives(&self) -> &[Box<dyn LocalObjective>] {
        &self.objectives
    }

    pub fn topology(&self) -> &ConsensusMatrix {
        &self.topology
    }

    pub fn meta(&self) -> &InstanceMeta {
        &self.meta
    }

    pub(crate) fn set_seed(&mut self, seed: u64) {
        self.meta.seed = Some(seed);
    }

    pub fn x_opt(&self) -> &DVector<f64> {
        &self.x_opt
    }

    /// `1_n ⊗ x_opt`.
    pub fn x_opt_stacked(&self) -> DVector<f64> {
        stack_copies(&self.x_opt, self.n())
    }

    /// `min_i s_i`.
    pub fn s(&self) -> f64 {
        self.s
    }

    /// `max_i l_i`.
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn hessians_constant(&self) -> bool {
        self.objectives.iter().all(|f| f.hessian_is_constant())
    }

    /// Block `i` of a stacked vector.
    pub fn block<'a>(&self, x: &'a DVector<f64>, i: usize) -> &'a [f64] {
        let d = self.d();
        &x.as_slice()[i * d..(i + 1) * d]
    }

    pub fn check_stacked(&self, v: &DVector<f64>) -> Result<()> {
        if v.len() == self.stacked_dim() {
            Ok(())
        } else {
            Err(DishError::DimensionMismatch { expected: self.stacked_dim(), found: v.len() })
        }
    }

    /// `f(x) = Σ_i f_i(x_i)`.
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        (0..self.n()).map(|i| self.objectives[i].value(self.block(x, i))).sum()
    }

    /// Stacked `∇f(x)`.
    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = self.d();
        let mut out = DVector::zeros(self.stacked_dim());
        for i in 0..self.n() {
            out.rows_mut(i * d, d).copy_from(&self.objectives[i].gradient(self.block(x, i)));
        }
        out
    }

    pub fn hessian_blocks(&self, x: &DVector<f64>) -> Vec<DMatrix<f64>> {
        (0..self.n()).map(|i| self.objectives[i].hessian(self.block(x, i))).collect()
    }

    /// Block-diagonal `∇²f(x)` as a dense `nd × nd` matrix.
    pub fn hessian_dense(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let d = self.d();
        let mut h = DMatrix::zeros(self.stacked_dim(), self.stacked_dim());
        for (i, block) in self.hessian_blocks(x).into_iter().enumerate() {
            h.view_mut((i * d, i * d), (d, d)).copy_from(&block);
        }
        h
    }

    /// Value of `Σ_i f_i(ω)` at a single shared point.
    pub fn global_value(&self, w: &DVector<f64>) -> f64 {
        self.objectives.iter().map(|f| f.value(w.as_slice())).sum()
    }

    pub fn global_gradient(&self, w: &DVector<f64>) -> DVector<f64> {
        self.objectives.iter().fold(DVector::zeros(self.d()), |acc, f| acc + f.gradient(w.as_slice()))
    }

    /// JSON dump: `{kind, n, d, seed, params, x_opt}` plus the graph, `Z`
    /// and every agent's data.
    pub fn to_json(&self) -> Value {
        let agents: Vec<Value> = self
            .objectives
            .iter()
            .map(|f| {
                let mut v = f.to_json();
                v["type"] = json!(f.kind());
                v
            })
            .collect();
        json!({
            "kind": self.meta.kind,
            "n": self.n(),
            "d": self.d(),
            "seed": self.meta.seed,
            "params": self.meta.params,
            "x_opt": self.x_opt.as_slice(),
            "edges": self.topology.graph().edges(),
            "z": matrix_to_json(self.topology.z()),
            "agents": agents,
        })
    }

    /// Rebuilds an instance from [`to_json`](Self::to_json) output. `x_opt`
    /// is recomputed rather than trusted.
    pub fn from_json(v: &Value) -> Result<Self> {
        let field = |k: &str| v.get(k).ok_or_else(|| DishError::Parse(format!("instance missing {k:?}")));
        let n: usize = serde_json::from_value(field("n")?.clone())?;
        let d: usize = serde_json::from_value(field("d")?.clone())?;
        let edges: Vec<(usize, usize)> = serde_json::from_value(field("edges")?.clone())?;
        let z = matrix_from_json(field("z")?)?;
        let topology = custom_matrix(&Graph::new(n, edges)?, z, d)?;
        let agents = field("agents")?.as_array().ok_or_else(|| DishError::Parse("agents must be an array".into()))?;
        let objectives = agents.iter().map(objective_from_json).collect::<Result<Vec<_>>>()?;
        let meta = InstanceMeta {
            kind: v.get("kind").and_then(Value::as_str).unwrap_or("custom").to_string(),
            seed: v.get("seed").and_then(Value::as_u64),
            params: v.get("params").cloned().unwrap_or(Value::Null),
        };
        Self::new(objectives, topology, meta)
    }
}

fn objective_from_json(v: &Value) -> Result<Box<dyn LocalObjective>> {
    let num = |k: &str| -> Result<Value> {
        v.get(k).cloned().ok_or_else(|| DishError::Parse(format!("agent missing {k:?}")))
    };
    match v.get("type").and_then(Value::as_str) {
        Some("quadratic") => {
            let c: Vec<f64> = serde_json::from_value(num("center")?)?;
            Ok(Box::new(Quadratic::new(DVector::from_vec(c))))
        }
        Some("least_squares") => {
            let a = matrix_from_json(&num("features")?)?;
            let y: Vec<f64> = serde_json::from_value(num("response")?)?;
            let total: usize = serde_json::from_value(num("total_samples")?)?;
            let ridge: f64 = serde_json::from_value(num("ridge")?)?;
            Ok(Box::new(LeastSquares::new(a, DVector::from_vec(y), total, ridge)?))
        }
        Some("logistic") => {
            let a = matrix_from_json(&num("features")?)?;
            let y: Vec<f64> = serde_json::from_value(num("labels")?)?;
            let total: usize = serde_json::from_value(num("total_samples")?)?;
            let ridge: f64 = serde_json::from_value(num("ridge")?)?;
            Ok(Box::new(Logistic::new(a, DVector::from_vec(y), total, ridge)?))
        }
        other => Err(DishError::Parse(format!("unknown agent type {other:?}"))),
    }
}

/// `1_n ⊗ v`.
pub fn stack_copies(v: &DVector<f64>, n: usize) -> DVector<f64> {
    let d = v.len();
    DVector::from_fn(n * d, |r, _| v[r % d])
}

/// Damped Newton on `Σ_i f_i(ω)` from `start`, stopping once the gradient norm
/// drops to `tol`.
pub fn centralized_newton(
    objectives: &[Box<dyn LocalObjective>],
    start: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>> {
    const MAX_ITERS: usize = 200;
    let d = start.len();
    let total = |w: &DVector<f64>| objectives.iter().map(|f| f.value(w.as_slice())).sum::<f64>();
    let grad = |w: &DVector<f64>| objectives.iter().fold(DVector::zeros(d), |acc, f| acc + f.gradient(w.as_slice()));
    let mut w = start.clone();
    let mut g = grad(&w);
    for _ in 0..MAX_ITERS {
        if g.norm() <= tol {
            return Ok(w);
        }
        let h = objectives.iter().fold(DMatrix::zeros(d, d), |acc, f| acc + f.hessian(w.as_slice()));
        let step = h.cholesky().ok_or_else(|| DishError::NotPositiveDefinite("aggregate Hessian".into()))?.solve(&g);
        let f0 = total(&w);
        let slope = g.dot(&step);
        let mut t = 1.0;
        let mut next = &w - &step * t;
        let mut next_g = grad(&next);
        // near the optimum f differences drop below round-off; a smaller
        // gradient is then the usable signal
        while total(&next) > f0 - 1e-4 * t * slope && next_g.norm() >= g.norm() && t > 1e-10 {
            t *= 0.5;
            next = &w - &step * t;
            next_g = grad(&next);
        }
        if next_g.norm() >= g.norm() && (&next - &w).norm() <= 1e-15 * (1.0 + w.norm()) {
            // stalled at round-off level
            break;
        }
        w = next;
        g = next_g;
    }
    if g.norm() <= tol.max(1e-10) {
        Ok(w)
    } else {
        Err(DishError::InnerSolveFailed { iterations: MAX_ITERS, residual: g.norm() })
    }
}
