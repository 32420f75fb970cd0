use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::kinds::{dual_matrix_from_hessian, primal_matrix_from_hessian};
use super::{DualKind, PrimalKind, UpdateKind, UpdateSchedule};
use crate::error::{DishError, Result};
use crate::objectives::{LocalObjective, ProblemInstance};

/// Personalized stepsizes `a_i`, `b_i` and the augmentation penalty `μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stepsizes {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub mu: f64,
}

impl Stepsizes {
    pub fn uniform(n: usize, a: f64, b: f64, mu: f64) -> Self {
        Self { a: vec![a; n], b: vec![b; n], mu }
    }

    /// Uniform stepsizes except `a_i = 1` for agents that always take a
    /// Newton-type primal step.
    pub fn uniform_newton_unit(schedule: &UpdateSchedule, a: f64, b: f64, mu: f64) -> Self {
        let n = schedule.n();
        let a = (0..n).map(|i| if schedule.always_newton_primal(i) { 1.0 } else { a }).collect();
        Self { a, b: vec![b; n], mu }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.a.len() != n || self.b.len() != n {
            return Err(DishError::DimensionMismatch { expected: n, found: self.a.len().min(self.b.len()) });
        }
        if self.a.iter().chain(&self.b).any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(DishError::InvalidParameter("stepsizes must be positive and finite".into()));
        }
        if !(self.mu >= 0.0 && self.mu.is_finite()) {
            return Err(DishError::InvalidParameter(format!("mu must be finite and >= 0, got {}", self.mu)));
        }
        Ok(())
    }
}

/// Stacked primal and dual iterates at iteration `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunState {
    pub x: DVector<f64>,
    pub lambda: DVector<f64>,
    pub k: usize,
}

impl RunState {
    pub fn new(x: DVector<f64>, lambda: DVector<f64>) -> Self {
        Self { x, lambda, k: 0 }
    }

    pub fn zeros(nd: usize) -> Self {
        Self::new(DVector::zeros(nd), DVector::zeros(nd))
    }

    pub fn is_finite(&self) -> bool {
        self.x.iter().chain(self.lambda.iter()).all(|v| v.is_finite())
    }
}

/// Local update matrices used by one agent in one iteration. `None` stands
/// for the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalMatrices {
    pub primal: Option<DMatrix<f64>>,
    pub dual: Option<DMatrix<f64>>,
}

impl LocalMatrices {
    pub fn primal_dense(&self, d: usize) -> DMatrix<f64> {
        self.primal.clone().unwrap_or_else(|| DMatrix::identity(d, d))
    }

    pub fn dual_dense(&self, d: usize) -> DMatrix<f64> {
        self.dual.clone().unwrap_or_else(|| DMatrix::identity(d, d))
    }
}

pub(crate) fn local_matrices(
    kind: UpdateKind,
    objective: &dyn LocalObjective,
    x_i: &[f64],
    mu: f64,
    z_ii: f64,
) -> Result<LocalMatrices> {
    if !kind.needs_hessian() {
        return Ok(LocalMatrices { primal: None, dual: None });
    }
    let h = objective.hessian(x_i);
    let primal = match kind.primal {
        PrimalKind::Gradient => None,
        p => Some(primal_matrix_from_hessian(p, &h, mu, z_ii)?),
    };
    let dual = match kind.dual {
        DualKind::Gradient => None,
        q => Some(dual_matrix_from_hessian(q, &h, mu)),
    };
    Ok(LocalMatrices { primal, dual })
}

/// `out = m v` for a column-major square `m`.
fn mat_vec_into(m: &DMatrix<f64>, v: &[f64], out: &mut [f64]) {
    let d = v.len();
    let data = m.as_slice();
    out.fill(0.0);
    for (j, vj) in v.iter().enumerate() {
        for (o, mij) in out.iter_mut().zip(&data[j * d..(j + 1) * d]) {
            *o += mij * vj;
        }
    }
}

/// One agent's primal and dual step given its local consensus residuals
/// `w_x = [W x]_i` and `w_lambda = [W λ]_i`. Both engines route through here.
/// `scratch` needs room for `2d` values.
#[allow(clippy::too_many_arguments)]
pub(crate) fn local_update(
    objective: &dyn LocalObjective,
    mats: &LocalMatrices,
    a: f64,
    b: f64,
    mu: f64,
    x_i: &[f64],
    lambda_i: &[f64],
    w_x: &[f64],
    w_lambda: &[f64],
    x_out: &mut [f64],
    lambda_out: &mut [f64],
    scratch: &mut [f64],
) {
    let d = x_i.len();
    let (r, step) = scratch[..2 * d].split_at_mut(d);
    objective.gradient_into(x_i, r);
    for c in 0..d {
        r[c] += w_lambda[c] + mu * w_x[c];
    }
    let step: &[f64] = match &mats.primal {
        Some(p) => {
            mat_vec_into(p, r, step);
            step
        }
        None => r,
    };
    for c in 0..d {
        x_out[c] = x_i[c] - a * step[c];
    }
    match &mats.dual {
        Some(q) => {
            let dual_step = &mut scratch[..d];
            mat_vec_into(q, w_x, dual_step);
            for c in 0..d {
                lambda_out[c] = lambda_i[c] + b * dual_step[c];
            }
        }
        None => {
            for c in 0..d {
                lambda_out[c] = lambda_i[c] + b * w_x[c];
            }
        }
    }
}

/// Result of one compact step, with the matrices that produced it.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub next: RunState,
    pub kinds: Vec<UpdateKind>,
    pub matrices: Vec<LocalMatrices>,
}

/// Stacked-vector DISH iteration
/// `x⁺ = x − A P (∇f(x) + Wλ + μWx)`, `λ⁺ = λ + B Q W x`,
/// with both updates reading iteration-`k` values.
#[derive(Debug)]
pub struct CompactEngine<'a> {
    instance: &'a ProblemInstance,
    schedule: &'a UpdateSchedule,
    steps: &'a Stepsizes,
    cache: Option<Vec<Option<LocalMatrices>>>,
    wx: Vec<f64>,
    wl: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> CompactEngine<'a> {
    pub fn new(instance: &'a ProblemInstance, schedule: &'a UpdateSchedule, steps: &'a Stepsizes) -> Result<Self> {
        if schedule.n() != instance.n() {
            return Err(DishError::DimensionMismatch { expected: instance.n(), found: schedule.n() });
        }
        steps.validate(instance.n())?;
        Ok(Self { instance, schedule, steps, cache: None, wx: vec![], wl: vec![], scratch: vec![] })
    }

    /// Reuse update matrices across iterations. Only takes effect when every
    /// local Hessian is constant.
    pub fn with_matrix_cache(mut self, enabled: bool) -> Self {
        let slots = self.instance.n() * UpdateKind::all().len();
        self.cache = (enabled && self.instance.hessians_constant()).then(|| vec![None; slots]);
        self
    }

    pub fn instance(&self) -> &ProblemInstance {
        self.instance
    }

    pub fn schedule(&self) -> &UpdateSchedule {
        self.schedule
    }

    pub fn steps(&self) -> &Stepsizes {
        self.steps
    }

    /// Advances `state` into `next`, reusing its buffers. When `record` is
    /// given it receives each agent's matrices.
    pub fn step_into(
        &mut self,
        state: &RunState,
        next: &mut RunState,
        mut record: Option<&mut Vec<LocalMatrices>>,
    ) -> Result<()> {
        let inst = self.instance;
        inst.check_stacked(&state.x)?;
        inst.check_stacked(&state.lambda)?;
        let (n, d, nd) = (inst.n(), inst.d(), inst.stacked_dim());
        let topo = inst.topology();
        self.wx.resize(nd, 0.0);
        self.wl.resize(nd, 0.0);
        self.scratch.resize(2 * d, 0.0);
        topo.apply_w_into(state.x.as_slice(), &mut self.wx);
        topo.apply_w_into(state.lambda.as_slice(), &mut self.wl);
        if next.x.len() != nd {
            next.x = DVector::zeros(nd);
        }
        if next.lambda.len() != nd {
            next.lambda = DVector::zeros(nd);
        }
        if let Some(rec) = record.as_deref_mut() {
            rec.clear();
        }
        let mu = self.steps.mu;
        for i in 0..n {
            let kind = self.schedule.kind_at(i, state.k);
            let span = i * d..(i + 1) * d;
            let x_i = &state.x.as_slice()[span.clone()];
            let z_ii = topo.z_ij(i, i);
            let objective = inst.objective(i);
            let owned;
            let mats: &LocalMatrices = match &mut self.cache {
                Some(cache) => {
                    let slot = &mut cache[i * UpdateKind::all().len() + kind_index(kind)];
                    if slot.is_none() {
                        *slot = Some(local_matrices(kind, objective, x_i, mu, z_ii)?);
                    }
                    slot.as_ref().expect("filled above")
                }
                None => {
                    owned = local_matrices(kind, objective, x_i, mu, z_ii)?;
                    &owned
                }
            };
            local_update(
                objective,
                mats,
                self.steps.a[i],
                self.steps.b[i],
                mu,
                x_i,
                &state.lambda.as_slice()[span.clone()],
                &self.wx[span.clone()],
                &self.wl[span.clone()],
                &mut next.x.as_mut_slice()[span.clone()],
                &mut next.lambda.as_mut_slice()[span],
                &mut self.scratch,
            );
            if let Some(rec) = record.as_deref_mut() {
                rec.push(mats.clone());
            }
        }
        next.k = state.k + 1;
        if !next.is_finite() {
            return Err(DishError::Divergence { iteration: state.k });
        }
        Ok(())
    }

    /// Advances `state` by one iteration and returns the matrices used.
    pub fn step_recorded(&mut self, state: &RunState) -> Result<StepRecord> {
        let mut next = RunState::zeros(0);
        let mut matrices = Vec::with_capacity(self.instance.n());
        self.step_into(state, &mut next, Some(&mut matrices))?;
        let kinds = (0..self.instance.n()).map(|i| self.schedule.kind_at(i, state.k)).collect();
        Ok(StepRecord { next, kinds, matrices })
    }

    pub fn step(&mut self, state: &RunState) -> Result<RunState> {
        let mut next = RunState::zeros(0);
        self.step_into(state, &mut next, None)?;
        Ok(next)
    }
}

fn kind_index(kind: UpdateKind) -> usize {
    UpdateKind::all().iter().position(|k| *k == kind).expect("every kind is listed")
}

/// One compact DISH step without caching.
pub fn step_compact(
    state: &RunState,
    instance: &ProblemInstance,
    schedule: &UpdateSchedule,
    steps: &Stepsizes,
) -> Result<RunState> {
    CompactEngine::new(instance, schedule, steps)?.step(state)
}
