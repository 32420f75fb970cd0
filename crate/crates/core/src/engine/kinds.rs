use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{DishError, Result};
use crate::objectives::LocalObjective;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimalKind {
    /// `P_i = I`.
    Gradient,
    /// `P_i = (∇²f_i(x_i) + μ I)⁻¹`.
    Newton,
    /// `P_i = (∇²f_i(x_i) + μ(1 − z_ii) I)⁻¹`, the block-diagonal part of the
    /// augmented primal Hessian.
    Esom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DualKind {
    /// `Q_i = I`.
    Gradient,
    /// `Q_i = ∇²f_i(x_i) + μ I`.
    Newton,
}

/// The pair of local update matrices an agent uses in one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct UpdateKind {
    pub primal: PrimalKind,
    pub dual: DualKind,
}

impl UpdateKind {
    pub const GRADIENT: Self = Self { primal: PrimalKind::Gradient, dual: DualKind::Gradient };
    pub const NEWTON: Self = Self { primal: PrimalKind::Newton, dual: DualKind::Newton };
    pub const ESOM: Self = Self { primal: PrimalKind::Esom, dual: DualKind::Gradient };

    pub fn new(primal: PrimalKind, dual: DualKind) -> Self {
        Self { primal, dual }
    }

    pub fn needs_hessian(&self) -> bool {
        self.primal != PrimalKind::Gradient || self.dual != DualKind::Gradient
    }

    /// Two-letter tag, primal then dual: `g`/`n`/`e` and `g`/`n`.
    pub fn tag(&self) -> &'static str {
        match (self.primal, self.dual) {
            (PrimalKind::Gradient, DualKind::Gradient) => "gg",
            (PrimalKind::Gradient, DualKind::Newton) => "gn",
            (PrimalKind::Newton, DualKind::Gradient) => "ng",
            (PrimalKind::Newton, DualKind::Newton) => "nn",
            (PrimalKind::Esom, DualKind::Gradient) => "eg",
            (PrimalKind::Esom, DualKind::Newton) => "en",
        }
    }

    pub fn all() -> [Self; 6] {
        use DualKind as D;
        use PrimalKind as P;
        [
            Self::new(P::Gradient, D::Gradient),
            Self::new(P::Gradient, D::Newton),
            Self::new(P::Newton, D::Gradient),
            Self::new(P::Newton, D::Newton),
            Self::new(P::Esom, D::Gradient),
            Self::new(P::Esom, D::Newton),
        ]
    }
}

impl fmt::Display for UpdateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

fn spd_inverse(m: DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    m.cholesky().map(|c| c.inverse()).ok_or_else(|| DishError::NotPositiveDefinite(what.to_string()))
}

/// Primal update matrix `P_i` given the agent's current Hessian.
pub(crate) fn primal_matrix_from_hessian(
    kind: PrimalKind,
    hessian: &DMatrix<f64>,
    mu: f64,
    z_ii: f64,
) -> Result<DMatrix<f64>> {
    let d = hessian.nrows();
    match kind {
        PrimalKind::Gradient => Ok(DMatrix::identity(d, d)),
        PrimalKind::Newton => spd_inverse(hessian + DMatrix::identity(d, d) * mu, "Newton primal matrix"),
        PrimalKind::Esom => spd_inverse(hessian + DMatrix::identity(d, d) * (mu * (1.0 - z_ii)), "ESOM primal matrix"),
    }
}

pub(crate) fn dual_matrix_from_hessian(kind: DualKind, hessian: &DMatrix<f64>, mu: f64) -> DMatrix<f64> {
    let d = hessian.nrows();
    match kind {
        DualKind::Gradient => DMatrix::identity(d, d),
        DualKind::Newton => hessian + DMatrix::identity(d, d) * mu,
    }
}

/// `P_i^k` for agent `i` at its current local iterate.
pub fn primal_update_matrix(
    kind: PrimalKind,
    objective: &dyn LocalObjective,
    x_i: &[f64],
    mu: f64,
    z_ii: f64,
) -> Result<DMatrix<f64>> {
    let d = objective.dim();
    if x_i.len() != d {
        return Err(DishError::DimensionMismatch { expected: d, found: x_i.len() });
    }
    match kind {
        PrimalKind::Gradient => Ok(DMatrix::identity(d, d)),
        _ => primal_matrix_from_hessian(kind, &objective.hessian(x_i), mu, z_ii),
    }
}

/// `Q_i^k` for agent `i` at its current local iterate.
pub fn dual_update_matrix(
    kind: DualKind,
    objective: &dyn LocalObjective,
    x_i: &[f64],
    mu: f64,
) -> Result<DMatrix<f64>> {
    let d = objective.dim();
    if x_i.len() != d {
        return Err(DishError::DimensionMismatch { expected: d, found: x_i.len() });
    }
    match kind {
        DualKind::Gradient => Ok(DMatrix::identity(d, d)),
        DualKind::Newton => Ok(dual_matrix_from_hessian(kind, &objective.hessian(x_i), mu)),
    }
}
