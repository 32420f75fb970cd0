//! Problem and stepsize constants, the contraction rate and the error envelope.

use serde::Serialize;

use crate::engine::{DualKind, PrimalKind, Stepsizes, UpdateKind, UpdateSchedule};
use crate::error::{DishError, Result};
use crate::objectives::ProblemInstance;

/// Eigenvalue bounds `[lo, hi]` of a local primal update matrix.
fn primal_bounds(kind: PrimalKind, s_i: f64, l_i: f64, mu: f64, z_ii: f64) -> (f64, f64) {
    let shift = match kind {
        PrimalKind::Gradient => return (1.0, 1.0),
        PrimalKind::Newton => mu,
        PrimalKind::Esom => mu * (1.0 - z_ii),
    };
    ((1.0 / (l_i + shift)).min(1.0), (1.0 / (s_i + shift)).max(1.0))
}

fn dual_bounds(kind: DualKind, s_i: f64, l_i: f64, mu: f64) -> (f64, f64) {
    match kind {
        DualKind::Gradient => (1.0, 1.0),
        DualKind::Newton => ((s_i + mu).min(1.0), (l_i + mu).max(1.0)),
    }
}

/// Per-agent `p̲_i, p̄_i, q̲_i, q̄_i` over every kind the schedule may pick.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgentBounds {
    pub p_lo: Vec<f64>,
    pub p_hi: Vec<f64>,
    pub q_lo: Vec<f64>,
    pub q_hi: Vec<f64>,
}

impl AgentBounds {
    pub fn new(instance: &ProblemInstance, schedule: &UpdateSchedule, mu: f64) -> Result<Self> {
        let n = instance.n();
        if schedule.n() != n {
            return Err(DishError::DimensionMismatch { expected: n, found: schedule.n() });
        }
        let mut out = Self { p_lo: vec![], p_hi: vec![], q_lo: vec![], q_hi: vec![] };
        for i in 0..n {
            let f = instance.objective(i);
            let (s_i, l_i) = (f.strong_convexity(), f.smoothness());
            let z_ii = instance.topology().z_ij(i, i);
            let kinds: Vec<UpdateKind> = schedule.possible_kinds(i);
            let p: Vec<_> = kinds.iter().map(|k| primal_bounds(k.primal, s_i, l_i, mu, z_ii)).collect();
            let q: Vec<_> = kinds.iter().map(|k| dual_bounds(k.dual, s_i, l_i, mu)).collect();
            out.p_lo.push(p.iter().map(|b| b.0).fold(f64::INFINITY, f64::min));
            out.p_hi.push(p.iter().map(|b| b.1).fold(0.0, f64::max));
            out.q_lo.push(q.iter().map(|b| b.0).fold(f64::INFINITY, f64::min));
            out.q_hi.push(q.iter().map(|b| b.1).fold(0.0, f64::max));
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantCatalog {
    pub s: f64,
    pub l: f64,
    pub mu: f64,
    pub gamma: f64,
    /// `ℓ + 2μ`, smoothness of `L(·, λ)`.
    pub l_lagrangian: f64,
    /// PL constant of `−g`.
    pub p_g: f64,
    /// Lipschitz constant of `∇g`.
    pub l_g: f64,
    pub bounds: AgentBounds,
    /// `min_i a_i p̲_i`.
    pub alpha_lo: f64,
    /// `min_i b_i q̲_i`.
    pub beta_lo: f64,
    /// `max_i b_i q̄_i`.
    pub beta: f64,
}

impl ConstantCatalog {
    pub fn new(instance: &ProblemInstance, schedule: &UpdateSchedule, steps: &Stepsizes) -> Result<Self> {
        steps.validate(instance.n())?;
        let bounds = AgentBounds::new(instance, schedule, steps.mu)?;
        Ok(Self::assemble(instance, bounds, steps))
    }

    fn assemble(instance: &ProblemInstance, bounds: AgentBounds, steps: &Stepsizes) -> Self {
        let (s, l, mu) = (instance.s(), instance.l(), steps.mu);
        let gamma = instance.topology().gamma();
        let zip_min = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(a, b)| a * b).fold(f64::INFINITY, f64::min);
        let alpha_lo = zip_min(&steps.a, &bounds.p_lo);
        let beta_lo = zip_min(&steps.b, &bounds.q_lo);
        let beta = steps.b.iter().zip(&bounds.q_hi).map(|(a, b)| a * b).fold(0.0, f64::max);
        Self {
            s,
            l,
            mu,
            gamma,
            l_lagrangian: l + 2.0 * mu,
            p_g: (1.0 - gamma) / (l + 2.0 * mu),
            l_g: 4.0 / s,
            bounds,
            alpha_lo,
            beta_lo,
            beta,
        }
    }

    /// `min{(1−γ)β̲ / [9(ℓ+4μ)], s α̲ / 2}`.
    pub fn rho(&self) -> f64 {
        self.rate_with(self.l + 4.0 * self.mu)
    }

    /// Same rate with the tighter `ℓ+2μ` denominator.
    pub fn rho_proof(&self) -> f64 {
        self.rate_with(self.l + 2.0 * self.mu)
    }

    fn rate_with(&self, denom: f64) -> f64 {
        ((1.0 - self.gamma) * self.beta_lo / (9.0 * denom)).min(self.s * self.alpha_lo / 2.0)
    }

    /// Envelope constant `c = 4 ℓ_L Δ⁰ / [s · min{ℓ_L, 9s}]`.
    pub fn envelope_constant(&self, delta0: f64) -> f64 {
        4.0 * self.l_lagrangian * delta0 / (self.s * self.l_lagrangian.min(9.0 * self.s))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoreticalStepsizes {
    pub steps: Stepsizes,
    pub catalog: ConstantCatalog,
    pub rho: f64,
    pub rho_proof: f64,
}

/// Largest stepsizes allowed by the convergence theorem for this schedule:
/// `a_i = 1/[2p̄_i(s/16+ℓ+2μ)]`, then `b_i = min{s/64, α̲s²/60}/q̄_i`.
pub fn theoretical_stepsizes(
    instance: &ProblemInstance,
    schedule: &UpdateSchedule,
    mu: f64,
) -> Result<TheoreticalStepsizes> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(DishError::InvalidParameter(format!("mu must be finite and >= 0, got {mu}")));
    }
    let bounds = AgentBounds::new(instance, schedule, mu)?;
    let (s, l) = (instance.s(), instance.l());
    let a: Vec<f64> = bounds.p_hi.iter().map(|p| 1.0 / (2.0 * p * (s / 16.0 + l + 2.0 * mu))).collect();
    let alpha_lo = a.iter().zip(&bounds.p_lo).map(|(a, p)| a * p).fold(f64::INFINITY, f64::min);
    let cap = (s / 64.0).min(alpha_lo * s * s / 60.0);
    let b = bounds.q_hi.iter().map(|q| cap / q).collect();
    let steps = Stepsizes { a, b, mu };
    let catalog = ConstantCatalog::assemble(instance, bounds, &steps);
    Ok(TheoreticalStepsizes { rho: catalog.rho(), rho_proof: catalog.rho_proof(), steps, catalog })
}

/// `c (1−ρ)^k`.
pub fn corollary_envelope(catalog: &ConstantCatalog, delta0: f64, rho: f64, k: usize) -> f64 {
    catalog.envelope_constant(delta0) * (1.0 - rho).powf(k as f64)
}
