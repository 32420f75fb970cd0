use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use super::{DualKind, PrimalKind, UpdateKind};
use crate::error::{DishError, Result};

/// How the lognormal `spread` parameter is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spread {
    #[default]
    Variance,
    StdDev,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PeriodDistribution {
    Uniform,
    Lognormal,
}

fn default_lo() -> u32 {
    5
}
fn default_hi() -> u32 {
    50
}
fn default_log_mean() -> f64 {
    2.0
}
fn default_log_spread() -> f64 {
    4.0
}
fn default_shift() -> f64 {
    30.0
}

/// Config-level description of a schedule.
///
/// ```json
/// {"kind": "dish_k", "K": 3}
/// {"kind": "switching", "dist": "uniform", "lo": 5, "hi": 50, "seed": 7}
/// {"kind": "constant", "primal": "newton", "dual": "gradient"}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSpec {
    Constant {
        primal: PrimalKind,
        dual: DualKind,
    },
    DishK {
        #[serde(rename = "K")]
        k: usize,
    },
    Switching {
        dist: PeriodDistribution,
        #[serde(default = "default_lo")]
        lo: u32,
        #[serde(default = "default_hi")]
        hi: u32,
        /// Mean of the underlying normal for lognormal periods.
        #[serde(default = "default_log_mean")]
        log_mean: f64,
        #[serde(default = "default_log_spread")]
        log_spread: f64,
        #[serde(default)]
        spread_is: Spread,
        #[serde(default = "default_shift")]
        shift: f64,
        seed: u64,
    },
}

impl ScheduleSpec {
    pub fn uniform_switching(lo: u32, hi: u32, seed: u64) -> Self {
        Self::Switching {
            dist: PeriodDistribution::Uniform,
            lo,
            hi,
            log_mean: default_log_mean(),
            log_spread: default_log_spread(),
            spread_is: Spread::Variance,
            shift: default_shift(),
            seed,
        }
    }

    pub fn lognormal_switching(log_mean: f64, log_spread: f64, spread_is: Spread, shift: f64, seed: u64) -> Self {
        Self::Switching {
            dist: PeriodDistribution::Lognormal,
            lo: default_lo(),
            hi: default_hi(),
            log_mean,
            log_spread,
            spread_is,
            shift,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum AgentPlan {
    Fixed(UpdateKind),
    /// Alternates between gradient and Newton updates every `period`
    /// iterations, starting from Newton when `newton_first`.
    Switching {
        period: usize,
        newton_first: bool,
    },
}

/// Per-agent, per-iteration choice of update matrices. Deterministic in
/// `(agent, iteration)` once built.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateSchedule {
    plans: Vec<AgentPlan>,
}

impl UpdateSchedule {
    pub fn constant(n: usize, kind: UpdateKind) -> Self {
        Self { plans: vec![AgentPlan::Fixed(kind); n] }
    }

    pub fn all_gradient(n: usize) -> Self {
        Self::constant(n, UpdateKind::GRADIENT)
    }

    pub fn all_newton(n: usize) -> Self {
        Self::constant(n, UpdateKind::NEWTON)
    }

    pub fn esom0(n: usize) -> Self {
        Self::constant(n, UpdateKind::ESOM)
    }

    /// Agents `0..k` take Newton updates in both spaces, the rest gradient.
    pub fn dish_k(n: usize, k: usize) -> Self {
        let plans =
            (0..n).map(|i| AgentPlan::Fixed(if i < k { UpdateKind::NEWTON } else { UpdateKind::GRADIENT })).collect();
        Self { plans }
    }

    /// Agents flip between gradient and Newton every `periods[i]` iterations.
    pub fn switching(periods: &[usize], newton_first: &[bool]) -> Result<Self> {
        if periods.len() != newton_first.len() {
            return Err(DishError::DimensionMismatch { expected: periods.len(), found: newton_first.len() });
        }
        if periods.contains(&0) {
            return Err(DishError::InvalidParameter("switching periods must be positive".into()));
        }
        let plans = periods
            .iter()
            .zip(newton_first)
            .map(|(&period, &newton_first)| AgentPlan::Switching { period, newton_first })
            .collect();
        Ok(Self { plans })
    }

    pub fn from_spec(spec: &ScheduleSpec, n: usize) -> Result<Self> {
        match *spec {
            ScheduleSpec::Constant { primal, dual } => Ok(Self::constant(n, UpdateKind::new(primal, dual))),
            ScheduleSpec::DishK { k } => {
                if k > n {
                    return Err(DishError::Config(format!("DISH-K with K={k} exceeds n={n}")));
                }
                Ok(Self::dish_k(n, k))
            }
            ScheduleSpec::Switching { dist, lo, hi, log_mean, log_spread, spread_is, shift, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let lognormal = match dist {
                    PeriodDistribution::Lognormal => {
                        let sd = match spread_is {
                            Spread::Variance => log_spread.sqrt(),
                            Spread::StdDev => log_spread,
                        };
                        Some(LogNormal::new(log_mean, sd).map_err(|e| DishError::Config(e.to_string()))?)
                    }
                    PeriodDistribution::Uniform => {
                        if lo == 0 || lo > hi {
                            return Err(DishError::Config(format!("bad uniform period range [{lo}, {hi}]")));
                        }
                        None
                    }
                };
                let mut periods = Vec::with_capacity(n);
                let mut first = Vec::with_capacity(n);
                for _ in 0..n {
                    let period = match &lognormal {
                        Some(ln) => (ln.sample(&mut rng) + shift).round().max(1.0) as usize,
                        None => rng.random_range(lo..=hi) as usize,
                    };
                    periods.push(period);
                    first.push(rng.random_bool(0.5));
                }
                Self::switching(&periods, &first)
            }
        }
    }

    pub fn n(&self) -> usize {
        self.plans.len()
    }

    pub fn kind_at(&self, agent: usize, k: usize) -> UpdateKind {
        match self.plans[agent] {
            AgentPlan::Fixed(kind) => kind,
            AgentPlan::Switching { period, newton_first } => {
                let flipped = (k / period) % 2 == 1;
                if newton_first != flipped {
                    UpdateKind::NEWTON
                } else {
                    UpdateKind::GRADIENT
                }
            }
        }
    }

    /// Every kind agent `i` may ever use.
    pub fn possible_kinds(&self, agent: usize) -> Vec<UpdateKind> {
        match self.plans[agent] {
            AgentPlan::Fixed(kind) => vec![kind],
            AgentPlan::Switching { .. } => vec![UpdateKind::GRADIENT, UpdateKind::NEWTON],
        }
    }

    /// True when agent `i` always uses a Newton-type primal matrix.
    pub fn always_newton_primal(&self, agent: usize) -> bool {
        self.possible_kinds(agent).iter().all(|k| k.primal != PrimalKind::Gradient)
    }

    pub fn periods(&self) -> Vec<Option<usize>> {
        self.plans
            .iter()
            .map(|p| match p {
                AgentPlan::Fixed(_) => None,
                AgentPlan::Switching { period, .. } => Some(*period),
            })
            .collect()
    }
}
