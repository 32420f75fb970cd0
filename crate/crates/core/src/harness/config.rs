//! JSON experiment description.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::engine::{DualKind, PrimalKind, RunState, ScheduleSpec};
use crate::error::{DishError, Result};
use crate::objectives::{make_least_squares, make_logistic, quadratic_toy_ring, ProblemInstance, SyntheticParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetupSpec {
    LeastSquares(SyntheticParams),
    Logistic(SyntheticParams),
    QuadraticToy {
        n: usize,
        d: usize,
        #[serde(default)]
        seed: u64,
    },
    /// Instance dump written by [`ProblemInstance::to_json`].
    Custom {
        path: PathBuf,
    },
}

impl SetupSpec {
    pub fn build(&self, base_dir: &Path) -> Result<ProblemInstance> {
        match self {
            Self::LeastSquares(p) => make_least_squares(p),
            Self::Logistic(p) => make_logistic(p),
            Self::QuadraticToy { n, d, seed } => quadratic_toy_ring(*n, *d, *seed),
            Self::Custom { path } => {
                let path = if path.is_absolute() { path.clone() } else { base_dir.join(path) };
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| DishError::Config(format!("cannot read instance {}: {e}", path.display())))?;
                let value: serde_json::Value = serde_json::from_str(&text)?;
                ProblemInstance::from_json(&value)
            }
        }
    }
}

/// How a DISH method picks its stepsizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum StepChoice {
    #[default]
    Tuned,
    Fixed {
        a: f64,
        b: f64,
        mu: f64,
    },
    Theoretical {
        mu: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum Algorithm {
    Dish {
        schedule: ScheduleSpec,
        #[serde(default)]
        steps: StepChoice,
    },
    Extra {
        #[serde(default)]
        alpha: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSpec {
    pub name: String,
    #[serde(flatten)]
    pub algorithm: Algorithm,
}

impl MethodSpec {
    pub fn dish(name: &str, schedule: ScheduleSpec) -> Self {
        Self { name: name.into(), algorithm: Algorithm::Dish { schedule, steps: StepChoice::Tuned } }
    }

    pub fn extra() -> Self {
        Self { name: "EXTRA".into(), algorithm: Algorithm::Extra { alpha: None } }
    }

    /// DISH-G, DISH-⌈n/2⌉, DISH-N, DISH-G&N, ESOM-0 and EXTRA.
    pub fn standard_suite(n: usize, switching_seed: u64) -> Vec<Self> {
        let constant = |primal, dual| ScheduleSpec::Constant { primal, dual };
        vec![
            Self::dish("DISH-G", constant(PrimalKind::Gradient, DualKind::Gradient)),
            Self::dish(&format!("DISH-{}", n.div_ceil(2)), ScheduleSpec::DishK { k: n.div_ceil(2) }),
            Self::dish("DISH-N", constant(PrimalKind::Newton, DualKind::Newton)),
            Self::dish("DISH-G&N", ScheduleSpec::uniform_switching(5, 50, switching_seed)),
            Self::dish("ESOM-0", constant(PrimalKind::Esom, DualKind::Gradient)),
            Self::extra(),
        ]
    }
}

fn default_grid_lo() -> f64 {
    1.0 / 64.0
}
fn default_grid_hi() -> f64 {
    16.0
}
fn default_grid_factor() -> f64 {
    2.0
}
fn default_target() -> f64 {
    1e-8
}
fn default_max_iters() -> usize {
    5000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningConfig {
    #[serde(default = "default_grid_lo")]
    pub grid_lo: f64,
    #[serde(default = "default_grid_hi")]
    pub grid_hi: f64,
    #[serde(default = "default_grid_factor")]
    pub grid_factor: f64,
    #[serde(default = "default_target")]
    pub target_rel_err: f64,
    #[serde(default = "default_max_iters")]
    pub max_iters: usize,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            grid_lo: default_grid_lo(),
            grid_hi: default_grid_hi(),
            grid_factor: default_grid_factor(),
            target_rel_err: default_target(),
            max_iters: default_max_iters(),
        }
    }
}

impl TuningConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.grid_lo > 0.0 && self.grid_lo <= self.grid_hi && self.grid_hi.is_finite()) {
            return Err(DishError::Config(format!("bad grid [{}, {}]", self.grid_lo, self.grid_hi)));
        }
        if self.grid_factor.is_nan() || self.grid_factor <= 1.0 {
            return Err(DishError::Config(format!("grid factor must exceed 1, got {}", self.grid_factor)));
        }
        if !(self.target_rel_err > 0.0 && self.target_rel_err < 1.0) {
            return Err(DishError::Config(format!("target_rel_err must lie in (0, 1), got {}", self.target_rel_err)));
        }
        if self.max_iters == 0 {
            return Err(DishError::Config("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    /// `lo, lo·f, lo·f², …` up to `hi`.
    pub fn grid(&self) -> Vec<f64> {
        let mut out = vec![];
        let mut v = self.grid_lo;
        while v <= self.grid_hi * (1.0 + 1e-12) {
            out.push(v);
            v *= self.grid_factor;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub setup: SetupSpec,
    pub methods: Vec<MethodSpec>,
    #[serde(default)]
    pub tuning: TuningConfig,
    pub output: PathBuf,
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub lambda0: Option<Vec<f64>>,
}

impl ExperimentConfig {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| DishError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DishError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.tuning.validate()?;
        if self.methods.is_empty() {
            return Err(DishError::Config("no methods listed".into()));
        }
        let mut names: Vec<_> = self.methods.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(DishError::Config("method names must be unique".into()));
        }
        if self.methods.iter().any(|m| m.name.is_empty() || m.name.contains(['/', '\\'])) {
            return Err(DishError::Config("method names must be non-empty and free of path separators".into()));
        }
        Ok(())
    }

    /// Initial iterate, zeros unless given.
    pub fn initial_state(&self, instance: &ProblemInstance) -> Result<RunState> {
        let nd = instance.stacked_dim();
        let pick = |v: &Option<Vec<f64>>, what: &str| -> Result<DVector<f64>> {
            match v {
                None => Ok(DVector::zeros(nd)),
                Some(v) if v.len() == nd => Ok(DVector::from_vec(v.clone())),
                Some(v) => Err(DishError::Config(format!("{what} has length {}, expected {nd}", v.len()))),
            }
        };
        Ok(RunState::new(pick(&self.x0, "x0")?, pick(&self.lambda0, "lambda0")?))
    }

    /// Setup 1 (least squares) or Setup 2 (logistic) with the standard suite.
    pub fn preset(name: &str, seed: u64, output: PathBuf) -> Result<Self> {
        let setup = match name {
            "setup1" => SetupSpec::LeastSquares(SyntheticParams::setup1(seed)),
            "setup2" => SetupSpec::Logistic(SyntheticParams::setup2(seed)),
            other => return Err(DishError::Config(format!("unknown preset {other:?}; expected setup1 or setup2"))),
        };
        let n = match &setup {
            SetupSpec::LeastSquares(p) | SetupSpec::Logistic(p) => p.n,
            _ => unreachable!(),
        };
        Ok(Self {
            setup,
            methods: MethodSpec::standard_suite(n, seed),
            tuning: TuningConfig::default(),
            output,
            x0: None,
            lambda0: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_grid() {
        let g = TuningConfig::default().grid();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 1.0 / 64.0);
        assert_eq!(*g.last().unwrap(), 16.0);
        let single = TuningConfig { grid_lo: 0.5, grid_hi: 0.5, ..TuningConfig::default() };
        assert_eq!(single.grid(), vec![0.5]);
    }

    #[test]
    fn parse_minimal_config() {
        let text = r#"{
            "setup": {"kind": "quadratic_toy", "n": 5, "d": 2},
            "methods": [
                {"name": "DISH-G", "algorithm": "dish", "schedule": {"kind": "constant", "primal": "gradient", "dual": "gradient"}},
                {"name": "DISH-2", "algorithm": "dish", "schedule": {"kind": "dish_k", "K": 2}, "steps": {"mode": "fixed", "a": 0.5, "b": 0.1, "mu": 0}},
                {"name": "EXTRA", "algorithm": "extra"}
            ],
            "output": "out"
        }"#;
        let cfg = ExperimentConfig::from_json_str(text).unwrap();
        assert_eq!(cfg.tuning, TuningConfig::default());
        assert_eq!(cfg.methods.len(), 3);
        assert!(matches!(cfg.methods[2].algorithm, Algorithm::Extra { alpha: None }));
        let inst = cfg.setup.build(Path::new(".")).unwrap();
        assert_eq!(inst.n(), 5);
    }

    #[test]
    fn rejects_bad_tuning() {
        let bad = TuningConfig { grid_lo: 2.0, grid_hi: 1.0, ..TuningConfig::default() };
        assert!(bad.validate().is_err());
        let bad = TuningConfig { target_rel_err: 1.5, ..TuningConfig::default() };
        assert!(bad.validate().is_err());
        assert!(ExperimentConfig::from_json_str("{").is_err());
    }

    #[test]
    fn presets() {
        let c = ExperimentConfig::preset("setup2", 0, "o".into()).unwrap();
        assert!(matches!(c.setup, SetupSpec::Logistic(ref p) if p.n == 20));
        assert_eq!(c.methods[1].name, "DISH-10");
        assert!(ExperimentConfig::preset("setup3", 0, "o".into()).is_err());
    }
}
