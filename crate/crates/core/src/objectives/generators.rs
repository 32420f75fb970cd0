use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{InstanceMeta, LeastSquares, LocalObjective, Logistic, ProblemInstance, Quadratic};
use crate::error::{DishError, Result};
use crate::topology::{degree_weights, erdos_renyi, ConsensusMatrix};

/// Data streams are drawn from ChaCha stream 1; stream 0 is left to the graph.
const DATA_STREAM: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalParams {
    pub mean: f64,
    pub std_dev: f64,
}

impl Default for NormalParams {
    fn default() -> Self {
        Self { mean: 0.0, std_dev: 1.0 }
    }
}

impl NormalParams {
    fn dist(&self) -> Result<Normal<f64>> {
        Normal::new(self.mean, self.std_dev)
            .map_err(|e| DishError::InvalidParameter(format!("normal distribution: {e}")))
    }
}

/// Knobs shared by the least-squares and logistic generators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n: usize,
    pub p: f64,
    pub d: usize,
    pub samples_per_agent: usize,
    /// Global ridge penalty; each agent carries `rho / n` of it.
    pub rho: f64,
    /// Diagonal of the feature scaling matrix.
    pub scaling: Vec<f64>,
    pub seed: u64,
    #[serde(default)]
    pub features: NormalParams,
    #[serde(default)]
    pub noise: NormalParams,
    #[serde(default)]
    pub truth: NormalParams,
}

impl SyntheticParams {
    /// Least squares: 10 agents, `p = 0.7`, `d = 5`, 50 samples each,
    /// `rho = 1`, scaling `diag{10, 10, 0.1, 0.1, 0.1}`.
    pub fn setup1(seed: u64) -> Self {
        Self {
            n: 10,
            p: 0.7,
            d: 5,
            samples_per_agent: 50,
            rho: 1.0,
            scaling: vec![10.0, 10.0, 0.1, 0.1, 0.1],
            seed,
            features: NormalParams::default(),
            noise: NormalParams::default(),
            truth: NormalParams::default(),
        }
    }

    /// Logistic regression: 20 agents, `p = 0.5`, `d = 3`, 50 samples each,
    /// `rho = 1`, scaling `diag{10, 0.1, 0.1}`.
    pub fn setup2(seed: u64) -> Self {
        Self { n: 20, p: 0.5, d: 3, scaling: vec![10.0, 0.1, 0.1], ..Self::setup1(seed) }
    }

    fn validate(&self) -> Result<()> {
        if self.scaling.len() != self.d {
            return Err(DishError::DimensionMismatch { expected: self.d, found: self.scaling.len() });
        }
        if self.samples_per_agent == 0 || self.d == 0 {
            return Err(DishError::InvalidParameter("need d >= 1 and at least one sample per agent".into()));
        }
        if self.rho < 0.0 {
            return Err(DishError::InvalidParameter(format!("rho must be >= 0, got {}", self.rho)));
        }
        Ok(())
    }
}

struct RawData {
    features: Vec<DMatrix<f64>>,
    noise: Vec<DVector<f64>>,
    truth: DVector<f64>,
}

/// Draw order: per agent, the raw feature matrix row-major then its noise
/// vector; the ground-truth weights come last.
fn draw_data(params: &SyntheticParams) -> Result<RawData> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(DATA_STREAM);
    let (fd, nd, td) = (params.features.dist()?, params.noise.dist()?, params.truth.dist()?);
    let rows = params.samples_per_agent;
    let mut features = Vec::with_capacity(params.n);
    let mut noise = Vec::with_capacity(params.n);
    for _ in 0..params.n {
        let raw: Vec<f64> = (0..rows * params.d).map(|_| fd.sample(&mut rng)).collect();
        let mut a = DMatrix::from_row_slice(rows, params.d, &raw);
        for (j, &theta) in params.scaling.iter().enumerate() {
            a.column_mut(j).scale_mut(theta);
        }
        features.push(a);
        noise.push(DVector::from_fn(rows, |_, _| nd.sample(&mut rng)));
    }
    let truth = DVector::from_fn(params.d, |_, _| td.sample(&mut rng));
    Ok(RawData { features, noise, truth })
}

fn topology_for(params: &SyntheticParams) -> Result<ConsensusMatrix> {
    let sample = erdos_renyi(params.n, params.p, params.seed)?;
    degree_weights(&sample.graph, params.d)
}

fn meta(kind: &str, params: &SyntheticParams) -> InstanceMeta {
    InstanceMeta {
        kind: kind.into(),
        seed: Some(params.seed),
        params: serde_json::to_value(params).unwrap_or(serde_json::Value::Null),
    }
}

/// Regularized linear least squares over an Erdős–Rényi network with
/// degree-based weights. `y_i = A_i ω₀ + v_i`.
pub fn make_least_squares(params: &SyntheticParams) -> Result<ProblemInstance> {
    params.validate()?;
    let raw = draw_data(params)?;
    let topology = topology_for(params)?;
    let data = raw
        .features
        .into_iter()
        .zip(raw.noise)
        .map(|(a, v)| {
            let y = &a * &raw.truth + v;
            (a, y)
        })
        .collect();
    least_squares_from_data(topology, data, params.rho, meta("least_squares", params))
}

/// Builds least-squares agents from explicit `(A_i, y_i)` pairs.
pub fn least_squares_from_data(
    topology: ConsensusMatrix,
    data: Vec<(DMatrix<f64>, DVector<f64>)>,
    rho: f64,
    meta: InstanceMeta,
) -> Result<ProblemInstance> {
    let n = data.len();
    let total: usize = data.iter().map(|(a, _)| a.nrows()).sum();
    let ridge = rho / n as f64;
    let objectives = data
        .into_iter()
        .map(|(a, y)| LeastSquares::new(a, y, total, ridge).map(|f| Box::new(f) as Box<dyn LocalObjective>))
        .collect::<Result<Vec<_>>>()?;
    if rho == 0.0 {
        let d = objectives[0].dim();
        let h = objectives.iter().fold(DMatrix::zeros(d, d), |acc, f| acc + f.hessian(&vec![0.0; d]));
        if h.cholesky().is_none() {
            return Err(DishError::NotPositiveDefinite("aggregate Gram matrix with rho = 0".into()));
        }
    }
    ProblemInstance::new(objectives, topology, meta)
}

/// Regularized logistic regression; labels are `1` where `A_i ω₀ + v_i > 0`.
pub fn make_logistic(params: &SyntheticParams) -> Result<ProblemInstance> {
    params.validate()?;
    if params.rho <= 0.0 {
        return Err(DishError::InvalidParameter(format!("logistic rho must be > 0, got {}", params.rho)));
    }
    let raw = draw_data(params)?;
    let topology = topology_for(params)?;
    let data = raw
        .features
        .into_iter()
        .zip(raw.noise)
        .map(|(a, v)| {
            let logits = &a * &raw.truth + v;
            let labels = logits.map(|t| if t > 0.0 { 1.0 } else { 0.0 });
            (a, labels)
        })
        .collect();
    logistic_from_data(topology, data, params.rho, meta("logistic", params))
}

pub fn logistic_from_data(
    topology: ConsensusMatrix,
    data: Vec<(DMatrix<f64>, DVector<f64>)>,
    rho: f64,
    meta: InstanceMeta,
) -> Result<ProblemInstance> {
    if rho <= 0.0 {
        return Err(DishError::InvalidParameter(format!("logistic rho must be > 0, got {rho}")));
    }
    let n = data.len();
    let total: usize = data.iter().map(|(a, _)| a.nrows()).sum();
    let ridge = rho / n as f64;
    let objectives = data
        .into_iter()
        .map(|(a, y)| Logistic::new(a, y, total, ridge).map(|f| Box::new(f) as Box<dyn LocalObjective>))
        .collect::<Result<Vec<_>>>()?;
    ProblemInstance::new(objectives, topology, meta)
}

/// `f_i(x) = ½‖x − c_i‖²`; the consensus optimum is the mean of the centers.
pub fn make_quadratic_toy(centers: Vec<DVector<f64>>, topology: ConsensusMatrix) -> Result<ProblemInstance> {
    if centers.len() < 2 {
        return Err(DishError::InvalidParameter("need at least 2 centers".into()));
    }
    let params = json!({ "centers": centers.iter().map(|c| c.as_slice().to_vec()).collect::<Vec<_>>() });
    let objectives = centers.into_iter().map(|c| Box::new(Quadratic::new(c)) as Box<dyn LocalObjective>).collect();
    let meta = InstanceMeta { kind: "quadratic_toy".into(), seed: None, params };
    ProblemInstance::new(objectives, topology, meta)
}

/// Quadratic toy on an `n`-ring with standard normal centers drawn from `seed`.
pub fn quadratic_toy_ring(n: usize, d: usize, seed: u64) -> Result<ProblemInstance> {
    let ring = crate::topology::Graph::ring(n)?;
    let topology = degree_weights(&ring, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(DATA_STREAM);
    let normal = Normal::new(0.0, 1.0).map_err(|e| DishError::InvalidParameter(e.to_string()))?;
    let centers = (0..n).map(|_| DVector::from_fn(d, |_, _| normal.sample(&mut rng))).collect();
    let mut inst = make_quadratic_toy(centers, topology)?;
    inst.set_seed(seed);
    Ok(inst)
}
