use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::Graph;
use crate::error::{ConsensusViolation, DishError, Result};

/// Entry-wise tolerance used when validating a user-supplied `Z`.
pub const CONSENSUS_TOL: f64 = 1e-10;

/// Symmetric doubly stochastic mixing matrix `Z` matched to a graph, with the
/// block size `d` used to lift it to `W = (I_n - Z) ⊗ I_d`.
#[derive(Debug, Clone)]
pub struct ConsensusMatrix {
    graph: Graph,
    z: DMatrix<f64>,
    d: usize,
    /// Eigenvalues of `Z`, descending.
    eigenvalues: Vec<f64>,
}

impl ConsensusMatrix {
    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn z(&self) -> &DMatrix<f64> {
        &self.z
    }

    pub fn z_ij(&self, i: usize, j: usize) -> f64 {
        self.z[(i, j)]
    }

    pub fn node_count(&self) -> usize {
        self.z.nrows()
    }

    pub fn block_dim(&self) -> usize {
        self.d
    }

    /// Length `n·d` of stacked vectors.
    pub fn stacked_dim(&self) -> usize {
        self.node_count() * self.d
    }

    /// Eigenvalues of `Z` in descending order; the first is 1.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Second largest eigenvalue of `Z`.
    pub fn gamma(&self) -> f64 {
        self.eigenvalues[1]
    }

    /// Smallest positive eigenvalue of `W`, i.e. `1 - gamma`.
    pub fn spectral_gap(&self) -> f64 {
        1.0 - self.gamma()
    }

    /// Largest eigenvalue of `W`, `1 - λ_min(Z)`.
    pub fn w_norm(&self) -> f64 {
        1.0 - self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Same `Z` lifted with a different block dimension.
    pub fn with_block_dim(&self, d: usize) -> Self {
        Self { d, ..self.clone() }
    }

    /// `((I_n - Z) ⊗ I_d) v`, evaluated block by block.
    pub fn apply_w(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let nd = self.stacked_dim();
        if v.len() != nd {
            return Err(DishError::DimensionMismatch { expected: nd, found: v.len() });
        }
        let mut out = DVector::zeros(nd);
        self.apply_w_into(v.as_slice(), out.as_mut_slice());
        Ok(out)
    }

    /// Unchecked kernel behind [`apply_w`](Self::apply_w): block `i` becomes
    /// `(1 - z_ii) v_i - Σ_{j≠i} z_ij v_j`.
    pub(crate) fn apply_w_into(&self, v: &[f64], out: &mut [f64]) {
        let n = self.node_count();
        let d = self.d;
        for i in 0..n {
            let block = &mut out[i * d..(i + 1) * d];
            block.fill(0.0);
            for &j in self.graph.neighbors(i) {
                let zij = self.z[(i, j)];
                for (o, vj) in block.iter_mut().zip(&v[j * d..(j + 1) * d]) {
                    *o += zij * vj;
                }
            }
            let self_w = 1.0 - self.z[(i, i)];
            for (o, vi) in block.iter_mut().zip(&v[i * d..(i + 1) * d]) {
                *o = self_w * vi - *o;
            }
        }
    }

    /// Dense `(I_n - Z) ⊗ I_d`. Only meant for small analysis problems.
    pub fn w_dense(&self) -> DMatrix<f64> {
        let n = self.node_count();
        let d = self.d;
        let mut w = DMatrix::zeros(n * d, n * d);
        for i in 0..n {
            for j in 0..n {
                let entry = if i == j { 1.0 - self.z[(i, i)] } else { -self.z[(i, j)] };
                if entry != 0.0 {
                    for r in 0..d {
                        w[(i * d + r, j * d + r)] = entry;
                    }
                }
            }
        }
        w
    }

    /// Row-major CSV of `Z`, 17 significant digits per entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.z.row_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<DMatrix<f64>> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',').map(|c| c.trim().parse::<f64>().map_err(|e| DishError::Parse(e.to_string()))).collect()
            })
            .collect::<Result<_>>()?;
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(DishError::Parse("consensus CSV must be square".into()));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }
}

/// Degree-based weights: `z_ij = 1/(δ_max+1)` on edges and
/// `z_ii = 1 - δ_i/(δ_max+1)`.
pub fn degree_weights(g: &Graph, d: usize) -> Result<ConsensusMatrix> {
    if !g.is_connected() {
        return Err(DishError::GraphNotConnected);
    }
    let n = g.node_count();
    let w = 1.0 / (g.max_degree() as f64 + 1.0);
    let mut z = DMatrix::zeros(n, n);
    for &(i, j) in g.edges() {
        z[(i, j)] = w;
        z[(j, i)] = w;
    }
    for i in 0..n {
        z[(i, i)] = 1.0 - g.degree(i) as f64 * w;
    }
    build(g.clone(), z, d)
}

/// Validates a user-supplied `Z` against `g`.
pub fn custom_matrix(g: &Graph, z: DMatrix<f64>, d: usize) -> Result<ConsensusMatrix> {
    let n = g.node_count();
    let bad = |v| Err(DishError::InvalidConsensus(v));
    if z.nrows() != n || z.ncols() != n {
        return bad(ConsensusViolation::Shape);
    }
    for i in 0..n {
        for j in i + 1..n {
            if (z[(i, j)] - z[(j, i)]).abs() > CONSENSUS_TOL {
                return bad(ConsensusViolation::Asymmetric);
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && ((z[(i, j)] != 0.0) != g.has_edge(i, j)) {
                return bad(ConsensusViolation::SparsityMismatch);
            }
        }
    }
    for i in 0..n {
        if z[(i, i)] <= 0.0 {
            return bad(ConsensusViolation::NonpositiveDiagonal);
        }
        if (0..n).any(|j| z[(i, j)] < 0.0) {
            return bad(ConsensusViolation::NegativeWeight);
        }
        if (z.row(i).sum() - 1.0).abs() > CONSENSUS_TOL {
            return bad(ConsensusViolation::RowSums);
        }
    }
    if !g.is_connected() {
        return Err(DishError::GraphNotConnected);
    }
    build(g.clone(), z, d)
}

fn build(graph: Graph, z: DMatrix<f64>, d: usize) -> Result<ConsensusMatrix> {
    if d == 0 {
        return Err(DishError::InvalidParameter("block dimension must be positive".into()));
    }
    // symmetrize away round-off before the eigensolve
    let sym = (&z + z.transpose()) * 0.5;
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    eigenvalues.sort_by(|a, b| b.total_cmp(a));
    Ok(ConsensusMatrix { graph, z, d, eigenvalues })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn path_graph_degree_weights() {
        let g = Graph::path(3).unwrap();
        let cm = degree_weights(&g, 1).unwrap();
        let z = cm.z();
        let third = 1.0 / 3.0;
        assert!(close(z[(0, 1)], third, 1e-15));
        assert!(close(z[(1, 2)], third, 1e-15));
        assert!(close(z[(0, 0)], 2.0 * third, 1e-15));
        assert!(close(z[(1, 1)], third, 1e-15));
        assert!(close(z[(2, 2)], 2.0 * third, 1e-15));
        assert_eq!(z[(0, 2)], 0.0);
    }

    #[test]
    fn k4_degree_weights_have_zero_gamma() {
        let cm = degree_weights(&Graph::complete(4).unwrap(), 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!(close(cm.z()[(i, j)], 0.25, 1e-15));
            }
        }
        assert!(cm.gamma().abs() < 1e-12);
        assert!(close(cm.eigenvalues()[0], 1.0, 1e-12));
    }

    #[test]
    fn uniform_complete_matrix() {
        let g = Graph::complete(5).unwrap();
        let z = DMatrix::from_element(5, 5, 0.2);
        let cm = custom_matrix(&g, z, 1).unwrap();
        assert!(cm.gamma().abs() < 1e-12);
        let k2 = custom_matrix(&Graph::complete(2).unwrap(), DMatrix::from_element(2, 2, 0.5), 3).unwrap();
        assert!(k2.gamma().abs() < 1e-12);
    }

    #[test]
    fn named_violations() {
        let g = Graph::path(3).unwrap();
        let good = degree_weights(&g, 1).unwrap().z().clone();

        let mut sparse = good.clone();
        sparse[(0, 2)] = 0.1;
        sparse[(2, 0)] = 0.1;
        let err = custom_matrix(&g, sparse, 1).unwrap_err();
        assert!(err.to_string().contains("sparsity mismatch"), "{err}");

        let mut rows = good.clone();
        rows[(0, 0)] -= 0.1;
        let err = custom_matrix(&g, rows, 1).unwrap_err();
        assert!(err.to_string().contains("row sums"), "{err}");

        let mut asym = good.clone();
        asym[(0, 1)] = 0.2;
        let err = custom_matrix(&g, asym, 1).unwrap_err();
        assert!(err.to_string().contains("asymmetric"), "{err}");

        let k2 = Graph::complete(2).unwrap();
        let diag = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let err = custom_matrix(&k2, diag, 1).unwrap_err();
        assert!(err.to_string().contains("nonpositive diagonal"), "{err}");
    }

    #[test]
    fn disconnected_graph_rejected() {
        let g = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(degree_weights(&g, 1), Err(DishError::GraphNotConnected)));
    }

    #[test]
    fn k2_apply_w_is_centering() {
        let cm = custom_matrix(&Graph::complete(2).unwrap(), DMatrix::from_element(2, 2, 0.5), 2).unwrap();
        let v = DVector::from_vec(vec![1.0, -2.0, -1.0, 2.0]);
        let out = cm.apply_w(&v).unwrap();
        assert!((out - &v).norm() < 1e-15);
        assert!(cm.apply_w(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn csv_export_roundtrip() {
        let cm = degree_weights(&Graph::ring(5).unwrap(), 1).unwrap();
        let csv = cm.to_csv();
        assert_eq!(csv.lines().count(), 5);
        let back = ConsensusMatrix::parse_csv(&csv).unwrap();
        assert_eq!(&back, cm.z());
    }
}
