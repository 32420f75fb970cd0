use std::collections::{BTreeSet, VecDeque};
use std::fmt::Write as _;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DishError, Result};

/// Upper bound on Erdős–Rényi redraws before giving up.
pub const MAX_GRAPH_ATTEMPTS: usize = 10_000;

/// Undirected simple graph on nodes `0..n`.
///
/// Edges are kept as `(i, j)` with `i < j`, sorted, so two graphs with the
/// same edge set compare equal regardless of how they were built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if n < 2 {
            return Err(DishError::InvalidGraph(format!("need at least 2 nodes, got {n}")));
        }
        let mut set = BTreeSet::new();
        for (i, j) in edges {
            if i >= n || j >= n {
                return Err(DishError::InvalidGraph(format!("edge ({i},{j}) out of range for n={n}")));
            }
            if i == j {
                return Err(DishError::InvalidGraph(format!("self-loop at node {i}")));
            }
            let e = (i.min(j), i.max(j));
            if !set.insert(e) {
                return Err(DishError::InvalidGraph(format!("duplicate edge ({},{})", e.0, e.1)));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        Ok(Self { n, edges, neighbors })
    }

    pub fn complete(n: usize) -> Result<Self> {
        Self::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))))
    }

    pub fn path(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (i - 1, i)))
    }

    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Self::path(n);
        }
        Self::new(n, (0..n).map(|i| (i, (i + 1) % n)))
    }

    pub fn star(n: usize) -> Result<Self> {
        Self::new(n, (1..n).map(|i| (0, i)))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Sorted neighbor list of node `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n).map(|i| self.degree(i)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        i != j && self.neighbors[i].binary_search(&j).is_ok()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighbors[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// Edge-list text: a `n=<count>` header followed by one `i j` pair per line.
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| DishError::Parse("empty edge list".into()))?;
        let n = header
            .strip_prefix("n=")
            .and_then(|s| s.trim().parse::<usize>().ok())
            .ok_or_else(|| DishError::Parse(format!("bad header {header:?}, expected n=<count>")))?;
        let mut edges = Vec::new();
        for line in lines {
            let mut parts = line.split_whitespace();
            let parse = |p: Option<&str>| {
                p.and_then(|s| s.parse::<usize>().ok())
                    .ok_or_else(|| DishError::Parse(format!("bad edge line {line:?}")))
            };
            let i = parse(parts.next())?;
            let j = parse(parts.next())?;
            if parts.next().is_some() {
                return Err(DishError::Parse(format!("bad edge line {line:?}")));
            }
            edges.push((i, j));
        }
        Self::new(n, edges)
    }
}

/// A connected Erdős–Rényi draw together with how it was obtained.
#[derive(Debug, Clone)]
pub struct ErdosRenyiSample {
    pub graph: Graph,
    /// Seed of the accepted draw (`seed + resamples`).
    pub seed_used: u64,
    /// Number of disconnected draws that were rejected.
    pub resamples: usize,
}

/// Draws `G(n, p)` conditioned on connectivity.
///
/// Each unordered pair `(i, j)`, `i < j`, visited in lexicographic order, is
/// kept with probability `p`. A disconnected draw is rejected and redrawn with
/// the seed incremented by one.
pub fn erdos_renyi(n: usize, p: f64, seed: u64) -> Result<ErdosRenyiSample> {
    if n < 2 {
        return Err(DishError::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(DishError::InvalidParameter(format!("p must lie in (0, 1], got {p}")));
    }
    for attempt in 0..MAX_GRAPH_ATTEMPTS {
        let seed_used = seed.wrapping_add(attempt as u64);
        let graph = erdos_renyi_draw(n, p, seed_used);
        if graph.is_connected() {
            return Ok(ErdosRenyiSample { graph, seed_used, resamples: attempt });
        }
    }
    Err(DishError::GraphGenerationFailed { attempts: MAX_GRAPH_ATTEMPTS })
}

/// One unconditioned `G(n, p)` draw.
pub fn erdos_renyi_draw(n: usize, p: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("generated edges are valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_self_loops_and_duplicates() {
        assert!(Graph::new(3, [(1, 1)]).is_err());
        assert!(Graph::new(3, [(0, 1), (1, 0)]).is_err());
        assert!(Graph::new(3, [(0, 3)]).is_err());
        assert!(Graph::new(1, []).is_err());
    }

    #[test]
    fn p_one_gives_complete_graph() {
        let g = erdos_renyi(2, 1.0, 99).unwrap().graph;
        assert_eq!(g.edges(), &[(0, 1)]);
        let k4 = erdos_renyi(4, 1.0, 7).unwrap();
        assert_eq!(k4.graph.edge_count(), 6);
        assert_eq!(k4.resamples, 0);
    }

    #[test]
    fn seeded_draw_replays() {
        let a = erdos_renyi(10, 0.7, 42).unwrap();
        let b = erdos_renyi(10, 0.7, 42).unwrap();
        assert_eq!(a.graph, b.graph);
        assert!(a.graph.is_connected());
        // replay the accepted seed directly
        let replay = erdos_renyi_draw(10, 0.7, a.seed_used);
        assert_eq!(replay.edge_count(), a.graph.edge_count());
    }

    #[test]
    fn sparse_draws_get_resampled() {
        let s = erdos_renyi(12, 0.15, 3).unwrap();
        assert!(s.graph.is_connected());
        for attempt in 0..s.resamples {
            assert!(!erdos_renyi_draw(12, 0.15, 3 + attempt as u64).is_connected());
        }
    }

    #[test]
    fn bad_probability() {
        assert!(erdos_renyi(5, 0.0, 1).is_err());
        assert!(erdos_renyi(5, 1.5, 1).is_err());
    }

    #[test]
    fn edge_list_roundtrip() {
        let g = Graph::ring(5).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("n=5\n"));
        assert_eq!(Graph::from_edge_list(&text).unwrap(), g);
        assert!(Graph::from_edge_list("5\n0 1\n").is_err());
        assert!(Graph::from_edge_list("n=3\n0 x\n").is_err());
    }

    #[test]
    fn connectivity() {
        assert!(Graph::path(4).unwrap().is_connected());
        assert!(!Graph::new(4, [(0, 1), (2, 3)]).unwrap().is_connected());
    }
}
