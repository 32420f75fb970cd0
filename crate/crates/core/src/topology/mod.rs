//! Agent networks and the consensus matrices that mix over them.

mod consensus;
mod graph;

pub use consensus::{custom_matrix, degree_weights, ConsensusMatrix, CONSENSUS_TOL};
pub use graph::{erdos_renyi, erdos_renyi_draw, ErdosRenyiSample, Graph, MAX_GRAPH_ATTEMPTS};
