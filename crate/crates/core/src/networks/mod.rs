//! Synthetic networks, parameter sampling and structural scores for the
//! PageRank / out-degree baselines.

mod baseline;
mod graph;
mod kronecker;
mod pagerank;
mod params;

pub use baseline::{baseline_policy, degree_scores};
pub use graph::Graph;
pub use kronecker::{kronecker_graph, KroneckerSeed};
pub use pagerank::{pagerank, PageRank, DEFAULT_DAMPING};
pub use params::{sample_parameters, ParameterRanges};
