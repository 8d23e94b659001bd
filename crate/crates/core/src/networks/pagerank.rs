use serde::Serialize;

use super::Graph;
use crate::error::{Error, Result};

pub const DEFAULT_DAMPING: f64 = 0.85;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageRank {
    pub scores: Vec<f64>,
    pub iterations: usize,
    /// False when `max_iters` was reached before the L1 change fell below `tol`.
    pub converged: bool,
}

/// Power iteration with uniform teleportation; mass of nodes without
/// out-edges is spread uniformly.
pub fn pagerank(graph: &Graph, damping: f64, tol: f64, max_iters: usize) -> Result<PageRank> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::Config(format!("damping must lie in (0, 1), got {damping}")));
    }
    let n = graph.n();
    if n == 0 {
        return Ok(PageRank { scores: Vec::new(), iterations: 0, converged: true });
    }
    let out = graph.out_degrees();
    let uniform = 1.0 / n as f64;
    let mut rank = vec![uniform; n];
    let mut next = vec![0.0; n];
    for iter in 1..=max_iters {
        let dangling: f64 = rank.iter().zip(&out).filter(|(_, d)| **d == 0).map(|(r, _)| r).sum();
        let fill = (1.0 - damping) * uniform + damping * dangling * uniform;
        next.iter_mut().for_each(|x| *x = fill);
        for &(s, d) in graph.edges() {
            next[d] += damping * rank[s] / out[s] as f64;
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let delta: f64 = rank.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut rank, &mut next);
        if delta < tol {
            return Ok(PageRank { scores: rank, iterations: iter, converged: true });
        }
    }
    log::warn!("pagerank did not converge in {max_iters} iterations");
    Ok(PageRank { scores: rank, iterations: max_iters, converged: false })
}
