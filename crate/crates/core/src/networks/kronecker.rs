use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// 2×2 initiator of a stochastic Kronecker graph on `2^k` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KroneckerSeed {
    pub theta: [[f64; 2]; 2],
    pub k: u32,
}

impl KroneckerSeed {
    pub fn new(theta: [[f64; 2]; 2], k: u32) -> Result<Self> {
        if theta.iter().flatten().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config(format!("Kronecker initiator entries must lie in [0, 1]: {theta:?}")));
        }
        if k == 0 || k > 20 {
            return Err(Error::Config(format!("Kronecker power must be in 1..=20, got {k}")));
        }
        Ok(Self { theta, k })
    }

    /// Named initiators: `core-periphery-small` and `dissortative-small` are
    /// the two 64-node demonstration networks, the rest are the larger
    /// comparison families.
    pub fn preset(name: &str, k: u32) -> Result<Self> {
        let theta = match name {
            "core-periphery-small" | "assortative" => [[0.96, 0.3], [0.3, 0.96]],
            "dissortative-small" | "dissortative" => [[0.3, 0.96], [0.96, 0.3]],
            "random" => [[0.7, 0.7], [0.7, 0.7]],
            "hierarchical" => [[0.9, 0.1], [0.1, 0.9]],
            "core-periphery" => [[0.9, 0.5], [0.5, 0.3]],
            other => return Err(Error::Config(format!("unknown Kronecker preset '{other}'"))),
        };
        Self::new(theta, k)
    }

    pub fn nodes(&self) -> usize {
        1 << self.k
    }

    /// `Π_l θ[bit_l(i)][bit_l(j)]`, bits read most-significant first.
    pub fn edge_probability(&self, i: usize, j: usize) -> f64 {
        (0..self.k).rev().map(|l| self.theta[(i >> l) & 1][(j >> l) & 1]).product()
    }
}

/// Samples every ordered pair independently with its Kronecker probability
/// and drops self-loops.
pub fn kronecker_graph<R: Rng + ?Sized>(seed: &KroneckerSeed, rng: &mut R) -> Graph {
    let n = seed.nodes();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let p = seed.edge_probability(i, j);
            // always draw, so the stream does not depend on which p are 0 or 1
            let u: f64 = rng.gen();
            if i != j && u < p {
                edges.push((i, j));
            }
        }
    }
    Graph::new(n, edges).expect("Kronecker edges are in range")
}
