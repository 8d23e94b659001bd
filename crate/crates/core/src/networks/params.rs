use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::hawkes::NetworkModel;

/// Uniform ranges for influence weights and baseline rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterRanges {
    pub a_low: f64,
    pub a_high: f64,
    pub mu_low: f64,
    pub mu_high: f64,
    /// Fraction of users with a nonzero baseline rate.
    pub active_fraction: f64,
    pub omega: f64,
}

impl ParameterRanges {
    /// 64-node demonstration setup: `A ~ U(0,10)`, `μ ~ U(0,10)` on 20% of users, `ω = 16`.
    pub fn demonstration() -> Self {
        Self { a_low: 0.0, a_high: 10.0, mu_low: 0.0, mu_high: 10.0, active_fraction: 0.2, omega: 16.0 }
    }

    /// Larger comparison networks: `A, μ ~ U(0,1)` on every user, `ω = 100`.
    pub fn comparison() -> Self {
        Self { a_low: 0.0, a_high: 1.0, mu_low: 0.0, mu_high: 1.0, active_fraction: 1.0, omega: 100.0 }
    }
}

/// Draws `A` uniformly on the graph's edges (`A[dst][src]` for edge
/// `src → dst`) and `μ₀` uniformly on a random subset of
/// `⌊active_fraction · n⌋` users, zero elsewhere.
pub fn sample_parameters<R: Rng + ?Sized>(
    graph: &Graph,
    ranges: &ParameterRanges,
    rng: &mut R,
) -> Result<NetworkModel> {
    let ParameterRanges { a_low, a_high, mu_low, mu_high, active_fraction, omega } = *ranges;
    if !(0.0..=1.0).contains(&active_fraction) {
        return Err(Error::Config(format!("active fraction must lie in [0, 1], got {active_fraction}")));
    }
    if !(0.0 <= a_low && a_low <= a_high && 0.0 <= mu_low && mu_low <= mu_high) {
        return Err(Error::Config("parameter ranges must be nonnegative and ordered".into()));
    }
    let n = graph.n();
    let mut a = DMatrix::zeros(n, n);
    for &(src, dst) in graph.edges() {
        a[(dst, src)] = rng.gen_range(a_low..=a_high);
    }
    let active = (active_fraction * n as f64).floor() as usize;
    let mut mu0 = vec![0.0; n];
    let mut chosen: Vec<usize> = sample(rng, n, active).into_vec();
    chosen.sort_unstable();
    for i in chosen {
        mu0[i] = rng.gen_range(mu_low..=mu_high);
    }
    NetworkModel::new(a, mu0, omega)
}
