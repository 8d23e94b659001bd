use super::Graph;
use crate::error::{Error, Result};

/// Out-degree of every node, as scores.
pub fn degree_scores(graph: &Graph) -> Vec<f64> {
    graph.out_degrees().into_iter().map(|d| d as f64).collect()
}

/// Constant control intensities proportional to `scores`, scaled so the
/// expected number of incentivized actions over `horizon` equals `budget`.
pub fn baseline_policy(scores: &[f64], budget: f64, horizon: (f64, f64)) -> Result<Vec<f64>> {
    let (t0, tf) = horizon;
    if !(tf > t0) {
        return Err(Error::Config(format!("bad horizon [{t0}, {tf}]")));
    }
    if !(budget.is_finite() && budget >= 0.0) {
        return Err(Error::Config(format!("budget must be >= 0, got {budget}")));
    }
    if scores.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
        return Err(Error::Config("scores must be finite and nonnegative".into()));
    }
    let total: f64 = scores.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateScores);
    }
    let scale = budget / (total * (tf - t0));
    Ok(scores.iter().map(|s| s * scale).collect())
}
