use serde::Serialize;

use super::Method;
use crate::hawkes::{EventKind, EventLog};

/// Number of uniform time points, ends included, at which `N̄(t)` is reported.
pub const METRIC_POINTS: usize = 100;

pub(crate) fn metric_grid(t0: f64, tf: f64) -> Vec<f64> {
    let last = METRIC_POINTS - 1;
    (0..METRIC_POINTS).map(|k| if k == last { tf } else { t0 + (tf - t0) * k as f64 / last as f64 }).collect()
}

/// Time of the `target`-th organic action, if the log gets that far.
/// A target of zero is reached at the start of the horizon.
pub fn milestone_time(log: &EventLog, target: u64) -> Option<f64> {
    if target == 0 {
        return Some(log.t0());
    }
    log.events().iter().filter(|e| e.kind == EventKind::Organic).nth(target as usize - 1).map(|e| e.time)
}

/// Mean and standard error of the mean; the error is 0 for a single value.
pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// `N̄(t)` of one method on the table grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodCurve {
    pub method: String,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub runs: usize,
    /// Organic actions by `tf`.
    pub organic_mean: f64,
    pub organic_stderr: f64,
    /// Incentivized actions by `tf`, `M̄(tf)`.
    pub incentivized_mean: f64,
    pub incentivized_stderr: f64,
    pub capped_runs: usize,
    pub milestone_target: Option<u64>,
    /// Mean milestone time over the runs that reached it; `None` if none did.
    pub milestone_mean: Option<f64>,
    pub milestone_stderr: Option<f64>,
    pub milestone_reached: usize,
    /// Final organic count of every run, in run order.
    pub final_organic: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsTable {
    pub grid: Vec<f64>,
    pub curves: Vec<MethodCurve>,
    /// Empty when the table was read back from a CSV.
    pub summaries: Vec<MethodSummary>,
}

impl MetricsTable {
    pub fn curve(&self, method: &str) -> Option<&MethodCurve> {
        self.curves.iter().find(|c| c.method == method)
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }
}
