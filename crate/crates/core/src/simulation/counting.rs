use serde::Serialize;

use crate::hawkes::{EventKind, EventLog};

/// Step-function counts evaluated on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountingPath {
    pub grid: Vec<f64>,
    /// `per_user[u][k]`: events of user `u` with time `<= grid[k]`.
    pub per_user: Vec<Vec<u64>>,
    pub total: Vec<u64>,
}

/// Counts events of the selected kind (all kinds when `kind` is `None`) with
/// time at or before each grid point. The grid must be sorted.
pub fn counting_path(log: &EventLog, grid: &[f64], kind: Option<EventKind>) -> CountingPath {
    debug_assert!(grid.windows(2).all(|w| w[0] <= w[1]));
    let n = log.n();
    let mut per_user = vec![vec![0u64; grid.len()]; n];
    let mut total = vec![0u64; grid.len()];
    let mut running = vec![0u64; n];
    let mut running_total = 0u64;
    let mut events = log.events().iter().filter(|e| kind.is_none_or(|k| e.kind == k)).peekable();
    for (k, &g) in grid.iter().enumerate() {
        while let Some(e) = events.next_if(|e| e.time <= g) {
            running[e.user] += 1;
            running_total += 1;
        }
        for u in 0..n {
            per_user[u][k] = running[u];
        }
        total[k] = running_total;
    }
    CountingPath { grid: grid.to_vec(), per_user, total }
}
