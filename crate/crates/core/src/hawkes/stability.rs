use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde::Serialize;

use super::NetworkModel;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StabilityReport {
    /// Estimated spectral radius of `A / ω`.
    pub spectral_radius: f64,
    /// `spectral_radius >= 1`: cascades do not die out on average.
    pub supercritical: bool,
    /// Some component's bracket did not close; `spectral_radius` then uses
    /// its upper Collatz–Wielandt bound.
    pub unconverged: bool,
    pub iterations: usize,
}

const MAX_ITERS: usize = 10_000;
const REL_TOL: f64 = 1e-10;

/// Spectral radius of `A/ω`.
///
/// The Perron root of a nonnegative matrix is the largest Perron root of
/// its diagonal blocks on strongly connected components, so each component
/// is handled separately. Within a component, power iteration runs on
/// `B = A/ω + I`: the shift makes the irreducible block primitive, and the
/// Collatz–Wielandt ratios `min_i (Bx)_i/x_i` and `max_i (Bx)_i/x_i` bracket
/// its Perron root at every step.
pub fn branching_check(model: &NetworkModel) -> StabilityReport {
    let n = model.n();
    let mut graph = DiGraph::<(), ()>::with_capacity(n, model.nnz());
    let nodes: Vec<_> = (0..n).map(|_| graph.add_node(())).collect();
    for u in 0..n {
        for &(v, _) in model.column(u) {
            graph.add_edge(nodes[u], nodes[v], ());
        }
    }
    let mut rho = 0.0f64;
    let mut unconverged = false;
    let mut iterations = 0;
    for component in tarjan_scc(&graph) {
        let members: Vec<usize> = component.iter().map(|ix| ix.index()).collect();
        let (r, ok, iters) = component_radius(model, &members);
        rho = rho.max(r);
        unconverged |= !ok;
        iterations = iterations.max(iters);
    }
    report(rho, unconverged, iterations)
}

/// Perron root of the block of `A/ω` on `members` (a strongly connected set).
fn component_radius(model: &NetworkModel, members: &[usize]) -> (f64, bool, usize) {
    let omega = model.omega();
    if let [u] = members {
        let self_loop = model.column(*u).iter().find(|(v, _)| v == u).map_or(0.0, |(_, a)| *a);
        return (self_loop / omega, true, 0);
    }
    let mut local = vec![usize::MAX; model.n()];
    for (i, &u) in members.iter().enumerate() {
        local[u] = i;
    }
    let m = members.len();
    let mut x = vec![1.0 / m as f64; m];
    let mut y = vec![0.0; m];
    let mut hi = f64::INFINITY;
    for iter in 1..=MAX_ITERS {
        y.copy_from_slice(&x);
        for (i, &u) in members.iter().enumerate() {
            for &(v, a) in model.column(u) {
                if local[v] != usize::MAX {
                    y[local[v]] += a / omega * x[i];
                }
            }
        }
        let mut lo = f64::INFINITY;
        hi = 0.0f64;
        for (yi, xi) in y.iter().zip(&x) {
            let r = yi / xi;
            lo = lo.min(r);
            hi = hi.max(r);
        }
        let norm: f64 = y.iter().sum();
        for (xi, yi) in x.iter_mut().zip(&y) {
            // keep strictly positive so the ratios stay defined
            *xi = (yi / norm).max(f64::MIN_POSITIVE);
        }
        if hi - lo <= REL_TOL * hi.max(1.0) {
            return ((0.5 * (lo + hi) - 1.0).max(0.0), true, iter);
        }
    }
    ((hi - 1.0).max(0.0), false, MAX_ITERS)
}

fn report(rho: f64, unconverged: bool, iterations: usize) -> StabilityReport {
    StabilityReport { spectral_radius: rho, supercritical: rho >= 1.0 - 1e-12, unconverged, iterations }
}
