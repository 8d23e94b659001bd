use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::log_likelihood;
use crate::error::{Error, Result};
use crate::hawkes::{EventLog, NetworkModel};
use crate::networks::Graph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    /// Candidate decay rates; with more than one, the best is picked on a
    /// held-out tail of every log.
    pub omega_grid: Vec<f64>,
    /// Weight of the `½ l2 ‖A‖²` penalty.
    pub l2_penalty: f64,
    pub max_iters: usize,
    /// Relative objective improvement below which ascent stops.
    pub tol: f64,
    /// Final fraction of every horizon held out for choosing ω.
    pub holdout_fraction: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self { omega_grid: vec![1.0], l2_penalty: 0.0, max_iters: 2000, tol: 1e-10, holdout_fraction: 0.2 }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.omega_grid.is_empty() || self.omega_grid.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config("omega grid must be nonempty and positive".into()));
        }
        if !(self.l2_penalty.is_finite() && self.l2_penalty >= 0.0) {
            return Err(Error::Config(format!("l2 penalty must be >= 0, got {}", self.l2_penalty)));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Config(format!("holdout fraction must lie in (0, 1), got {}", self.holdout_fraction)));
        }
        if self.max_iters == 0 || !(self.tol >= 0.0) {
            return Err(Error::Config("max_iters must be positive and tol nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FitResult {
    pub model: NetworkModel,
    pub omega: f64,
    /// Penalized log-likelihood of the returned model on all logs.
    pub objective: f64,
    pub iterations: usize,
    /// False when `max_iters` ran out; the best iterate is still returned.
    pub converged: bool,
    /// `(ω, held-out log-likelihood)` per candidate; empty for a single ω.
    pub omega_scores: Vec<(f64, f64)>,
}

struct Problem<'a> {
    logs: Vec<EventLog>,
    /// `(row, col)` entries of `A` being fitted.
    support: &'a [(usize, usize)],
    n: usize,
    omega: f64,
    l2: f64,
}

impl Problem<'_> {
    fn model(&self, theta: &[f64]) -> Result<NetworkModel> {
        let k = self.support.len();
        let triplets: Vec<_> = self.support.iter().zip(&theta[..k]).map(|(&(r, c), &a)| (r, c, a)).collect();
        NetworkModel::from_triplets(self.n, &triplets, theta[k..].to_vec(), self.omega)
    }

    /// Penalized objective and gradient; `None` when some event has zero
    /// intensity.
    fn eval(&self, theta: &[f64]) -> Result<Option<(f64, Vec<f64>)>> {
        let k = self.support.len();
        let model = self.model(theta)?;
        let mut value = 0.0;
        let mut grad = vec![0.0; theta.len()];
        for log in &self.logs {
            match log_likelihood(&model, log, self.support) {
                Ok(ll) => {
                    value += ll.value;
                    grad[..k].iter_mut().zip(&ll.grad_a).for_each(|(g, x)| *g += x);
                    grad[k..].iter_mut().zip(&ll.grad_mu).for_each(|(g, x)| *g += x);
                }
                Err(Error::InfeasibleModel { .. }) => return Ok(None),
                Err(e) => return Err(e),
            }
        }
        for (g, a) in grad[..k].iter_mut().zip(&theta[..k]) {
            value -= 0.5 * self.l2 * a * a;
            *g -= self.l2 * a;
        }
        Ok(Some((value, grad)))
    }

    /// Starting point: no influence, baselines at the Poisson MLE.
    fn initial(&self) -> Vec<f64> {
        let span: f64 = self.logs.iter().map(|l| l.tf() - l.t0()).sum();
        let mut counts = vec![0.0; self.n];
        for log in &self.logs {
            for e in log.events() {
                counts[e.user] += 1.0;
            }
        }
        let mut theta = vec![0.0; self.support.len()];
        theta.extend(counts.iter().map(|c| if span > 0.0 { c / span } else { 0.0 }));
        theta
    }

    /// Projected gradient ascent with Barzilai–Borwein steps and Armijo
    /// backtracking. Every accepted step increases the objective.
    fn ascend(&self, max_iters: usize, tol: f64) -> Result<(Vec<f64>, f64, usize, bool)> {
        let mut theta = self.initial();
        let (mut f, mut grad) = self
            .eval(&theta)?
            .ok_or_else(|| Error::Config("initial point is infeasible (event for a user with no activity)".into()))?;
        let inf_norm = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mut alpha = 0.1 * inf_norm(&theta).max(1.0) / inf_norm(&grad).max(1e-300);
        for iter in 1..=max_iters {
            let mut accepted = None;
            for _ in 0..60 {
                let trial: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| (t + alpha * g).max(0.0)).collect();
                let ascent: f64 = trial.iter().zip(&theta).zip(&grad).map(|((a, b), g)| g * (a - b)).sum();
                if ascent <= 0.0 {
                    // projected step is zero: stationary
                    return Ok((theta, f, iter, true));
                }
                if let Some((ft, gt)) = self.eval(&trial)? {
                    if ft >= f + 1e-4 * ascent {
                        accepted = Some((trial, ft, gt));
                        break;
                    }
                }
                alpha *= 0.5;
            }
            let Some((next, f_next, g_next)) = accepted else {
                return Ok((theta, f, iter, true));
            };
            let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
            let sy: f64 = s.iter().zip(g_next.iter().zip(&grad)).map(|(s, (a, b))| s * (a - b)).sum();
            let ss: f64 = s.iter().map(|x| x * x).sum();
            let improvement = f_next - f;
            theta = next;
            grad = g_next;
            f = f_next;
            alpha = if sy < 0.0 { ss / -sy } else { alpha * 2.0 };
            if improvement <= tol * f.abs().max(1.0) {
                return Ok((theta, f, iter, true));
            }
        }
        Ok((theta, f, max_iters, false))
    }
}

/// Fits `A` on the edges of `support` (edge `src → dst` is `A[dst][src]`)
/// and `μ₀` by penalized maximum likelihood over all `logs`.
///
/// With several candidate decay rates each is first fitted on the leading
/// `1 − holdout_fraction` of every log and scored by the log-likelihood of
/// the held-out tail given the full history; the winner is refitted on the
/// complete logs.
pub fn fit_mle(logs: &[EventLog], support: &Graph, config: &FitConfig) -> Result<FitResult> {
    config.validate()?;
    if logs.is_empty() {
        return Err(Error::Config("fitting needs at least one log".into()));
    }
    let n = support.n();
    if let Some(l) = logs.iter().find(|l| l.n() != n) {
        return Err(Error::MalformedLog(format!("log has n={}, support graph has n={n}", l.n())));
    }
    let entries: Vec<(usize, usize)> = support.edges().iter().map(|&(src, dst)| (dst, src)).collect();
    let problem =
        |logs: Vec<EventLog>, omega: f64| Problem { logs, support: &entries, n, omega, l2: config.l2_penalty };

    let mut omega_scores = Vec::new();
    let omega = if let [only] = config.omega_grid[..] {
        only
    } else {
        let split = |l: &EventLog| l.t0() + (1.0 - config.holdout_fraction) * (l.tf() - l.t0());
        let train: Vec<EventLog> = logs.iter().map(|l| l.truncated(split(l))).collect();
        omega_scores = config
            .omega_grid
            .par_iter()
            .map(|&omega| -> Result<(f64, f64)> {
                let p = problem(train.clone(), omega);
                let (theta, _, _, _) = p.ascend(config.max_iters, config.tol)?;
                let model = p.model(&theta)?;
                let mut held_out = 0.0;
                for (full, part) in logs.iter().zip(&train) {
                    let whole = match log_likelihood(&model, full, &[]) {
                        Ok(ll) => ll.value,
                        Err(Error::InfeasibleModel { .. }) => return Ok((omega, f64::NEG_INFINITY)),
                        Err(e) => return Err(e),
                    };
                    held_out += whole - log_likelihood(&model, part, &[])?.value;
                }
                Ok((omega, held_out))
            })
            .collect::<Result<Vec<_>>>()?;
        log::debug!("held-out scores: {omega_scores:?}");
        // first maximum in grid order
        omega_scores
            .iter()
            .fold(
                (f64::NAN, f64::NEG_INFINITY),
                |best, &(w, s)| if s > best.1 || best.0.is_nan() { (w, s) } else { best },
            )
            .0
    };

    let p = problem(logs.to_vec(), omega);
    let (theta, objective, iterations, converged) = p.ascend(config.max_iters, config.tol)?;
    if !converged {
        log::warn!("maximum likelihood ascent stopped after {iterations} iterations without converging");
    }
    Ok(FitResult { model: p.model(&theta)?, omega, objective, iterations, converged, omega_scores })
}
