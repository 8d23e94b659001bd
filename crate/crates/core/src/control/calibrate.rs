//! Budget matching: pick the control-cost scale whose policy spends, in
//! expectation, a target number of incentivized actions.

use rayon::prelude::*;

use super::{simulate_controlled, ControlConfig, FeedbackPolicy};
use crate::error::{Error, Result};
use crate::hawkes::NetworkModel;
use crate::rng::derive_seed;

#[derive(Debug, Clone)]
pub struct CalibrationOptions {
    /// Monte Carlo runs per probe.
    pub runs: usize,
    /// Relative tolerance on the budget estimate.
    pub tol: f64,
    pub seed: u64,
    pub event_cap: usize,
    /// Multiplier bracket for `S`.
    pub bracket: (f64, f64),
    pub max_probes: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        Self {
            runs: 20,
            tol: 0.05,
            seed: 0,
            event_cap: crate::simulation::DEFAULT_EVENT_CAP,
            bracket: (1e-6, 1e6),
            max_probes: 40,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Calibration {
    pub config: ControlConfig,
    pub multiplier: f64,
    pub estimate: f64,
    /// `(multiplier, estimate)` for every probe, in evaluation order.
    pub probes: Vec<(f64, f64)>,
    pub converged: bool,
}

/// Monte Carlo estimate of the expected number of incentivized actions under
/// the optimal policy for `config`. Runs use seeds derived from `seed` only,
/// so estimates for different configurations share random numbers.
pub fn estimate_budget(
    model: &NetworkModel,
    config: &ControlConfig,
    runs: usize,
    seed: u64,
    cap: usize,
) -> Result<f64> {
    if runs == 0 {
        return Err(Error::Config("calibration needs at least one run".into()));
    }
    let policy = FeedbackPolicy::build(model, config)?;
    let counts = (0..runs)
        .into_par_iter()
        .map(|r| {
            simulate_controlled(model, &policy, config.t0, config.tf, derive_seed(seed, &[r as u64]), cap)
                .map(|res| res.incentivized_count as f64)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(counts.iter().sum::<f64>() / runs as f64)
}

/// Scales `S` by a single multiplier until the Monte Carlo budget estimate is
/// within `tol` of `target`.
///
/// The expected budget decreases with the multiplier. The search first
/// brackets the target by decades from multiplier 1, then shrinks the
/// bracket with safeguarded log-log secant steps (falling back to the
/// geometric midpoint). A multiplier small enough to make the Riccati
/// solve blow up counts as an unbounded budget.
pub fn calibrate_budget(
    model: &NetworkModel,
    template: &ControlConfig,
    target: f64,
    options: &CalibrationOptions,
) -> Result<Calibration> {
    template.validate(model.n())?;
    if !(target.is_finite() && target >= 0.0) {
        return Err(Error::Config(format!("budget target must be >= 0, got {target}")));
    }
    if target == 0.0 {
        if template.is_zero_reward() {
            return Ok(Calibration {
                config: template.clone(),
                multiplier: 1.0,
                estimate: 0.0,
                probes: Vec::new(),
                converged: true,
            });
        }
        return Err(Error::Config("a zero budget requires zero rewards (Q = F = 0)".into()));
    }
    let (m_min, m_max) = options.bracket;
    let mut probes: Vec<(f64, f64)> = Vec::new();
    let probe = |m: f64, probes: &mut Vec<(f64, f64)>| -> Result<f64> {
        let est = match estimate_budget(model, &template.scale_s(m), options.runs, options.seed, options.event_cap) {
            Ok(e) => e,
            Err(Error::SolverDivergence { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        log::debug!("calibration probe: multiplier {m:.4e} -> budget {est:.3}");
        probes.push((m, est));
        Ok(est)
    };
    let within = |e: f64| (e - target).abs() <= options.tol * target;
    let done = |m: f64, e: f64, probes: Vec<(f64, f64)>, converged: bool| Calibration {
        config: template.scale_s(m),
        multiplier: m,
        estimate: e,
        probes,
        converged,
    };

    // bracket: lo has estimate above target, hi below
    let mut m = 1.0f64.clamp(m_min, m_max);
    let mut e = probe(m, &mut probes)?;
    if within(e) {
        return Ok(done(m, e, probes, true));
    }
    let (mut lo, mut e_lo, mut hi, mut e_hi);
    if e > target {
        lo = m;
        e_lo = e;
        loop {
            if m >= m_max {
                return Err(failure(target, &probes));
            }
            m = (m * 10.0).min(m_max);
            e = probe(m, &mut probes)?;
            if within(e) {
                return Ok(done(m, e, probes, true));
            }
            if e < target {
                hi = m;
                e_hi = e;
                break;
            }
            lo = m;
            e_lo = e;
        }
    } else {
        hi = m;
        e_hi = e;
        loop {
            if m <= m_min {
                return Err(failure(target, &probes));
            }
            m = (m / 10.0).max(m_min);
            e = probe(m, &mut probes)?;
            if within(e) {
                return Ok(done(m, e, probes, true));
            }
            if e > target {
                lo = m;
                e_lo = e;
                break;
            }
            hi = m;
            e_hi = e;
        }
    }

    while probes.len() < options.max_probes && hi / lo > 1.0 + 1e-9 {
        let (x_lo, x_hi) = (lo.ln(), hi.ln());
        let mut x = 0.5 * (x_lo + x_hi);
        if e_lo.is_finite() && e_hi > 0.0 {
            let secant = x_lo + (target.ln() - e_lo.ln()) * (x_hi - x_lo) / (e_hi.ln() - e_lo.ln());
            let frac = (secant - x_lo) / (x_hi - x_lo);
            if (0.1..=0.9).contains(&frac) {
                x = secant;
            }
        }
        m = x.exp();
        e = probe(m, &mut probes)?;
        if within(e) {
            return Ok(done(m, e, probes, true));
        }
        if e > target {
            lo = m;
            e_lo = e;
        } else {
            hi = m;
            e_hi = e;
        }
    }
    let (m_best, e_best) = probes
        .iter()
        .copied()
        .filter(|(_, e)| e.is_finite())
        .min_by(|a, b| (a.1 - target).abs().total_cmp(&(b.1 - target).abs()))
        .expect("bracketing produced a finite probe");
    Ok(done(m_best, e_best, probes, false))
}

fn failure(target: f64, probes: &[(f64, f64)]) -> Error {
    let lowest = probes.iter().copied().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap_or((f64::NAN, f64::NAN));
    let highest = probes.iter().copied().max_by(|a, b| a.0.total_cmp(&b.0)).unwrap_or((f64::NAN, f64::NAN));
    Error::CalibrationFailure {
        target,
        low_multiplier: lowest.0,
        low_estimate: lowest.1,
        high_multiplier: highest.0,
        high_estimate: highest.1,
    }
}
