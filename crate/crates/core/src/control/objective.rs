//! Monte Carlo evaluation of the quadratic control objective.

use serde::Serialize;

use super::{optimal_intensity, ControlConfig, FeedbackPolicy};
use crate::error::{Error, Result};
use crate::hawkes::intensity::{decay_in_place, jump_in_place};
use crate::hawkes::{EventLog, IntensityVector, NetworkModel};

#[derive(Debug, Clone, Serialize)]
pub struct ObjectiveEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub per_run: Vec<f64>,
}

// 8-point Gauss–Legendre on [-1, 1]
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Realized cost of one run:
///
/// ```text
/// -½ λ(tf)ᵀ F λ(tf) + ∫ [ -½ λᵀ Q λ + ½ uᵀ S u ] dt
/// ```
///
/// The intensity term is integrated in closed form between events. With a
/// policy, `u(t)` is the clamped feedback law evaluated on the reconstructed
/// intensity and integrated by 8-point Gauss–Legendre on every stretch free
/// of events and grid nodes. Without a policy `u ≡ 0`.
pub fn run_cost(
    log: &EventLog,
    model: &NetworkModel,
    config: &ControlConfig,
    policy: Option<&FeedbackPolicy>,
) -> Result<f64> {
    let n = model.n();
    config.validate(n)?;
    if log.n() != n {
        return Err(Error::MalformedLog(format!("log has n={}, model has n={n}", log.n())));
    }
    let (t0, tf) = (config.t0, config.tf);
    let omega = model.omega();
    let mu = model.mu0();
    let mut lambda = model.lambda0().to_vec();
    let mut clock = t0;
    let mut cost = 0.0;

    let segment = |lambda: &[f64], a: f64, b: f64| -> Result<f64> {
        if b <= a {
            return Ok(0.0);
        }
        let dt = b - a;
        let e1 = (-omega * dt).exp();
        let e2 = (-2.0 * omega * dt).exp();
        let mut total = 0.0;
        for i in 0..n {
            if config.q[i] == 0.0 {
                continue;
            }
            let c = lambda[i] - mu[i];
            let sq = mu[i] * mu[i] * dt + 2.0 * mu[i] * c * (1.0 - e1) / omega + c * c * (1.0 - e2) / (2.0 * omega);
            total -= 0.5 * config.q[i] * sq;
        }
        if let Some(p) = policy {
            let grid = p.grid();
            let mut cuts = vec![a];
            let (k_a, _) = grid.locate(a);
            let mut k = k_a + 1;
            while k < grid.steps && grid.point(k) < b {
                cuts.push(grid.point(k));
                k += 1;
            }
            cuts.push(b);
            let mut at = lambda.to_vec();
            for w in cuts.windows(2) {
                let (lo, hi) = (w[0], w[1]);
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (hi + lo);
                for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
                    let t = mid + half * x;
                    at.copy_from_slice(lambda);
                    decay_in_place(model, &mut at, t - a);
                    let u = optimal_intensity(p, &IntensityVector::new(at.clone(), t), t)?.u;
                    let running: f64 = u.iter().zip(&config.s).map(|(ui, si)| si * ui * ui).sum();
                    total += 0.5 * running * wt * half;
                }
            }
        }
        Ok(total)
    };

    for e in log.events().iter().take_while(|e| e.time < tf) {
        if e.time < clock {
            continue;
        }
        cost += segment(&lambda, clock, e.time)?;
        decay_in_place(model, &mut lambda, e.time - clock);
        jump_in_place(model, &mut lambda, e.user);
        clock = e.time;
    }
    cost += segment(&lambda, clock, tf)?;
    decay_in_place(model, &mut lambda, tf - clock);
    let terminal: f64 = lambda.iter().zip(&config.f).map(|(l, f)| f * l * l).sum();
    Ok(cost - 0.5 * terminal)
}

/// Mean and standard error of [`run_cost`] over an ensemble of logs.
pub fn objective_estimate(
    logs: &[EventLog],
    model: &NetworkModel,
    config: &ControlConfig,
    policy: Option<&FeedbackPolicy>,
) -> Result<ObjectiveEstimate> {
    if logs.is_empty() {
        return Err(Error::Config("objective estimate needs at least one log".into()));
    }
    let per_run = logs.iter().map(|l| run_cost(l, model, config, policy)).collect::<Result<Vec<_>>>()?;
    let k = per_run.len() as f64;
    let mean = per_run.iter().sum::<f64>() / k;
    let stderr = if per_run.len() > 1 {
        (per_run.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) / k).sqrt()
    } else {
        0.0
    };
    Ok(ObjectiveEstimate { mean, stderr, per_run })
}
