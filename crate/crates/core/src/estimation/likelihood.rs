use crate::error::{Error, Result};
use crate::hawkes::{EventLog, NetworkModel};

/// Log-likelihood with its gradient. `grad_a[k]` belongs to `support[k]`
/// (a `(row, col)` entry of `A`).
#[derive(Debug, Clone, PartialEq)]
pub struct Likelihood {
    pub value: f64,
    pub grad_a: Vec<f64>,
    pub grad_mu: Vec<f64>,
}

/// Exact log-likelihood of `log` under `model` and its gradient with respect
/// to the `support` entries of `A` and to `μ₀`.
///
/// Entries of `A` outside `support` still shape the intensity. The initial
/// excess `λ₀ − μ₀` is held fixed when differentiating in `μ₀`.
pub fn log_likelihood(model: &NetworkModel, log: &EventLog, support: &[(usize, usize)]) -> Result<Likelihood> {
    let n = model.n();
    if log.n() != n {
        return Err(Error::MalformedLog(format!("log has n={}, model has n={n}", log.n())));
    }
    if let Some(&(r, c)) = support.iter().find(|(r, c)| *r >= n || *c >= n) {
        return Err(Error::IndexOutOfRange { index: r.max(c), n });
    }
    let omega = model.omega();
    let mu = model.mu0();
    let (t0, tf) = (log.t0(), log.tf());
    let span = tf - t0;

    // rows of A: for each target v, its sources with weights
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for u in 0..n {
        for &(v, a) in model.column(u) {
            rows[v].push((u, a));
        }
    }
    let mut support_rows: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n];
    for (k, &(v, u)) in support.iter().enumerate() {
        support_rows[v].push((k, u));
    }
    let excess: Vec<f64> = model.lambda0().iter().zip(mu).map(|(l, m)| l - m).collect();

    let mut grad_a = vec![0.0; support.len()];
    let mut grad_mu = vec![-span; n];
    let mut value = 0.0;
    // per-source excitation, decayed lazily to `as_of`
    let mut s = vec![0.0; n];
    let mut as_of = t0;
    // Σ_j (1 − e^{−ω(tf − t_j)}) / ω per source
    let mut tail = vec![0.0; n];

    for e in log.events() {
        let decay = (-omega * (e.time - as_of)).exp();
        if decay != 1.0 {
            s.iter_mut().for_each(|x| *x *= decay);
            as_of = e.time;
        }
        let v = e.user;
        let lambda =
            mu[v] + rows[v].iter().map(|&(u, a)| a * s[u]).sum::<f64>() + excess[v] * (-omega * (e.time - t0)).exp();
        if !(lambda > 0.0) {
            return Err(Error::InfeasibleModel { t: e.time, user: v });
        }
        value += lambda.ln();
        grad_mu[v] += 1.0 / lambda;
        for &(k, u) in &support_rows[v] {
            grad_a[k] += s[u] / lambda;
        }
        s[e.user] += 1.0;
        tail[e.user] += (1.0 - (-omega * (tf - e.time)).exp()) / omega;
    }

    let transient = (1.0 - (-omega * span).exp()) / omega;
    for v in 0..n {
        value -= mu[v] * span + excess[v] * transient;
        value -= rows[v].iter().map(|&(u, a)| a * tail[u]).sum::<f64>();
    }
    for (k, &(_, u)) in support.iter().enumerate() {
        grad_a[k] -= tail[u];
    }
    Ok(Likelihood { value, grad_a, grad_mu })
}
