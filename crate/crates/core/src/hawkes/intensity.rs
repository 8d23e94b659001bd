use crate::error::{Error, Result};

use super::{EventLog, NetworkModel};

/// Intensity of every user at a given instant.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityVector {
    pub values: Vec<f64>,
    pub as_of: f64,
}

impl IntensityVector {
    pub fn new(values: Vec<f64>, as_of: f64) -> Self {
        Self { values, as_of }
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Direct evaluation of the intensity at `t` by summing the kernel over every
/// event strictly before `t`. Quadratic in history length; the reference
/// against which the recursive updates are checked.
pub fn intensity_from_history(model: &NetworkModel, log: &EventLog, t: f64) -> Result<IntensityVector> {
    let n = model.n();
    if log.n() != n {
        return Err(Error::MalformedLog(format!("log has n={}, model has n={n}", log.n())));
    }
    if t < log.t0() || t > log.tf() {
        return Err(Error::OutsideHorizon { t, t0: log.t0(), tf: log.tf() });
    }
    let omega = model.omega();
    let mut lambda = model.mu0().to_vec();
    let transient = (-omega * (t - log.t0())).exp();
    for ((l, l0), m) in lambda.iter_mut().zip(model.lambda0()).zip(model.mu0()) {
        *l += transient * (l0 - m);
    }
    for e in log.events().iter().take_while(|e| e.time < t) {
        if e.user >= n {
            return Err(Error::MalformedLog(format!("user {} >= n={n}", e.user)));
        }
        let k = (-omega * (t - e.time)).exp();
        for &(v, w) in model.column(e.user) {
            lambda[v] += w * k;
        }
    }
    Ok(IntensityVector::new(lambda, t))
}

/// Exponential relaxation toward the baseline with no events in `(as_of, t)`:
/// `λ(t) = μ₀ + exp(-ω (t - s)) (λ(s) - μ₀)`.
pub fn decay_intensity(model: &NetworkModel, lambda: &IntensityVector, t: f64) -> Result<IntensityVector> {
    if t < lambda.as_of {
        return Err(Error::TimeReversal { requested: t, as_of: lambda.as_of });
    }
    let mut out = lambda.clone();
    decay_in_place(model, &mut out.values, t - lambda.as_of);
    out.as_of = t;
    Ok(out)
}

pub(crate) fn decay_in_place(model: &NetworkModel, values: &mut [f64], elapsed: f64) {
    if elapsed == 0.0 {
        return;
    }
    let k = (-model.omega() * elapsed).exp();
    for (l, m) in values.iter_mut().zip(model.mu0()) {
        *l = m + k * (*l - m);
    }
}

/// Adds column `user` of `A` to the intensity (one event by `user`).
pub fn apply_jump(model: &NetworkModel, lambda: &IntensityVector, user: usize) -> Result<IntensityVector> {
    if user >= model.n() {
        return Err(Error::IndexOutOfRange { index: user, n: model.n() });
    }
    let mut out = lambda.clone();
    jump_in_place(model, &mut out.values, user);
    Ok(out)
}

pub(crate) fn jump_in_place(model: &NetworkModel, values: &mut [f64], user: usize) {
    for &(v, w) in model.column(user) {
        values[v] += w;
    }
}
