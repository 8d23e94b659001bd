use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Horizon, diagonal weights and solver resolution of the control problem.
///
/// `q` rewards intensity over the horizon, `f` rewards it at `tf`, `s`
/// prices the control intensity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlConfig {
    pub t0: f64,
    pub tf: f64,
    pub q: Vec<f64>,
    pub s: Vec<f64>,
    pub f: Vec<f64>,
    #[serde(default = "ControlConfig::default_grid_steps")]
    pub grid_steps: usize,
}

impl ControlConfig {
    pub const DEFAULT_GRID_STEPS: usize = 2_000;

    fn default_grid_steps() -> usize {
        Self::DEFAULT_GRID_STEPS
    }

    /// Scalar weights expanded to diagonals.
    pub fn uniform(n: usize, t0: f64, tf: f64, q: f64, s: f64, f: f64) -> Self {
        Self { t0, tf, q: vec![q; n], s: vec![s; n], f: vec![f; n], grid_steps: Self::DEFAULT_GRID_STEPS }
    }

    pub fn with_grid_steps(mut self, steps: usize) -> Self {
        self.grid_steps = steps;
        self
    }

    /// Same weights with `S` multiplied by `factor`.
    pub fn scale_s(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.s.iter_mut().for_each(|s| *s *= factor);
        out
    }

    /// `Q = F = 0`: nothing to gain, the optimal control is identically zero.
    pub fn is_zero_reward(&self) -> bool {
        self.q.iter().chain(&self.f).all(|x| *x == 0.0)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.t0.is_finite() && self.tf.is_finite() && self.tf > self.t0) {
            return Err(Error::Config(format!("bad horizon [{}, {}]", self.t0, self.tf)));
        }
        for (name, v) in [("q", &self.q), ("s", &self.s), ("f", &self.f)] {
            if v.len() != n {
                return Err(Error::Config(format!("{name} has {} entries, expected {n}", v.len())));
            }
        }
        if let Some(x) = self.s.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
            return Err(Error::Config(format!("control cost entries must be > 0, got {x}")));
        }
        if let Some(x) = self.q.iter().chain(&self.f).find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Config(format!("reward weights must be >= 0, got {x}")));
        }
        if self.grid_steps < 2 {
            return Err(Error::Config("grid_steps must be at least 2".into()));
        }
        Ok(())
    }
}
