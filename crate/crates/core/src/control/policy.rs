use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::riccati::{diag_at_h_a, solve_g, solve_riccati, RiccatiSolution, TimeGrid};
use super::ControlConfig;
use crate::error::{Error, Result};
use crate::hawkes::{IntensityVector, NetworkModel};

/// Solved feedback law on a time grid, with piecewise-linear interpolation
/// of `H` and `g` in between grid points.
///
/// Besides `H` and `g` the policy caches, per grid point, the deterministic
/// control term `base_u = -S⁻¹[Aᵀ(g + H μ₀) + ½ diag(AᵀHA)]`, `diag(AᵀHA)`,
/// and suffix maxima of the gain magnitudes used as thinning envelopes. The
/// gain `K(t) = -S⁻¹AᵀH(t)` itself is applied on demand through the sparse
/// columns of `A`, which keeps memory at one `n×n` matrix per grid point.
#[derive(Debug, Clone)]
pub struct FeedbackPolicy {
    model: NetworkModel,
    config: ControlConfig,
    grid: TimeGrid,
    h: Vec<DMatrix<f64>>,
    g: Vec<DVector<f64>>,
    d: Vec<DVector<f64>>,
    base_u: Vec<DVector<f64>>,
    s_inv: Vec<f64>,
    /// `[j * n + k]`: max over grid points `j' >= j` of `Σ_i |K_ik(τ_j')|`.
    column_gain_suffix: Vec<f64>,
    /// `[j]`: max over `j' >= j` of `Σ_i max(0, base_u_i(τ_j'))`.
    base_suffix: Vec<f64>,
}

/// Feedback law evaluated at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlEvaluation {
    /// Control intensity after clamping negative components to zero.
    pub u: Vec<f64>,
    pub pre_clamp: Vec<f64>,
    pub min_pre_clamp: f64,
}

impl ControlEvaluation {
    fn from_pre_clamp(pre_clamp: Vec<f64>) -> Self {
        let min_pre_clamp = pre_clamp.iter().copied().fold(f64::INFINITY, f64::min);
        let u = pre_clamp.iter().map(|x| x.max(0.0)).collect();
        Self { u, pre_clamp, min_pre_clamp }
    }

    pub fn total(&self) -> f64 {
        self.u.iter().sum()
    }
}

impl FeedbackPolicy {
    /// Solves the Riccati and affine ODEs and assembles the policy.
    pub fn build(model: &NetworkModel, config: &ControlConfig) -> Result<Self> {
        let riccati = solve_riccati(model, config)?;
        let g = solve_g(model, config, &riccati)?;
        Self::from_parts(model, config, riccati, g)
    }

    pub fn from_parts(
        model: &NetworkModel,
        config: &ControlConfig,
        riccati: RiccatiSolution,
        g: Vec<DVector<f64>>,
    ) -> Result<Self> {
        config.validate(model.n())?;
        let n = model.n();
        let grid = riccati.grid;
        if grid != TimeGrid::new(config.t0, config.tf, config.grid_steps)
            || riccati.h.len() != grid.steps + 1
            || g.len() != grid.steps + 1
        {
            return Err(Error::Config("policy arrays do not match the configured grid".into()));
        }
        if riccati.h.iter().any(|h| h.nrows() != n || h.ncols() != n) || g.iter().any(|v| v.len() != n) {
            return Err(Error::Config("policy arrays do not match the model size".into()));
        }
        let s_inv: Vec<f64> = config.s.iter().map(|s| 1.0 / s).collect();
        let mu = DVector::from_column_slice(model.mu0());
        let points = grid.steps + 1;
        let mut d = Vec::with_capacity(points);
        let mut base_u = Vec::with_capacity(points);
        let mut column_gain = vec![0.0; points * n];
        let mut base_pos = vec![0.0; points];
        let mut tmp = vec![0.0; n];
        for j in 0..points {
            let h = &riccati.h[j];
            let mut w = DMatrix::zeros(n, n);
            for u in 0..n {
                let mut col = w.column_mut(u);
                for &(v, a) in model.column(u) {
                    col.axpy(a, &h.column(v), 1.0);
                }
            }
            let dj = diag_at_h_a(model, &w);
            let inner = &g[j] + h * &mu;
            model.a_transpose_times(inner.as_slice(), &mut tmp);
            let bj = DVector::from_iterator(n, (0..n).map(|i| -s_inv[i] * (tmp[i] + 0.5 * dj[i])));
            // K_ik = -s_i⁻¹ (AᵀH)_ik = -s_i⁻¹ W_ki
            for k in 0..n {
                column_gain[j * n + k] = (0..n).map(|i| s_inv[i] * w[(k, i)].abs()).sum();
            }
            base_pos[j] = bj.iter().map(|x| x.max(0.0)).sum();
            d.push(dj);
            base_u.push(bj);
        }
        for j in (0..points - 1).rev() {
            base_pos[j] = base_pos[j].max(base_pos[j + 1]);
            for k in 0..n {
                column_gain[j * n + k] = column_gain[j * n + k].max(column_gain[(j + 1) * n + k]);
            }
        }
        Ok(Self {
            model: model.clone(),
            config: config.clone(),
            grid,
            h: riccati.h,
            g,
            d,
            base_u,
            s_inv,
            column_gain_suffix: column_gain,
            base_suffix: base_pos,
        })
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    pub fn model(&self) -> &NetworkModel {
        &self.model
    }

    pub fn config(&self) -> &ControlConfig {
        &self.config
    }

    pub fn grid(&self) -> TimeGrid {
        self.grid
    }

    pub fn t0(&self) -> f64 {
        self.grid.t0
    }

    pub fn tf(&self) -> f64 {
        self.grid.tf
    }

    pub fn h_nodes(&self) -> &[DMatrix<f64>] {
        &self.h
    }

    pub fn g_nodes(&self) -> &[DVector<f64>] {
        &self.g
    }

    pub fn covers(&self, t0: f64, tf: f64) -> bool {
        self.grid.t0 <= t0 && tf <= self.grid.tf
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t < self.grid.t0 || t > self.grid.tf || t.is_nan() {
            return Err(Error::OutsideHorizon { t, t0: self.grid.t0, tf: self.grid.tf });
        }
        Ok(())
    }

    pub fn h_at(&self, t: f64) -> DMatrix<f64> {
        let (k, w) = self.grid.locate(t);
        &self.h[k] * (1.0 - w) + &self.h[k + 1] * w
    }

    pub fn g_at(&self, t: f64) -> DVector<f64> {
        let (k, w) = self.grid.locate(t);
        &self.g[k] * (1.0 - w) + &self.g[k + 1] * w
    }

    /// Gain matrix `K(t) = -S⁻¹ Aᵀ H(t)`, materialized.
    pub fn gain(&self, t: f64) -> DMatrix<f64> {
        let h = self.h_at(t);
        let n = self.n();
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for &(v, a) in self.model.column(i) {
                for c in 0..n {
                    k[(i, c)] -= self.s_inv[i] * a * h[(v, c)];
                }
            }
        }
        k
    }

    /// `out = H(t) x`, skipping zero entries of `x`.
    pub fn h_times(&self, t: f64, x: &[f64], out: &mut [f64]) {
        let (k, w) = self.grid.locate(t);
        let (lo, hi) = (self.h[k].as_slice(), self.h[k + 1].as_slice());
        let n = self.n();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (c, &xc) in x.iter().enumerate() {
            if xc == 0.0 {
                continue;
            }
            let (a, b) = ((1.0 - w) * xc, w * xc);
            let (col_lo, col_hi) = (&lo[c * n..(c + 1) * n], &hi[c * n..(c + 1) * n]);
            for i in 0..n {
                out[i] += a * col_lo[i] + b * col_hi[i];
            }
        }
    }

    /// `out = -S⁻¹ Aᵀ y`.
    fn apply_neg_s_inv_at(&self, y: &[f64], out: &mut [f64]) {
        self.model.a_transpose_times(y, out);
        for (o, s) in out.iter_mut().zip(&self.s_inv) {
            *o *= -s;
        }
    }

    /// `out = K(t) x` with `scratch` of length `n`.
    pub fn gain_times(&self, t: f64, x: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        self.h_times(t, x, scratch);
        self.apply_neg_s_inv_at(scratch, out);
    }

    /// `out = K(t) a_u`, the direction of the control component started by
    /// one event of user `u`.
    pub fn gain_times_column(&self, t: f64, u: usize, scratch: &mut [f64], out: &mut [f64]) {
        let (k, w) = self.grid.locate(t);
        let n = self.n();
        let (lo, hi) = (self.h[k].as_slice(), self.h[k + 1].as_slice());
        scratch.iter_mut().for_each(|o| *o = 0.0);
        for &(v, a) in self.model.column(u) {
            let (x, y) = ((1.0 - w) * a, w * a);
            let (col_lo, col_hi) = (&lo[v * n..(v + 1) * n], &hi[v * n..(v + 1) * n]);
            for i in 0..n {
                scratch[i] += x * col_lo[i] + y * col_hi[i];
            }
        }
        self.apply_neg_s_inv_at(scratch, out);
    }

    /// Deterministic control term `base_u(t)` (pre-clamp).
    pub fn base_u(&self, t: f64, out: &mut [f64]) {
        let (k, w) = self.grid.locate(t);
        for (i, o) in out.iter_mut().enumerate() {
            *o = (1.0 - w) * self.base_u[k][i] + w * self.base_u[k + 1][i];
        }
    }

    /// Upper bound on `Σ_i max(0, base_u_i(s) + (K(s) c x)_i)` for every
    /// `s >= t`, fixed `x` and any `0 <= c <= scale`.
    pub fn superposition_envelope(&self, t: f64, x: &[f64], scale: f64) -> f64 {
        let (k, _) = self.grid.locate(t);
        let n = self.n();
        let gains = &self.column_gain_suffix[k * n..(k + 1) * n];
        self.base_suffix[k] + scale * gains.iter().zip(x).map(|(g, xi)| g * xi.abs()).sum::<f64>()
    }

    /// Upper bound on `Σ_i |(K(s) a_u)_i|` for every `s >= t`.
    pub fn component_envelope(&self, t: f64, u: usize) -> f64 {
        let (k, _) = self.grid.locate(t);
        let n = self.n();
        let gains = &self.column_gain_suffix[k * n..(k + 1) * n];
        self.model.column(u).iter().map(|&(v, a)| a * gains[v]).sum()
    }

    pub fn to_file(&self) -> PolicyFile {
        PolicyFile {
            grid: self.grid.points(),
            h: self.h.iter().map(|m| m.transpose().as_slice().to_vec()).collect(),
            g: self.g.iter().map(|v| v.as_slice().to_vec()).collect(),
            config: self.config.clone(),
        }
    }

    pub fn from_file(file: PolicyFile, model: &NetworkModel) -> Result<Self> {
        let n = model.n();
        let c = &file.config;
        let grid = TimeGrid::new(c.t0, c.tf, c.grid_steps);
        if file.grid.len() != grid.steps + 1 || file.h.len() != file.grid.len() || file.g.len() != file.grid.len() {
            return Err(Error::Config("policy file arrays disagree with its grid".into()));
        }
        if file.grid.iter().zip(grid.points()).any(|(a, b)| (a - b).abs() > 1e-9 * (1.0 + b.abs())) {
            return Err(Error::Config("policy file grid is not the uniform grid of its config".into()));
        }
        if file.h.iter().any(|h| h.len() != n * n) || file.g.iter().any(|g| g.len() != n) {
            return Err(Error::Config(format!("policy file does not match a model with n={n}")));
        }
        let h = file.h.iter().map(|v| DMatrix::from_row_slice(n, n, v)).collect();
        let g = file.g.iter().map(|v| DVector::from_column_slice(v)).collect();
        Self::from_parts(model, &file.config, RiccatiSolution { grid, h }, g)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(f, &self.to_file())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, model: &NetworkModel) -> Result<Self> {
        let f = std::io::BufReader::new(std::fs::File::open(path)?);
        let file: PolicyFile = serde_json::from_reader(f)?;
        Self::from_file(file, model)
    }
}

/// Serialized policy: grid, `H` flattened row-major per grid point, `g`, and
/// the configuration it was solved for.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PolicyFile {
    pub grid: Vec<f64>,
    #[serde(rename = "H")]
    pub h: Vec<Vec<f64>>,
    pub g: Vec<Vec<f64>>,
    pub config: ControlConfig,
}

/// Optimal control intensity `u*(t) = -S⁻¹[Aᵀg(t) + AᵀH(t)λ(t) + ½ diag(AᵀH(t)A)]`
/// with negative components clamped to zero.
pub fn optimal_intensity(policy: &FeedbackPolicy, lambda: &IntensityVector, t: f64) -> Result<ControlEvaluation> {
    policy.check_time(t)?;
    let n = policy.n();
    if lambda.values.len() != n {
        return Err(Error::Config(format!("intensity has {} entries, policy expects {n}", lambda.values.len())));
    }
    let (k, w) = policy.grid.locate(t);
    let mut h_lambda = vec![0.0; n];
    policy.h_times(t, &lambda.values, &mut h_lambda);
    let g: Vec<f64> = (0..n).map(|i| (1.0 - w) * policy.g[k][i] + w * policy.g[k + 1][i]).collect();
    let mut at_g = vec![0.0; n];
    let mut at_h_lambda = vec![0.0; n];
    policy.model.a_transpose_times(&g, &mut at_g);
    policy.model.a_transpose_times(&h_lambda, &mut at_h_lambda);
    let pre: Vec<f64> = (0..n)
        .map(|i| {
            let d = (1.0 - w) * policy.d[k][i] + w * policy.d[k + 1][i];
            -policy.s_inv[i] * (at_g[i] + at_h_lambda[i] + 0.5 * d)
        })
        .collect();
    Ok(ControlEvaluation::from_pre_clamp(pre))
}
