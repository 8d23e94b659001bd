//! Backward fourth-order integration of the Riccati and affine ODEs.

use nalgebra::{DMatrix, DVector};

use super::ControlConfig;
use crate::error::{Error, Result};
use crate::hawkes::{branching_check, NetworkModel};

/// Magnitude past which an iterate is treated as a finite-time blow-up.
const BLOW_UP: f64 = 1e150;

/// Uniform grid `t0 = τ_0 < … < τ_steps = tf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    pub t0: f64,
    pub tf: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, steps: usize) -> Self {
        Self { t0, tf, steps }
    }

    pub fn step(&self) -> f64 {
        (self.tf - self.t0) / self.steps as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        if k == self.steps {
            self.tf
        } else {
            self.t0 + k as f64 * self.step()
        }
    }

    pub fn points(&self) -> Vec<f64> {
        (0..=self.steps).map(|k| self.point(k)).collect()
    }

    /// Cell index `k` and weight `w` with `t = (1 - w) τ_k + w τ_{k+1}`.
    /// Times outside the horizon are clamped to its ends.
    pub fn locate(&self, t: f64) -> (usize, f64) {
        let x = ((t - self.t0) / self.step()).clamp(0.0, self.steps as f64);
        let k = (x.floor() as usize).min(self.steps - 1);
        (k, (x - k as f64).clamp(0.0, 1.0))
    }
}

/// `H` sampled on the policy grid.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub grid: TimeGrid,
    pub h: Vec<DMatrix<f64>>,
}

struct Coefficients<'a> {
    model: &'a NetworkModel,
    q: &'a [f64],
    s_inv: Vec<f64>,
}

impl<'a> Coefficients<'a> {
    fn new(model: &'a NetworkModel, config: &'a ControlConfig) -> Self {
        Self { model, q: &config.q, s_inv: config.s.iter().map(|s| 1.0 / s).collect() }
    }

    /// `W = H A`, using the sparse columns of `A`.
    fn h_times_a(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.model.n();
        let mut w = DMatrix::zeros(n, n);
        for u in 0..n {
            let mut col = w.column_mut(u);
            for &(v, a) in self.model.column(u) {
                col.axpy(a, &h.column(v), 1.0);
            }
        }
        w
    }

    fn riccati(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let omega = self.model.omega();
        let w = self.h_times_a(h);
        let mut ws = w.clone();
        for (u, s) in self.s_inv.iter().enumerate() {
            ws.column_mut(u).scale_mut(*s);
        }
        // H A S⁻¹ Aᵀ H = W S⁻¹ Wᵀ; Aᵀ H = Wᵀ since H is symmetric
        let mut out = &ws * w.transpose();
        out += h * (2.0 * omega);
        out -= &w;
        out -= w.transpose();
        for (i, q) in self.q.iter().enumerate() {
            out[(i, i)] += q;
        }
        out
    }
}

/// Right-hand side of the Riccati ODE, `dH/dt` at `H`.
pub fn riccati_rhs(model: &NetworkModel, config: &ControlConfig, h: &DMatrix<f64>) -> DMatrix<f64> {
    Coefficients::new(model, config).riccati(h)
}

fn check_finite(m: impl IntoIterator<Item = f64>, t: f64, what: &str) -> Result<()> {
    for x in m {
        if !x.is_finite() || x.abs() > BLOW_UP {
            return Err(Error::SolverDivergence { t, reason: format!("{what} entry {x} is not finite") });
        }
    }
    Ok(())
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Stiffness budget `|λ|·dt` per RK4 substep, inside the real-axis
/// stability interval of about 2.78.
const STIFFNESS_PER_STEP: f64 = 2.0;

/// RK4 substeps per grid cell so that the linear part of the backward
/// dynamics (rate at most `2(ω + ρ(A))`) stays inside the stability region.
pub(crate) fn substeps(model: &NetworkModel, dt: f64) -> usize {
    let rho_a = branching_check(model).spectral_radius * model.omega();
    let rate = 2.0 * (model.omega() + rho_a);
    ((rate * dt / STIFFNESS_PER_STEP).ceil() as usize).max(1)
}

fn rk4_h(coef: &Coefficients, cur: &DMatrix<f64>, dt: f64) -> DMatrix<f64> {
    let k1 = coef.riccati(cur);
    let k2 = coef.riccati(&(cur - &k1 * (0.5 * dt)));
    let k3 = coef.riccati(&(cur - &k2 * (0.5 * dt)));
    let k4 = coef.riccati(&(cur - &k3 * dt));
    let mut next = cur - (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    symmetrize(&mut next);
    next
}

/// Classical RK4 backward in time from `H(tf) = -F`, symmetrizing after
/// every step. Each grid cell is split into [`substeps`] steps; only grid
/// nodes are stored.
pub fn solve_riccati(model: &NetworkModel, config: &ControlConfig) -> Result<RiccatiSolution> {
    config.validate(model.n())?;
    let n = model.n();
    let grid = TimeGrid::new(config.t0, config.tf, config.grid_steps);
    let coef = Coefficients::new(model, config);
    let m = substeps(model, grid.step());
    let dt = grid.step() / m as f64;
    let mut terminal = DMatrix::zeros(n, n);
    for (i, f) in config.f.iter().enumerate() {
        terminal[(i, i)] = -f;
    }
    let mut h = vec![DMatrix::zeros(0, 0); grid.steps + 1];
    h[grid.steps] = terminal;
    for k in (0..grid.steps).rev() {
        let mut cur = h[k + 1].clone();
        for j in (0..m).rev() {
            cur = rk4_h(&coef, &cur, dt);
            check_finite(cur.iter().copied(), grid.point(k) + j as f64 * dt, "H")?;
        }
        h[k] = cur;
    }
    Ok(RiccatiSolution { grid, h })
}

/// Per-stage quantities of the `g` equation that depend only on `H`.
struct GStage {
    w: DMatrix<f64>,
    h_mu: DVector<f64>,
    d: DVector<f64>,
}

impl GStage {
    fn new(coef: &Coefficients, h: &DMatrix<f64>) -> Self {
        let model = coef.model;
        let w = coef.h_times_a(h);
        let mu = DVector::from_column_slice(model.mu0());
        let h_mu = h * mu;
        let d = diag_at_h_a(model, &w);
        Self { w, h_mu, d }
    }

    fn rhs(&self, coef: &Coefficients, g: &DVector<f64>) -> DVector<f64> {
        let model = coef.model;
        let omega = model.omega();
        let n = model.n();
        let mut atg = vec![0.0; n];
        model.a_transpose_times(g.as_slice(), &mut atg);
        // S⁻¹ (Aᵀ g + ½ d)
        let inner = DVector::from_iterator(n, (0..n).map(|i| coef.s_inv[i] * (atg[i] + 0.5 * self.d[i])));
        let mut out = &self.w * inner;
        for i in 0..n {
            out[i] += omega * g[i] - atg[i] - omega * self.h_mu[i] - 0.5 * self.d[i];
        }
        out
    }
}

/// `diag(Aᵀ H A)` from `W = H A`.
pub(crate) fn diag_at_h_a(model: &NetworkModel, w: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(
        model.n(),
        (0..model.n()).map(|i| model.column(i).iter().map(|&(v, a)| a * w[(v, i)]).sum::<f64>()),
    )
}

/// RK4 backward from `g(tf) = 0` on the grid of `riccati`. Within each
/// cell `H` is re-integrated from the stored node together with `g`, so
/// the stage values of `H` are those of a coupled fourth-order scheme.
pub fn solve_g(model: &NetworkModel, config: &ControlConfig, riccati: &RiccatiSolution) -> Result<Vec<DVector<f64>>> {
    config.validate(model.n())?;
    let grid = riccati.grid;
    if grid != TimeGrid::new(config.t0, config.tf, config.grid_steps) || riccati.h.len() != grid.steps + 1 {
        return Err(Error::Config("Riccati grid does not match the control configuration".into()));
    }
    if riccati.h[0].nrows() != model.n() {
        return Err(Error::Config("Riccati solution dimension does not match the model".into()));
    }
    let coef = Coefficients::new(model, config);
    let n = model.n();
    let m = substeps(model, grid.step());
    let dt = grid.step() / m as f64;
    let mut g = vec![DVector::zeros(n); grid.steps + 1];
    for k in (0..grid.steps).rev() {
        let mut h = riccati.h[k + 1].clone();
        let mut cur = g[k + 1].clone();
        for j in (0..m).rev() {
            let hk1 = coef.riccati(&h);
            let h2 = &h - &hk1 * (0.5 * dt);
            let hk2 = coef.riccati(&h2);
            let h3 = &h - &hk2 * (0.5 * dt);
            let hk3 = coef.riccati(&h3);
            let h4 = &h - &hk3 * dt;

            let k1 = GStage::new(&coef, &h).rhs(&coef, &cur);
            let k2 = GStage::new(&coef, &h2).rhs(&coef, &(&cur - &k1 * (0.5 * dt)));
            let k3 = GStage::new(&coef, &h3).rhs(&coef, &(&cur - &k2 * (0.5 * dt)));
            let k4 = GStage::new(&coef, &h4).rhs(&coef, &(&cur - &k3 * dt));
            cur -= (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
            check_finite(cur.iter().copied(), grid.point(k) + j as f64 * dt, "g")?;

            if j > 0 {
                let hk4 = coef.riccati(&h4);
                h -= (hk1 + hk2 * 2.0 + hk3 * 2.0 + hk4) * (dt / 6.0);
                symmetrize(&mut h);
            }
        }
        g[k] = cur;
    }
    Ok(g)
}
