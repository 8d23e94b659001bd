//! Maximum-likelihood fitting of the exponential-kernel model.
//!
//! For a log on `[t0, tf]` with events `(t_i, u_i)` the log-likelihood is
//!
//! ```text
//! LL = Σ_i log λ_{u_i}(t_i) − Σ_v ∫_{t0}^{tf} λ_v(t) dt
//! ∫ λ_v = μ_v (tf − t0) + Σ_j A[v][u_j] (1 − e^{−ω(tf − t_j)}) / ω + (λ₀_v − μ_v)(1 − e^{−ω(tf − t0)}) / ω
//! ```
//!
//! Both parts are evaluated in one pass using the per-source excitation
//! `S_u(t) = Σ_{j: u_j = u, t_j < t} e^{−ω(t − t_j)}`, which also gives the
//! exact gradient.

mod fit;
mod likelihood;

pub use fit::{fit_mle, FitConfig, FitResult};
pub use likelihood::{log_likelihood, Likelihood};
