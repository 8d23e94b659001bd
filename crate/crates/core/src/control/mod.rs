//! Optimal feedback control of network activity.
//!
//! With quadratic running and terminal rewards on the intensity and a
//! quadratic cost on the control intensity, the cost-to-go is quadratic in
//! λ with coefficients `H(t)` (a matrix Riccati ODE) and `g(t)` (an affine
//! ODE driven by `H`), both integrated backward from `H(tf) = -F`,
//! `g(tf) = 0`:
//!
//! ```text
//! dH/dt = (ωI - A)ᵀH + H(ωI - A) + H A S⁻¹ Aᵀ H + Q
//! dg/dt = [ωI - Aᵀ + H A S⁻¹ Aᵀ] g - ω H μ₀ + ½ [H A S⁻¹ - I] diag(Aᵀ H A)
//! u*(t) = -S⁻¹ [Aᵀ g + Aᵀ H λ(t) + ½ diag(Aᵀ H A)]
//! ```
//!
//! The optimal intensity is affine in the current organic intensity, so it
//! decomposes into a deterministic part plus one exponentially decaying
//! contribution per past event. [`CheshireControl`] samples incentivized
//! actions from that superposition online.

mod calibrate;
mod cheshire;
mod config;
mod objective;
mod policy;
mod riccati;

pub use calibrate::{calibrate_budget, estimate_budget, Calibration, CalibrationOptions};
pub use cheshire::{cheshire_next, controlled_simulator, simulate_controlled, CheshireControl};
pub use config::ControlConfig;
pub use objective::{objective_estimate, run_cost, ObjectiveEstimate};
pub use policy::{optimal_intensity, ControlEvaluation, FeedbackPolicy, PolicyFile};
pub use riccati::{riccati_rhs, solve_g, solve_riccati, RiccatiSolution, TimeGrid};
