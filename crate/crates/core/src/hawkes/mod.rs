//! Network model, event logs and the exact intensity algebra.
//!
//! The intensity of user `v` is
//!
//! ```text
//! λ_v(t) = μ₀_v + Σ_{t_i < t} A[v][u_i] · exp(-ω (t - t_i))
//! ```
//!
//! summed over every past event (organic and incentivized alike). Column `u`
//! of `A` is the jump the whole network receives when user `u` acts.

pub(crate) mod intensity;
mod log;
mod model;
mod stability;

pub use intensity::{apply_jump, decay_intensity, intensity_from_history, IntensityVector};
pub use log::{Event, EventKind, EventLog};
pub use model::{ModelFile, NetworkModel};
pub use stability::{branching_check, StabilityReport};

/// Absolute tolerance used for intensity equality checks.
pub const INTENSITY_TOL: f64 = 1e-9;
