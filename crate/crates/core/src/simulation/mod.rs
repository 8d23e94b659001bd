//! Event sampling: Ogata thinning for the Hawkes dynamics, Lewis thinning
//! for inhomogeneous Poisson rates, and counting-process read-outs.

mod counting;
mod engine;
mod thinning;

pub use counting::{counting_path, CountingPath};
pub use engine::{
    simulate_uncontrolled, simulate_with_constant_control, ConstantControl, ControlDiagnostics, ControlSource,
    NoControl, SimulationResult, SimulationState, Simulator, DEFAULT_EVENT_CAP,
};
pub use thinning::{sample_inhomog_poisson, sample_inhomog_poisson_multi};
