//! Closed-loop activity shaping for networks of mutually exciting point processes.
//!
//! The crate is organised around the life cycle of an experiment:
//!
//! - [`hawkes`] holds the network model (influence matrix, baselines, decay)
//!   and the exact intensity algebra shared by every other module.
//! - [`simulation`] samples organic activity with Ogata thinning and
//!   provides the generic thinning sampler for inhomogeneous Poisson rates.
//! - [`control`] solves the backward Riccati and affine ODEs that define the
//!   optimal feedback intensity and runs the online CHESHIRE sampler.
//! - [`networks`] generates Kronecker graphs, draws model parameters and
//!   computes PageRank / degree scores for the baseline allocations.
//! - [`estimation`] fits a model from event logs by maximum likelihood.
//! - [`harness`] orchestrates multi-method experiments and writes reports.

pub mod control;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod hawkes;
pub mod networks;
pub mod rng;
pub mod simulation;

pub use error::{Error, Result};
