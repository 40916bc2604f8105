//! Capacitated multi-vehicle routing with a fixed heterogeneous fleet.
//!
//! - [`instances`]: problem data, the random instance distribution, text I/O.
//! - [`env`]: the sequential environment vehicles act in, one action each per round.
//! - [`plan`]: route plans and their text document.
//! - [`policy`]: per-vehicle attention actors and the shared critic.
//! - [`training`]: batched rollouts and advantage actor-critic updates.
//! - [`baselines`]: savings, sweep, 2-opt, random play and an exact solver
//!   for tiny instances.

pub mod baselines;
pub mod env;
pub mod error;
pub mod instances;
pub mod plan;
pub mod policy;
pub mod rng;
mod textfmt;
pub mod training;

pub use error::{CoreError, Result};
