//! Per-vehicle actor networks and the shared critic.
//!
//! Every network works on a [`Graph`](cmvrp_autodiff::Graph) built per
//! episode; parameters are borrowed, never copied. Shapes follow the
//! row-vector convention of the autodiff crate.

mod actor;
mod critic;
mod distribution;
#[cfg(feature = "gradcheck")]
pub mod gradcheck;
mod rollout;

pub use actor::{
    attention_logits, customer_features, decode_step, encode_customers, encode_vehicles, vehicle_features, Actor,
    ActorNodes,
};
pub use critic::{critic_value, Critic, CriticNodes};
pub use distribution::{action_distribution, DecodeChoice, StepDistribution};
pub use rollout::{play_episode, DecodeMode, Episode, StepRecord};

use cmvrp_autodiff::Array;
use rand::Rng;

use crate::error::{CoreError, Result};
use crate::rng::StreamRng;

/// Demand feature scale: demands are divided by the largest possible demand.
pub const DEMAND_SCALE: f64 = crate::instances::MAX_DEMAND as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PolicyDims {
    /// Embedding and decoder hidden width.
    pub embed_dim: usize,
    /// Attention projection width.
    pub attention_dim: usize,
    pub num_vehicles: usize,
}

impl PolicyDims {
    pub fn new(embed_dim: usize, attention_dim: usize, num_vehicles: usize) -> Result<Self> {
        let dims = Self {
            embed_dim,
            attention_dim,
            num_vehicles,
        };
        dims.validate()?;
        Ok(dims)
    }

    pub fn with_defaults(num_vehicles: usize) -> Self {
        Self {
            embed_dim: 128,
            attention_dim: 128,
            num_vehicles,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embed_dim == 0 || self.attention_dim == 0 || self.num_vehicles == 0 {
            return Err(CoreError::Validation(format!(
                "policy dimensions must be positive (fan-in of zero): {self:?}"
            )));
        }
        Ok(())
    }

    /// Rows of the attention matrix: one customer row, the flattened fleet,
    /// and the decoder state.
    pub fn attention_input(&self) -> usize {
        self.embed_dim * (self.num_vehicles + 2)
    }
}

/// Weights uniform in `±1/sqrt(fan_in)` where fan-in is the row count.
pub(crate) fn uniform_init(rng: &mut StreamRng, rows: usize, cols: usize) -> Array {
    let bound = 1.0 / (rows as f64).sqrt();
    let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
    Array::matrix(rows, cols, data).expect("shape from dims")
}

pub(crate) fn check_shape(params: &cmvrp_autodiff::ParamSet, name: &str, shape: &[usize]) -> Result<usize> {
    let slot = params.slot(name)?;
    let actual = params.get(slot).shape();
    if actual != shape {
        return Err(CoreError::Validation(format!(
            "parameter {name} has shape {actual:?}, expected {shape:?}"
        )));
    }
    Ok(slot)
}
