//! Reverse-mode automatic differentiation over dense `f64` arrays.
//!
//! The [`Graph`] is a dynamic tape rebuilt for every forward pass. Weights
//! live in [`ParamSet`]s and are borrowed into a graph with
//! [`Graph::param`]; gradients come back as [`Gradients`] indexed by node and
//! are usually gathered into a [`GradMap`] aligned with the parameter set.

mod adam;
mod array;
pub mod checkpoint;
mod error;
#[cfg(feature = "gradcheck")]
pub mod gradcheck;
mod graph;
mod gru;
mod params;

pub use adam::{AdamConfig, AdamState};
pub use array::Array;
pub use checkpoint::{Checkpoint, ParamGroup};
pub use error::{AutodiffError, Result};
pub use graph::{Gradients, Graph, NodeId, MASKED_LOG_PROB};
pub use gru::{gru_cell, GruNodes, GruSlots};
pub use params::{GradMap, ParamSet};
