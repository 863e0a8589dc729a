//! Minimal differentiable-computation substrate: dense f64 tensors, an eager
//! reverse-mode tape, the layer primitives the model needs, an Adam
//! optimizer, a finite-difference gradient checker and a binary parameter
//! checkpoint format.
//!
//! Everything is deterministic by construction: fixed accumulation orders,
//! no atomics, no thread-dependent reductions.

mod adam;
mod checkpoint;
mod error;
mod gradcheck;
mod graph;
mod layers;
mod params;
mod tensor;

pub use adam::AdamState;
pub use checkpoint::{
    load_checkpoint, read_checkpoint_bytes, save_checkpoint, write_checkpoint_bytes,
    CheckpointEntry, CHECKPOINT_VERSION,
};
pub use error::NumericsError;
pub use gradcheck::{finite_diff_gradcheck, GradcheckReport};
pub use graph::{Graph, GradMap, NodeId};
pub use layers::{FfnParams, LayerNormParams, LinearParams, MhaParams};
pub use params::{GradAccum, ParamId, ParamStore, Parameter};
pub use tensor::{matmul_nn, matmul_nt, matmul_tn, Tensor};

/// Epsilon used by layer norm throughout the model stack.
pub const LAYER_NORM_EPS: f64 = 1e-5;
