//! Filter pruning by local filter geometry with progressive weight decay.
//!
//! The crate is generic over the floating-point element type through
//! [`Scalar`]; the aliases at the bottom fix it to `f64` (the type used by the
//! training harness and the weight archive) or `f32`.

pub mod baselines;
pub mod data;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod scalar;
pub mod scheduler;
pub mod tensor;

pub use baselines::{Criterion, CriterionKind};
pub use error::{Error, Result};
pub use geometry::{FilterBank, NeighborGraph, SelectionResult};
pub use metrics::{ArchSpec, RetrievalEval};
pub use scalar::Scalar;
pub use scheduler::{DecaySchedule, PruneTrace, PruningPlan};
pub use tensor::{Batch, Layer, LossKind, LossSpec, Tensor, ToyModel};

pub type Tensor64 = Tensor<f64>;
pub type Tensor32 = Tensor<f32>;
pub type Model64 = ToyModel<f64>;
pub type Model32 = ToyModel<f32>;
pub type FilterBank64 = FilterBank<f64>;
pub type FilterBank32 = FilterBank<f32>;
pub type Schedule64 = DecaySchedule<f64>;
pub type Eval64 = RetrievalEval<f64>;
