//! A small pre-LN transformer trained on synthetic arithmetic tasks.
//!
//! Gradients are computed by hand-written reverse mode for this fixed
//! architecture. Forward passes capture the residual stream and per-head
//! output norms in the formats of [`phid_core::traces`], and the
//! experiments module implements the layer and head interventions.

pub mod checkpoint;
pub mod config;
pub mod experiments;
pub mod gradcheck;
pub mod ig;
pub mod model;
mod backward;
pub mod optim;
pub mod params;
pub mod tasks;
pub mod train;

pub use config::{ToyConfig, TrainConfig};
pub use model::{Capture, Intervention, ToyModel};
pub use tasks::{Dataset, Example, TaskSpec};
pub use train::{train, TrainReport};
