//! Graph neural networks that aggregate over k-hop ring neighborhoods, a
//! message-passing baseline, and tooling to train, evaluate and audit both.

pub mod baseline;
pub mod datasets;
pub mod error;
pub mod expressiveness;
pub mod graph;
pub mod harness;
pub mod khop;
pub mod model;
pub mod nn;
pub mod plan;
pub mod scalar;

pub use error::{Error, Result};
pub use graph::Graph;
pub use model::{Architecture, Model, ModelConfig, Task};
pub use nn::Matrix;
pub use scalar::Scalar;

pub type Graph64 = Graph<f64>;
pub type Graph32 = Graph<f32>;
pub type Matrix64 = Matrix<f64>;
pub type ParamStore64 = nn::ParamStore<f64>;
pub type Tape64 = nn::Tape<f64>;
pub type Model64 = Model<f64>;
pub type Model32 = Model<f32>;
