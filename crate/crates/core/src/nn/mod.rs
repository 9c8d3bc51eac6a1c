//! Small dense neural-network toolkit: matrices, a gradient tape, layers and
//! an optimizer.

mod adam;
mod batchnorm;
pub mod gradcheck;
mod loss;
mod matrix;
mod mlp;
mod params;
mod tape;

pub use adam::Adam;
pub use batchnorm::{BatchNorm, BN_EPS, BN_MOMENTUM};
pub use loss::{argmax_rows, softmax_cross_entropy};
pub use matrix::Matrix;
pub use mlp::{Dense, Mlp};
pub use params::{Checkpoint, Gradients, ParamId, ParamStore, TensorRecord};
pub use tape::{Backward, Tape, Var};
