//! Dense matrices and reverse-mode differentiation.

mod graph;
pub mod gradcheck;
mod matrix;

pub use graph::{log_sum_exp, sigmoid, softmax, Axis, Gradients, Graph, NodeId, ZERO_NORM};
pub use matrix::Matrix;
