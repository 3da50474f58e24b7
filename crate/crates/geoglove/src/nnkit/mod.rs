//! Minimal dense-tensor kernel with reverse-mode autodiff.
//!
//! Provides the tensors, layers (dense, ReLU, LSTM cell), losses (MSE,
//! Gaussian KL), the reparameterization trick, the Adam optimizer and a
//! finite-difference gradient checker. Everything is double precision and
//! all randomness comes from caller-supplied seeds.

mod adam;
mod gradcheck;
mod graph;
mod ops;
mod tensor;

pub use adam::{AdamState, DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPS, DEFAULT_LR, adam_step};
pub use gradcheck::grad_check;
pub use graph::{Gradients, Graph, NodeId};
pub use ops::{
    LstmCellParams, dense_forward, gaussian_kl, lstm_cell, mse_loss, relu, reparameterize,
};
pub use tensor::Tensor;
