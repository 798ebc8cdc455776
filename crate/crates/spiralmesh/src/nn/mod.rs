//! Reverse-mode autodiff, mesh convolution layers, and the optimizer.

pub mod gradcheck;
pub mod layers;
pub mod laplacian;
pub mod optim;
pub mod tensor;

pub use gradcheck::{max_relative_error, CheckInput};
pub use layers::{ChebConv, Linear, SpiralConv};
pub use laplacian::rescaled_laplacian;
pub use optim::Adam;
pub use tensor::{Csr, GatherPlan, Gradients, SelectPlan, Tape, TensorId, UpsamplePlan};
