//! Dense tensors, a reverse-mode tape, and the Adam optimizer.

mod adam;
mod gradcheck;
mod tape;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use gradcheck::finite_diff_check;
pub use tape::{sigmoid, Gradients, Tape, Var, PROB_EPS};
pub use tensor::Tensor;

pub(crate) use tensor::gemm;
