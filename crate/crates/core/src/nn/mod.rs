//! Dense differentiable kernel.
//!
//! There is no tape: every op has a forward function and a matching
//! `*_backward` function that takes the upstream gradient and whatever the
//! forward needed to keep. Parameter gradients accumulate into
//! [`ParamTensor::grad`].

pub mod gradcheck;
mod loss;
mod ops;
mod tensor;

pub use loss::{bce_with_logits, mae_loss, sigmoid, softmax_cross_entropy, softmax_rows};
pub use ops::{
    concat, concat_backward, l2_normalize_rows, l2_normalize_rows_backward, linear, linear_backward, mean_aggregate,
    mean_aggregate_backward, pad_rows, relu, relu_backward,
};
pub use tensor::{ParamTensor, Tensor2};
