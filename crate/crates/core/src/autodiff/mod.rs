//! Minimal reverse-mode automatic differentiation over dense matrices.
//!
//! A [`Tape`] records every operation of one forward pass. Calling
//! [`Tape::backward`] on a scalar walks the record in reverse and returns the
//! gradient of every parameter leaf. [`Var::grad_reverse`] is the gradient
//! reversal layer used to turn the adversarial min-max into a single
//! backward pass.
//!
//! Broadcasting is deliberately limited to scalar-with-tensor; row biases go
//! through the explicit [`Var::add_bias`].

mod tape;
mod tensor;

pub use tape::{concat, Gradients, ParamId, Tape, Var};
pub use tensor::Tensor;
