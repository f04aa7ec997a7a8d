//! Collaborative unsupervised domain adaptation.
//!
//! Two peer networks share a domain discriminator and a noise co-adaptation
//! layer. Training combines a transferability-weighted least-squares domain
//! loss (through a gradient reversal layer), a focal loss on noise-adapted
//! predictions of the labeled source data, and a diversity term that keeps
//! the peers apart. Inference averages the two peers.
//!
//! All numerical code is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the element type for callers that do not care.

// Negated comparisons double as NaN rejection in validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod autodiff;
pub mod data;
pub mod error;
pub mod metrics;
pub mod model;
pub mod objectives;
pub mod rng;
pub mod scalar;
pub mod training;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Tensor64 = autodiff::Tensor<f64>;
pub type Tensor32 = autodiff::Tensor<f32>;
pub type Tape64 = autodiff::Tape<f64>;
pub type Model64 = model::CollaborativeModel<f64>;
pub type Model32 = model::CollaborativeModel<f32>;
