//! Situation-dependent causal influence between agents, estimated with a
//! Donsker-Varadhan lower bound on conditional mutual information under a
//! uniform action intervention, and used as an intrinsic reward for
//! centralized-critic multi-agent actor-critic training.
//!
//! The numeric modules ([`nn`], [`dynamics`], [`causal`]) are generic over
//! [`Scalar`]; the environment, learner and harness run in `f64`. The
//! aliases below name the `f64` instantiations used throughout.

// Validation uses `!(x > 0.0)` on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod causal;
pub mod dynamics;
pub mod env;
pub mod harness;
pub mod maddpg;
pub mod nn;
pub mod scalar;

pub use scalar::Scalar;

pub type Net = nn::DenseNet<f64>;
pub type Optimizer = nn::Adam<f64>;
