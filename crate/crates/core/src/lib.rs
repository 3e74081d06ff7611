//! Adversarial combinatorial semi-bandits with graph feedback.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod env;
pub mod error;
pub mod feedback;
pub mod graph;
pub mod harness;
pub mod policy;
pub mod polytope;
pub mod rng;
pub mod rounding;

pub use action::Action;
pub use error::{Error, Result};
pub use feedback::FeedbackView;
pub use graph::{FeedbackGraph, GraphProfile, Observability};
pub use policy::{Diagnostics, Policy};
pub use polytope::{DecisionPoint, DualPoint, PolytopeSpec, VertexDecomposition};
pub use rounding::SamplerKind;
