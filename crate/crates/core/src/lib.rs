//! Persona-driven crowd simulation for active-shooter drills, with behavior
//! classification and iterative alignment of persona pools to a target
//! behavior distribution.

// `!(x > 0.0)` is used on purpose so NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod behavior;
pub mod classifier;
pub mod error;
pub mod layout;
pub mod llm;
pub mod metrics;
pub mod pevo;
pub mod persona;
pub mod rng;
pub mod shooter;
pub mod sim;
pub mod tfidf;
pub mod writer;

pub use behavior::{BehaviorDistribution, BehaviorLabel};
pub use error::{Error, Result};
