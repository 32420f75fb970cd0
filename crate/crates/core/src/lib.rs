//! Hybrid gradient/Newton primal-dual consensus optimization.

pub mod analysis;
pub mod engine;
pub mod error;
pub mod harness;
pub mod objectives;
pub mod topology;

pub use error::{DishError, Result};
