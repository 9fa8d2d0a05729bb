//! Finite models of hulls in hierarchically hyperbolic spaces: stable trees,
//! hierarchical families of trees, their cube-complex models, and the metric
//! and homological checks built on top of them.

pub mod bits;
pub mod cube;
pub mod error;
pub mod hhs;
pub mod metric;
pub mod model;
pub mod rips;
pub mod space;
pub mod treenet;

pub use error::{Error, Result};
