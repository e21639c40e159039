//! Central charges and Z-stability for linearised torus actions on products
//! of projective spaces.
//!
//! The crate is split into an exact algebraic side (weights, graded points,
//! charges, polytope classification) and a numeric side (complex moment maps,
//! critical-point solvers, the Z-flow). [`harness`] compares the two.

pub mod algebra;
pub mod charge;
pub mod error;
pub mod exec;
pub mod graded;
pub mod harness;
pub mod linalg;
pub mod moment;
pub mod num;
pub mod scenario;
pub mod stability;

pub use error::{Error, Result};
