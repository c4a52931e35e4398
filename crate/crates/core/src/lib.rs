//! Rotations of three-body motions recovered from shape-space data.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::excessive_precision, clippy::too_many_arguments)]

pub mod dynamics;
pub mod error;
pub mod gauge;
pub mod harness;
pub mod phase;
pub mod potential;
pub mod quadrature;
pub mod rigid;
pub mod shape;
pub mod triangle;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
