//! Finite element toolkit for second-order problems on triangulations.

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose, and the dense
// kernels read better with explicit indices.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod adapt;
pub mod assembly;
pub mod cli;
pub mod dg;
pub mod elliptic;
pub mod error;
pub mod linalg;
pub mod mesh;
pub mod mixed;
pub mod parabolic;
pub mod problems;
pub mod quadrature;
pub mod refelem;
pub mod study;
pub mod vtk;

pub use error::{FemError, Result};
