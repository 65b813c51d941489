//! Null distances on discretized static spacetimes `-h^2 dt^2 + sigma`,
//! and the machinery for comparing sequences of them: uniform and
//! Gromov-Hausdorff bounds, Hölder fits, good sets, and intrinsic-flat
//! upper bounds.

// `!(x > 0.0)` is how NaN gets rejected along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod convergence;
pub mod error;
pub mod examples;
pub mod geodesic;
pub mod length;
pub mod manifold;
pub mod nulldist;
pub mod swif;

pub use error::{Error, Result};
pub use length::FixedLength;
