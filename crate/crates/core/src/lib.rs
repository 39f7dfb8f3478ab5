//! Constant-mean-curvature and minimal surfaces from holomorphic data via
//! loop-group factorization.

// `!(x <= tol)` is used on purpose so that NaN residuals count as failures.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod convert;
pub mod dressing;
pub mod error;
pub mod expr;
pub mod factor;
pub mod frames;
pub mod gallery;
pub mod grid;
pub mod loops;
pub mod mesh_io;
pub mod report;
pub mod symmetry;
pub mod weier;

pub use error::{Error, Result};
pub use expr::{parse, Expr};
pub use grid::{integrate_path, DomainGrid, GridSpec};
