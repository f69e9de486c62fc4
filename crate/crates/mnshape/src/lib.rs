//! Direct shape-parameter prediction and extended-precision interpolation
//! for multiquadric and inverse-multiquadric radial basis functions.
//!
//! The crate has two halves that check each other:
//!
//! * [`mn`] evaluates the error-bound cost function `MN(c)` and finds the
//!   shape parameter `c` minimizing it, without any interpolation run.
//! * [`geometry`], [`rbf`], and [`experiments`] build the node sets, solve
//!   the interpolation systems at extended precision, and measure RMS error
//!   and condition number over grids of `c`, reproducing the published
//!   evenly spaced and scattered 1-D studies including the small-spacing
//!   failure regime.
//!
//! All floating-point work runs on [`scalar::XReal`] values bound to a
//! [`scalar::PrecisionContext`] (default 220 significant digits); the
//! condition numbers involved routinely exceed 1e40, so double precision is
//! never used for the solves.

pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod mn;
pub mod rbf;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::{with_precision, Dec, PrecisionContext, XReal, DEFAULT_DIGITS};
