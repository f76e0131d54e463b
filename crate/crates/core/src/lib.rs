//! Polarity transform, polar calculus and closed-form polar PDE solvers on
//! geometric convex functions (convex, nonnegative, vanishing at the origin).

// `!(a <= b)` rejects NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calculus;
pub mod error;
pub mod extreal;
pub mod funcspace;
pub mod ginfconv;
pub mod lattice;
pub mod pde;
pub mod tolerances;
pub mod transforms;
pub mod verify;

pub use error::{Error, Result};
pub use extreal::ExtReal;
pub use funcspace::{AnalyticConvexFunction, ConvexFunction, FunctionDescriptor, GridFunction};
pub use lattice::Lattice;
