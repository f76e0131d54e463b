//! Polar gradients, Hessian transfer and the variation identities.

pub mod gradient;
pub mod hessian;
pub mod pointwise;
pub mod variation;

pub use gradient::{
    polar_gradient, polar_gradient_of_sum, polar_subdifferential_1d, EmptyReason,
    PolarGradientResult,
};
pub use hessian::{hessian_of_polar, hessian_of_polar_grid, transfer_formula, HessianTransfer};
pub use pointwise::{j_at, legendre_at, polar_at, PointValue};
pub use variation::{
    j_variation_residual, legendre_first_variation_residual, polar_first_variation_residual,
    second_variation_residuals, Family, SecondVariation,
};
