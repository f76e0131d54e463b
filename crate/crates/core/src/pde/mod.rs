//! Polar Hamilton–Jacobi and Monge–Ampère paths from closed-form dual formulas.

pub mod path;
pub mod residual;
pub mod solve;

pub use path::{FrameDiagnostics, Provenance, TimePath};
pub use residual::{
    hj_residual, initial_velocity_residual, ma_residual, ma_residual_with_step, ma_spatial_step,
};
pub use solve::{
    solve_ma_cauchy, solve_ma_cauchy_partial, solve_ma_dirichlet, solve_ma_dirichlet_ginf,
    solve_polar_hj, AdvisoryPolicy, CauchyData, CauchySolution, HjSolution, SolveOptions,
};
