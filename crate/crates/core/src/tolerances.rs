//! Numerical thresholds shared across modules.

/// Absolute floor of the zero-set threshold.
pub const EPS_ZERO_FLOOR: f64 = 1e-12;
/// Zero-set threshold relative to the largest finite value.
pub const EPS_ZERO_REL: f64 = 1e-9;

/// Smallest finite-difference step for grid gradients.
pub const H_GRAD_MIN: f64 = 1e-5;
/// Multiplier in the kink test `|s₊ − s₋| > KINK_FACTOR · slope_scale · cell`.
pub const KINK_FACTOR: f64 = 10.0;

/// Midpoint-convexity slack relative to `max(1, max finite value)`.
pub const TOL_CONVEX_REL: f64 = 1e-9;

/// Relative slack added to tile upper bounds in the sup engine.
pub const BOUND_SLACK: f64 = 1e-12;

/// `max(EPS_ZERO_FLOOR, EPS_ZERO_REL · max_finite)`.
pub fn eps_zero(max_finite: f64) -> f64 {
    EPS_ZERO_FLOOR.max(EPS_ZERO_REL * max_finite)
}
