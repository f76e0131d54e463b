//! Closed-form polarity rules on the analytic catalog.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::funcspace::analytic::{matrix, rows};
use crate::funcspace::{conjugate_exponent, AffinePiece, AnalyticConvexFunction as F, HalfSpace};
use crate::transforms::hull::convex_hull_2d;

/// `(q−1)^{q−1} / q^q`, the polar constant of `|t|^q`.
pub fn power_polar_constant(q: f64) -> f64 {
    (q - 1.0).powf(q - 1.0) / q.powf(q)
}

fn zero_function(dim: usize) -> F {
    F::MaxOfAffinePlus {
        pieces: vec![AffinePiece {
            slope: vec![0.0; dim],
            intercept: 0.0,
        }],
    }
}

/// Exact polar of a catalog element, or [`Error::Unsupported`].
pub fn polar_analytic(f: &F) -> Result<F> {
    f.validate()?;
    polar_rule(f)
}

fn polar_rule(f: &F) -> Result<F> {
    match f {
        F::PowerOfPNorm { dim, p, q, scale } => {
            let c = if *q == 1.0 {
                1.0
            } else {
                power_polar_constant(*q)
            };
            Ok(F::PowerOfPNorm {
                dim: *dim,
                p: conjugate_exponent(*p),
                q: *q,
                scale: c / scale,
            })
        }
        F::IndicatorOfBall { dim, p, radius } => Ok(F::IndicatorOfBall {
            dim: *dim,
            p: conjugate_exponent(*p),
            radius: 1.0 / radius,
        }),
        F::Quadratic { a } => {
            let m = matrix(a);
            let inv =
                m.clone().cholesky().map(|c| c.inverse()).ok_or_else(|| {
                    Error::Unsupported("polar of a singular quadratic form".into())
                })?;
            let inv = (&inv + inv.transpose()) * 0.5;
            Ok(F::Quadratic { a: rows(&inv) })
        }
        F::IndicatorOfPolytope { halfspaces } => polytope_polar(halfspaces),
        F::Scale { t, child } => Ok(F::Scale {
            t: 1.0 / t,
            child: Box::new(polar_rule(child)?),
        }),
        F::PrecomposeLinear { m, child } => {
            let mm: DMatrix<f64> = matrix(m);
            let inv_t = mm
                .try_inverse()
                .ok_or_else(|| Error::Unsupported("linear map is not invertible".into()))?
                .transpose();
            Ok(F::PrecomposeLinear {
                m: rows(&inv_t),
                child: Box::new(polar_rule(child)?),
            })
        }
        F::MaxOfAffinePlus { .. } => Err(Error::Unsupported(
            "polar of a max of affine functions".into(),
        )),
        F::Sum { .. } => Err(Error::Unsupported("polar of a sum".into())),
    }
}

/// `{x: ⟨aᵢ,x⟩ ≤ bᵢ}° = conv({0} ∪ {aᵢ/bᵢ})`; in 2D every `bᵢ` must be positive.
fn polytope_polar(halfspaces: &[HalfSpace]) -> Result<F> {
    let dim = halfspaces.first().map_or(0, |h| h.normal.len());
    match dim {
        1 => {
            // The polytope is an interval [-left, right], possibly unbounded.
            let mut left = f64::INFINITY;
            let mut right = f64::INFINITY;
            for h in halfspaces {
                let a = h.normal[0];
                if a > 0.0 {
                    right = right.min(h.offset / a);
                } else if a < 0.0 {
                    left = left.min(h.offset / -a);
                } else if h.offset < 0.0 {
                    return Err(Error::InvalidFunction("empty polytope".into()));
                }
            }
            let mut out = Vec::new();
            if left.is_finite() && left > 0.0 {
                out.push(HalfSpace {
                    normal: vec![-1.0],
                    offset: 1.0 / left,
                });
            }
            if right.is_finite() && right > 0.0 {
                out.push(HalfSpace {
                    normal: vec![1.0],
                    offset: 1.0 / right,
                });
            }
            if out.is_empty() {
                return Ok(zero_function(1));
            }
            Ok(F::IndicatorOfPolytope { halfspaces: out })
        }
        2 => {
            if halfspaces.iter().any(|h| h.offset == 0.0) {
                return Err(Error::Unsupported(
                    "2D polytope with the origin on its boundary".into(),
                ));
            }
            let mut pts: Vec<[f64; 2]> = halfspaces
                .iter()
                .map(|h| [h.normal[0] / h.offset, h.normal[1] / h.offset])
                .collect();
            pts.push([0.0, 0.0]);
            let hull = convex_hull_2d(pts);
            if hull.len() < 3 {
                return Err(Error::Unsupported(
                    "polar of an unbounded 2D polytope".into(),
                ));
            }
            let out = (0..hull.len())
                .map(|i| {
                    let p = hull[i];
                    let q = hull[(i + 1) % hull.len()];
                    let n = [q[1] - p[1], p[0] - q[0]];
                    HalfSpace {
                        normal: n.to_vec(),
                        offset: n[0] * p[0] + n[1] * p[1],
                    }
                })
                .collect();
            Ok(F::IndicatorOfPolytope { halfspaces: out })
        }
        _ => Err(Error::Unsupported("polytope polarity beyond 2D".into())),
    }
}
