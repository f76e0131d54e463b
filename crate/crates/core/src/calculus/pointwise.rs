//! Legendre, polar and J values of catalog functions at a single point.
//!
//! A dense scan over a lattice locates the maximizer to within a cell, then
//! damped Newton steps on the exact gradient and Hessian polish it.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::funcspace::AnalyticConvexFunction;
use crate::lattice::Lattice;
use crate::tolerances::EPS_ZERO_FLOOR;

const MAX_NEWTON: usize = 100;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Value and maximizer of a point transform.
#[derive(Debug, Clone, PartialEq)]
pub struct PointValue {
    pub value: f64,
    pub argmax: Vec<f64>,
}

fn legendre_objective(f: &AnalyticConvexFunction, x: &[f64], y: &[f64]) -> f64 {
    let v = f.evaluate(x).value();
    if v.is_finite() {
        dot(x, y) - v
    } else {
        f64::NEG_INFINITY
    }
}

fn polar_objective(f: &AnalyticConvexFunction, x: &[f64], y: &[f64]) -> f64 {
    let v = f.evaluate(x).value();
    if v.is_finite() && v > EPS_ZERO_FLOOR {
        (dot(x, y) - 1.0) / v
    } else {
        f64::NEG_INFINITY
    }
}

/// Best lattice node for `objective`, smallest flat index on ties.
fn scan(scan: &Lattice, objective: impl Fn(&[f64]) -> f64) -> Option<(f64, Vec<f64>)> {
    let n = scan.dim();
    let mut best: Option<(f64, usize)> = None;
    for k in 0..scan.len() {
        let p = scan.point(k);
        let v = objective(&p[..n]);
        if v > best.map_or(f64::NEG_INFINITY, |b| b.0) {
            best = Some((v, k));
        }
    }
    best.map(|(v, k)| (v, scan.point_vec(k)))
}

/// Damped Newton ascent on a smooth objective given its gradient and Hessian.
fn newton_ascent(
    start: Vec<f64>,
    objective: impl Fn(&[f64]) -> f64,
    derivs: impl Fn(&[f64]) -> Result<(DVector<f64>, DMatrix<f64>)>,
) -> (f64, Vec<f64>) {
    let mut x = start;
    let mut fx = objective(&x);
    for _ in 0..MAX_NEWTON {
        let Ok((g, h)) = derivs(&x) else { break };
        let gnorm = g.norm();
        if gnorm <= 1e-15 * (1.0 + fx.abs()) {
            break;
        }
        // Newton direction on -h when it is an ascent direction, gradient otherwise.
        let newton = (-&h).cholesky().map(|c| c.solve(&g));
        let dir = match newton {
            Some(d) if d.dot(&g) > 0.0 => d,
            _ => g.clone(),
        };
        let mut step = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = x
                .iter()
                .zip(dir.iter())
                .map(|(a, d)| a + step * d)
                .collect();
            let fc = objective(&cand);
            if fc >= fx && fc.is_finite() {
                let tiny = cand
                    .iter()
                    .zip(&x)
                    .all(|(a, b)| (a - b).abs() <= 1e-16 * (1.0 + b.abs()));
                x = cand;
                fx = fc;
                moved = !tiny;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (fx, x)
}

/// `Lf(y) = sup ⟨x,y⟩ − f(x)`, scanned on `grid` then polished.
pub fn legendre_at(f: &AnalyticConvexFunction, y: &[f64], grid: &Lattice) -> Result<PointValue> {
    let (_, start) = scan(grid, |x| legendre_objective(f, x, y)).ok_or(Error::EmptyDomain)?;
    let (value, argmax) = newton_ascent(
        start,
        |x| legendre_objective(f, x, y),
        |x| {
            let g = f.gradient(x)?;
            let h = f.hessian(x)?;
            Ok((
                DVector::from_iterator(y.len(), y.iter().zip(&g).map(|(a, b)| a - b)),
                -h,
            ))
        },
    );
    Ok(PointValue { value, argmax })
}

/// `Pf(y) = max(0, sup (⟨x,y⟩ − 1)/f(x))`, scanned on `grid` then polished.
///
/// Returns `+∞` when a zero-set node of the scan violates `⟨x,y⟩ ≤ 1`.
pub fn polar_at(f: &AnalyticConvexFunction, y: &[f64], grid: &Lattice) -> Result<PointValue> {
    let n = grid.dim();
    let blocked = (0..grid.len()).any(|k| {
        let p = grid.point(k);
        f.evaluate(&p[..n]).value() <= EPS_ZERO_FLOOR && dot(&p[..n], y) > 1.0 + 1e-12
    });
    if blocked {
        return Ok(PointValue {
            value: f64::INFINITY,
            argmax: vec![0.0; n],
        });
    }
    let Some((best, start)) = scan(grid, |x| polar_objective(f, x, y)) else {
        return Ok(PointValue {
            value: 0.0,
            argmax: vec![0.0; n],
        });
    };
    if best <= 0.0 {
        return Ok(PointValue {
            value: 0.0,
            argmax: start,
        });
    }
    let (value, argmax) = newton_ascent(
        start,
        |x| polar_objective(f, x, y),
        |x| {
            let u = f.evaluate(x).value();
            let g = DVector::from_vec(f.gradient(x)?);
            let h = f.hessian(x)?;
            let yv = DVector::from_column_slice(y);
            let num = dot(x, y) - 1.0;
            let grad = &yv / u - &g * (num / (u * u));
            let hess = -(&yv * g.transpose() + &g * yv.transpose()) / (u * u) - h * (num / (u * u))
                + &g * g.transpose() * (2.0 * num / (u * u * u));
            Ok((grad, hess))
        },
    );
    Ok(PointValue {
        value: value.max(0.0),
        argmax,
    })
}

/// `Jf(s)` through the graph point `x = λs` with `f(λs) = λ`, so `Jf(s) = 1/λ`.
pub fn j_at(f: &AnalyticConvexFunction, s: &[f64]) -> Result<f64> {
    if s.iter().all(|c| *c == 0.0) {
        return Ok(0.0);
    }
    // λ ↦ f(λs)/λ is nondecreasing; bracket its crossing of 1.
    let ratio = |l: f64| {
        f.evaluate(&s.iter().map(|c| c * l).collect::<Vec<_>>())
            .value()
            / l
    };
    let mut lo = 1e-12;
    if ratio(lo) >= 1.0 {
        return Ok(1.0 / lo);
    }
    let mut hi = 1.0;
    let mut grown = 0;
    while ratio(hi) < 1.0 {
        lo = hi;
        hi *= 2.0;
        grown += 1;
        if grown > 200 {
            // Linear growth with slope below one along s: the image never reaches height 1/λ.
            return Ok(0.0);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ratio(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(1.0 / hi)
}
