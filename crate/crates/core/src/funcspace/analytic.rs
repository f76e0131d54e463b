//! Closed-form geometric convex functions with exact derivatives.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::ExtReal;

/// Half-space `⟨normal, x⟩ ≤ offset` with `offset ≥ 0`, so it contains the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// Affine piece `⟨slope, x⟩ + intercept` with `intercept ≤ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub slope: Vec<f64>,
    pub intercept: f64,
}

/// Catalog of geometric convex functions (convex, `f ≥ 0`, `f(0) = 0`).
///
/// Norm exponents `p` range over `[1, ∞]`; `p = ∞` serializes as the string
/// `"inf"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AnalyticConvexFunction {
    /// `scale · ‖x‖_p^q`
    PowerOfPNorm {
        dim: usize,
        #[serde(with = "crate::funcspace::ext_f64")]
        p: f64,
        q: f64,
        scale: f64,
    },
    /// `½⟨Ax, x⟩` with `A` symmetric positive semidefinite.
    Quadratic { a: Vec<Vec<f64>> },
    /// `0` on `{‖x‖_p ≤ radius}`, `+∞` outside.
    IndicatorOfBall {
        dim: usize,
        #[serde(with = "crate::funcspace::ext_f64")]
        p: f64,
        radius: f64,
    },
    /// `0` on the intersection of the half-spaces, `+∞` outside.
    IndicatorOfPolytope { halfspaces: Vec<HalfSpace> },
    /// `max(0, maxᵢ ⟨aᵢ, x⟩ + bᵢ)`
    MaxOfAffinePlus { pieces: Vec<AffinePiece> },
    Sum {
        children: Vec<AnalyticConvexFunction>,
    },
    Scale {
        t: f64,
        child: Box<AnalyticConvexFunction>,
    },
    /// `child(M x)` with `M` invertible.
    PrecomposeLinear {
        m: Vec<Vec<f64>>,
        child: Box<AnalyticConvexFunction>,
    },
}

use AnalyticConvexFunction as F;

/// `‖x‖_p` for `p ∈ [1, ∞]`.
pub fn p_norm(x: &[f64], p: f64) -> f64 {
    if x.len() == 1 {
        return x[0].abs();
    }
    if p == f64::INFINITY {
        return x.iter().fold(0.0, |m, v| m.max(v.abs()));
    }
    if p == 1.0 {
        return x.iter().map(|v| v.abs()).sum();
    }
    if p == 2.0 {
        return x.iter().map(|v| v * v).sum::<f64>().sqrt();
    }
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 {
        return 0.0;
    }
    m * x
        .iter()
        .map(|v| (v.abs() / m).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

/// Hölder conjugate `p'` with `1/p + 1/p' = 1`.
pub fn conjugate_exponent(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p == f64::INFINITY {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub(crate) fn matrix(rows: &[Vec<f64>]) -> DMatrix<f64> {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    DMatrix::from_fn(n, m, |i, j| rows[i][j])
}

pub(crate) fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn not_diff(x: &[f64]) -> Error {
    Error::NotDifferentiable { point: x.to_vec() }
}

impl AnalyticConvexFunction {
    pub fn power(dim: usize, p: f64, q: f64, scale: f64) -> Self {
        F::PowerOfPNorm { dim, p, q, scale }
    }

    pub fn norm(dim: usize, p: f64) -> Self {
        F::PowerOfPNorm {
            dim,
            p,
            q: 1.0,
            scale: 1.0,
        }
    }

    /// `‖x‖₂²` (note: not the `½` normalization of [`F::Quadratic`]).
    pub fn squared_norm(dim: usize) -> Self {
        F::PowerOfPNorm {
            dim,
            p: 2.0,
            q: 2.0,
            scale: 1.0,
        }
    }

    pub fn quadratic(a: Vec<Vec<f64>>) -> Self {
        F::Quadratic { a }
    }

    pub fn ball_indicator(dim: usize, p: f64, radius: f64) -> Self {
        F::IndicatorOfBall { dim, p, radius }
    }

    /// Indicator of the interval `[-left, right]` (1D); either end may be 0.
    pub fn interval_indicator(left: f64, right: f64) -> Self {
        F::IndicatorOfPolytope {
            halfspaces: vec![
                HalfSpace {
                    normal: vec![-1.0],
                    offset: left,
                },
                HalfSpace {
                    normal: vec![1.0],
                    offset: right,
                },
            ],
        }
    }

    /// The 1D ray function `c·t` for `t ≥ 0`, `+∞` for `t < 0`.
    pub fn ray_linear(c: f64) -> Self {
        F::Sum {
            children: vec![
                F::MaxOfAffinePlus {
                    pieces: vec![AffinePiece {
                        slope: vec![c],
                        intercept: 0.0,
                    }],
                },
                F::IndicatorOfPolytope {
                    halfspaces: vec![HalfSpace {
                        normal: vec![-1.0],
                        offset: 0.0,
                    }],
                },
            ],
        }
    }

    pub fn sum(children: Vec<AnalyticConvexFunction>) -> Self {
        F::Sum { children }
    }

    pub fn scaled(t: f64, child: AnalyticConvexFunction) -> Self {
        F::Scale {
            t,
            child: Box::new(child),
        }
    }

    pub fn precompose(m: Vec<Vec<f64>>, child: AnalyticConvexFunction) -> Self {
        F::PrecomposeLinear {
            m,
            child: Box::new(child),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            F::PowerOfPNorm { dim, .. } | F::IndicatorOfBall { dim, .. } => *dim,
            F::Quadratic { a } => a.len(),
            F::IndicatorOfPolytope { halfspaces } => {
                halfspaces.first().map_or(0, |h| h.normal.len())
            }
            F::MaxOfAffinePlus { pieces } => pieces.first().map_or(0, |p| p.slope.len()),
            F::Sum { children } => children.first().map_or(0, |c| c.dim()),
            F::Scale { child, .. } => child.dim(),
            F::PrecomposeLinear { m, .. } => m.len(),
        }
    }

    /// Checks parameter ranges and dimensional consistency.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidFunction(msg));
        let dim = self.dim();
        if dim == 0 || dim > crate::lattice::MAX_DIM {
            return bad(format!("dimension {dim} not in 1..=3"));
        }
        match self {
            F::PowerOfPNorm { p, q, scale, .. } => {
                if !(*p >= 1.0)
                    || !(*q >= 1.0)
                    || !q.is_finite()
                    || !(*scale > 0.0)
                    || !scale.is_finite()
                {
                    return bad(format!("power of p-norm needs p ≥ 1, q ≥ 1, scale > 0 (p={p}, q={q}, scale={scale})"));
                }
            }
            F::Quadratic { a } => {
                if a.iter().any(|r| r.len() != dim) {
                    return bad("quadratic form must be square".into());
                }
                let m = matrix(a);
                if (&m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
                    return bad("quadratic form must be symmetric".into());
                }
                let eig = m.symmetric_eigenvalues();
                if eig.min() < -1e-12 * (1.0 + m.amax()) {
                    return bad("quadratic form must be positive semidefinite".into());
                }
            }
            F::IndicatorOfBall { p, radius, .. } => {
                if !(*p >= 1.0) || !(*radius > 0.0) {
                    return bad("ball indicator needs p ≥ 1 and radius > 0".into());
                }
            }
            F::IndicatorOfPolytope { halfspaces } => {
                for h in halfspaces {
                    if h.normal.len() != dim || !(h.offset >= 0.0) {
                        return bad(
                            "half-spaces must share the dimension and contain the origin".into(),
                        );
                    }
                }
            }
            F::MaxOfAffinePlus { pieces } => {
                for p in pieces {
                    if p.slope.len() != dim || !(p.intercept <= 0.0) {
                        return bad(
                            "affine pieces must share the dimension and have intercept ≤ 0".into(),
                        );
                    }
                }
            }
            F::Sum { children } => {
                if children.is_empty() {
                    return bad("empty sum".into());
                }
                for c in children {
                    if c.dim() != dim {
                        return bad("sum children differ in dimension".into());
                    }
                    c.validate()?;
                }
            }
            F::Scale { t, child } => {
                if !(*t > 0.0) || !t.is_finite() {
                    return bad(format!("scale factor must be positive, got {t}"));
                }
                child.validate()?;
            }
            F::PrecomposeLinear { m, child } => {
                if m.iter().any(|r| r.len() != dim) || child.dim() != dim {
                    return bad("linear map must be square and match the child dimension".into());
                }
                if matrix(m).determinant().abs() < 1e-14 {
                    return bad("linear map must be invertible".into());
                }
                child.validate()?;
            }
        }
        Ok(())
    }

    pub fn evaluate(&self, x: &[f64]) -> ExtReal {
        ExtReal::new(self.eval_raw(x))
    }

    fn eval_raw(&self, x: &[f64]) -> f64 {
        match self {
            F::PowerOfPNorm { p, q, scale, .. } => {
                let r = p_norm(x, *p);
                if *q == 1.0 {
                    scale * r
                } else if *q == 2.0 {
                    scale * r * r
                } else {
                    scale * r.powf(*q)
                }
            }
            F::Quadratic { a } => {
                let ax: Vec<f64> = a.iter().map(|row| dot(row, x)).collect();
                (0.5 * dot(&ax, x)).max(0.0)
            }
            F::IndicatorOfBall { p, radius, .. } => {
                if p_norm(x, *p) <= radius * (1.0 + 1e-12) {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            F::IndicatorOfPolytope { halfspaces } => {
                let inside = halfspaces.iter().all(|h| {
                    let scale = h
                        .normal
                        .iter()
                        .zip(x)
                        .map(|(a, b)| (a * b).abs())
                        .sum::<f64>();
                    dot(&h.normal, x) <= h.offset + 1e-12 * (h.offset + scale)
                });
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
            F::MaxOfAffinePlus { pieces } => pieces
                .iter()
                .map(|p| dot(&p.slope, x) + p.intercept)
                .fold(0.0, f64::max),
            F::Sum { children } => children.iter().map(|c| c.eval_raw(x)).sum(),
            F::Scale { t, child } => {
                let v = child.eval_raw(x);
                if v == 0.0 {
                    0.0
                } else {
                    t * v
                }
            }
            F::PrecomposeLinear { m, child } => {
                let mx: Vec<f64> = m.iter().map(|row| dot(row, x)).collect();
                child.eval_raw(&mx)
            }
        }
    }

    /// Exact gradient; fails at kinks and outside the interior of the domain.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = x.len();
        match self {
            F::PowerOfPNorm { p, q, scale, .. } => {
                let r = p_norm(x, *p);
                if r == 0.0 {
                    return if *q > 1.0 {
                        Ok(vec![0.0; n])
                    } else {
                        Err(not_diff(x))
                    };
                }
                let dr = norm_gradient(x, *p, r).ok_or_else(|| not_diff(x))?;
                let c = scale * q * r.powf(q - 1.0);
                Ok(dr.iter().map(|d| c * d).collect())
            }
            F::Quadratic { a } => Ok(a.iter().map(|row| dot(row, x)).collect()),
            F::IndicatorOfBall { p, radius, .. } => {
                if p_norm(x, *p) < radius * (1.0 - 1e-12) {
                    Ok(vec![0.0; n])
                } else {
                    Err(not_diff(x))
                }
            }
            F::IndicatorOfPolytope { halfspaces } => {
                if halfspaces
                    .iter()
                    .all(|h| dot(&h.normal, x) < h.offset * (1.0 - 1e-12))
                {
                    Ok(vec![0.0; n])
                } else {
                    Err(not_diff(x))
                }
            }
            F::MaxOfAffinePlus { pieces } => {
                let mut best = 0.0;
                let mut slope: Option<&[f64]> = None;
                let mut active: Vec<Option<&[f64]>> = vec![None];
                let scale = 1.0 + x.iter().map(|v| v.abs()).sum::<f64>();
                for pc in pieces {
                    let v = dot(&pc.slope, x) + pc.intercept;
                    let tol = 1e-12 * scale * (1.0 + pc.slope.iter().map(|s| s.abs()).sum::<f64>());
                    if v > best + tol {
                        best = v;
                        slope = Some(&pc.slope);
                        active = vec![slope];
                    } else if (v - best).abs() <= tol {
                        active.push(Some(&pc.slope));
                    }
                }
                let grad = |s: Option<&[f64]>| s.map_or(vec![0.0; n], |s| s.to_vec());
                let g0 = grad(slope.or(active[0]));
                let first = grad(active[0]);
                if active.iter().all(|a| grad(*a) == first) {
                    Ok(first)
                } else if active.len() == 1 {
                    Ok(g0)
                } else {
                    Err(not_diff(x))
                }
            }
            F::Sum { children } => {
                let mut g = vec![0.0; n];
                for c in children {
                    if c.evaluate(x).is_infinite() {
                        return Err(not_diff(x));
                    }
                    for (gi, ci) in g.iter_mut().zip(c.gradient(x)?) {
                        *gi += ci;
                    }
                }
                Ok(g)
            }
            F::Scale { t, child } => Ok(child.gradient(x)?.into_iter().map(|v| t * v).collect()),
            F::PrecomposeLinear { m, child } => {
                let mm = matrix(m);
                let mx = &mm * DVector::from_column_slice(x);
                let g = DVector::from_vec(child.gradient(mx.as_slice())?);
                Ok((mm.transpose() * g).as_slice().to_vec())
            }
        }
    }

    /// Exact Hessian.
    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = x.len();
        match self {
            F::PowerOfPNorm { p, q, scale, .. } => power_norm_hessian(x, *p, *q, *scale),
            F::Quadratic { a } => Ok(matrix(a)),
            F::IndicatorOfBall { .. }
            | F::IndicatorOfPolytope { .. }
            | F::MaxOfAffinePlus { .. } => {
                self.gradient(x)?;
                Ok(DMatrix::zeros(n, n))
            }
            F::Sum { children } => {
                let mut h = DMatrix::zeros(n, n);
                for c in children {
                    h += c.hessian(x)?;
                }
                Ok(h)
            }
            F::Scale { t, child } => Ok(child.hessian(x)? * *t),
            F::PrecomposeLinear { m, child } => {
                let mm = matrix(m);
                let mx = &mm * DVector::from_column_slice(x);
                let h = child.hessian(mx.as_slice())?;
                Ok(mm.transpose() * h * mm)
            }
        }
    }
}

/// Gradient of `‖·‖_p` at `x ≠ 0`; `None` where the norm has a kink.
fn norm_gradient(x: &[f64], p: f64, r: f64) -> Option<Vec<f64>> {
    let n = x.len();
    if n == 1 {
        return Some(vec![x[0].signum()]);
    }
    if p == f64::INFINITY {
        let hits: Vec<usize> = (0..n)
            .filter(|&i| x[i].abs() >= r * (1.0 - 1e-14))
            .collect();
        if hits.len() != 1 {
            return None;
        }
        let mut g = vec![0.0; n];
        g[hits[0]] = x[hits[0]].signum();
        return Some(g);
    }
    if p == 1.0 {
        if x.contains(&0.0) {
            return None;
        }
        return Some(x.iter().map(|v| v.signum()).collect());
    }
    Some(
        x.iter()
            .map(|v| v.signum() * (v.abs() / r).powf(p - 1.0))
            .collect(),
    )
}

fn power_norm_hessian(x: &[f64], p: f64, q: f64, scale: f64) -> Result<DMatrix<f64>> {
    let n = x.len();
    let r = p_norm(x, p);
    // Effective 1D profile s·|t|^q when n = 1.
    if n == 1 {
        let t = x[0].abs();
        if t == 0.0 {
            return if q == 2.0 {
                Ok(DMatrix::from_element(1, 1, 2.0 * scale))
            } else if q > 2.0 {
                Ok(DMatrix::zeros(1, 1))
            } else {
                Err(not_diff(x))
            };
        }
        return Ok(DMatrix::from_element(
            1,
            1,
            scale * q * (q - 1.0) * t.powf(q - 2.0),
        ));
    }
    if r == 0.0 {
        return if q == 2.0 && p == 2.0 {
            Ok(DMatrix::identity(n, n) * (2.0 * scale))
        } else if q > 2.0 {
            Ok(DMatrix::zeros(n, n))
        } else {
            Err(not_diff(x))
        };
    }
    let dr = norm_gradient(x, p, r).ok_or_else(|| not_diff(x))?;
    // Second derivatives of r.
    let mut d2r = DMatrix::zeros(n, n);
    if p.is_finite() && p > 1.0 {
        if p < 2.0 && x.contains(&0.0) {
            return Err(not_diff(x));
        }
        for i in 0..n {
            for j in 0..n {
                let diag = if i == j {
                    if p == 2.0 {
                        1.0
                    } else {
                        (x[i].abs() / r).powf(p - 2.0)
                    }
                } else {
                    0.0
                };
                d2r[(i, j)] = (p - 1.0) / r * (diag - dr[i] * dr[j]);
            }
        }
    }
    let c1 = scale * q * (q - 1.0) * r.powf(q - 2.0);
    let c2 = scale * q * r.powf(q - 1.0);
    Ok(DMatrix::from_fn(n, n, |i, j| {
        c1 * dr[i] * dr[j] + c2 * d2r[(i, j)]
    }))
}
