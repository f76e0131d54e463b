//! Residuals of the first and second variation identities along a family `u(t, ·)`.
//!
//! Time derivatives are linear stencils over nearby times: central differences
//! (optionally Richardson-extrapolated) for analytic families, three-point
//! formulas on the frame times for grid families.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::calculus::gradient::polar_gradient;
use crate::calculus::pointwise::{j_at, legendre_at, polar_at};
use crate::error::{Error, Result};
use crate::funcspace::{AnalyticConvexFunction, ConvexFunction, GridFunction};
use crate::lattice::Lattice;
use crate::pde::TimePath;
use crate::tolerances::EPS_ZERO_FLOOR;
use crate::transforms::{j_transform, legendre, polar};

type FrameFn = Box<dyn Fn(f64) -> AnalyticConvexFunction + Send + Sync>;

/// A family given by a closure `t ↦ u(t, ·)` with exact spatial derivatives.
pub struct AnalyticFamily {
    frame: FrameFn,
    /// Time step of the central differences.
    pub dt: f64,
    /// Lattice scanned to seed the pointwise transforms.
    pub scan: Lattice,
    pub richardson: bool,
}

/// A sampled path with lazily computed transforms of its frames.
pub struct GridFamily {
    path: TimePath,
    dual: Lattice,
    j_out: Lattice,
    legendre: Vec<OnceLock<Result<GridFunction>>>,
    polar: Vec<OnceLock<Result<GridFunction>>>,
    j: Vec<OnceLock<Result<GridFunction>>>,
}

pub enum Family {
    Analytic(AnalyticFamily),
    Grid(GridFamily),
}

impl Family {
    pub fn analytic(
        frame: impl Fn(f64) -> AnalyticConvexFunction + Send + Sync + 'static,
        scan: Lattice,
    ) -> Self {
        Family::Analytic(AnalyticFamily {
            frame: Box::new(frame),
            dt: 1e-3,
            scan,
            richardson: false,
        })
    }

    /// Grid family whose Legendre and polar frames live on `dual`; J frames on the path lattice.
    pub fn grid(path: TimePath, dual: Lattice) -> Self {
        let j_out = path
            .frames()
            .first()
            .map(|f| f.lattice().clone())
            .unwrap_or_else(|| dual.clone());
        Self::grid_with_j(path, dual, j_out)
    }

    pub fn grid_with_j(path: TimePath, dual: Lattice, j_out: Lattice) -> Self {
        let n = path.len();
        let cells = || (0..n).map(|_| OnceLock::new()).collect::<Vec<_>>();
        Family::Grid(GridFamily {
            path,
            dual,
            j_out,
            legendre: cells(),
            polar: cells(),
            j: cells(),
        })
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        if let Family::Analytic(a) = &mut self {
            a.dt = dt;
        }
        self
    }

    pub fn with_richardson(mut self, on: bool) -> Self {
        if let Family::Analytic(a) = &mut self {
            a.richardson = on;
        }
        self
    }
}

#[derive(Debug, Clone, Copy)]
enum At {
    Time(f64),
    Frame(usize),
}

/// Weights `(node, d/dt weight, d²/dt² weight)` around a center.
struct Stencil {
    center: At,
    nodes: Vec<(At, f64, f64)>,
}

impl Stencil {
    fn d1(&self, mut q: impl FnMut(At) -> Result<f64>) -> Result<f64> {
        let mut s = 0.0;
        for (at, w, _) in &self.nodes {
            if *w != 0.0 {
                s += w * q(*at)?;
            }
        }
        Ok(s)
    }

    fn d2(&self, mut q: impl FnMut(At) -> Result<f64>) -> Result<f64> {
        let mut s = 0.0;
        for (at, _, w) in &self.nodes {
            if *w != 0.0 {
                s += w * q(*at)?;
            }
        }
        Ok(s)
    }

    /// Both derivatives from one pass over the nodes.
    fn d12(&self, mut q: impl FnMut(At) -> Result<f64>) -> Result<(f64, f64)> {
        let (mut a, mut b) = (0.0, 0.0);
        for (at, w1, w2) in &self.nodes {
            let v = q(*at)?;
            a += w1 * v;
            b += w2 * v;
        }
        Ok((a, b))
    }

    fn d1_vec(&self, mut q: impl FnMut(At) -> Result<Vec<f64>>) -> Result<DVector<f64>> {
        let mut s: Option<DVector<f64>> = None;
        for (at, w, _) in &self.nodes {
            if *w == 0.0 {
                continue;
            }
            let v = DVector::from_vec(q(*at)?) * *w;
            s = Some(match s {
                Some(acc) => acc + v,
                None => v,
            });
        }
        Ok(s.expect("stencil has first-derivative weights"))
    }
}

fn vec_dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

impl Family {
    fn stencil(&self, t: f64) -> Result<Stencil> {
        match self {
            Family::Analytic(a) => {
                let h = a.dt;
                let nodes = if a.richardson {
                    let g = h / 2.0;
                    vec![
                        (At::Time(t - h), 1.0 / (6.0 * h), -1.0 / (3.0 * h * h)),
                        (At::Time(t - g), -4.0 / (3.0 * h), 16.0 / (3.0 * h * h)),
                        (At::Time(t), 0.0, -10.0 / (h * h)),
                        (At::Time(t + g), 4.0 / (3.0 * h), 16.0 / (3.0 * h * h)),
                        (At::Time(t + h), -1.0 / (6.0 * h), -1.0 / (3.0 * h * h)),
                    ]
                } else {
                    vec![
                        (At::Time(t - h), -0.5 / h, 1.0 / (h * h)),
                        (At::Time(t), 0.0, -2.0 / (h * h)),
                        (At::Time(t + h), 0.5 / h, 1.0 / (h * h)),
                    ]
                };
                Ok(Stencil {
                    center: At::Time(t),
                    nodes,
                })
            }
            Family::Grid(g) => {
                let k = g.path.interior_index_of(t)?;
                let ts = g.path.times();
                let (h1, h2) = (ts[k] - ts[k - 1], ts[k + 1] - ts[k]);
                let s = h1 + h2;
                let nodes = vec![
                    (At::Frame(k - 1), -h2 / (h1 * s), 2.0 / (h1 * s)),
                    (At::Frame(k), (h2 - h1) / (h1 * h2), -2.0 / (h1 * h2)),
                    (At::Frame(k + 1), h1 / (h2 * s), 2.0 / (h2 * s)),
                ];
                Ok(Stencil {
                    center: At::Frame(k),
                    nodes,
                })
            }
        }
    }

    fn analytic_frame(&self, at: At) -> AnalyticConvexFunction {
        match (self, at) {
            (Family::Analytic(a), At::Time(t)) => (a.frame)(t),
            _ => unreachable!("time nodes belong to analytic families"),
        }
    }

    fn grid_frame(&self, at: At) -> Result<&GridFunction> {
        match (self, at) {
            (Family::Grid(g), At::Frame(k)) => g.path.frame(k),
            _ => unreachable!("frame nodes belong to grid families"),
        }
    }

    fn cached(
        cells: &[OnceLock<Result<GridFunction>>],
        k: usize,
        make: impl FnOnce() -> Result<GridFunction>,
    ) -> Result<&GridFunction> {
        cells[k].get_or_init(make).as_ref().map_err(Clone::clone)
    }

    fn value(&self, at: At, x: &[f64]) -> Result<f64> {
        let v = match at {
            At::Time(_) => self.analytic_frame(at).evaluate(x),
            At::Frame(_) => self.grid_frame(at)?.evaluate(x)?,
        };
        v.finite()
            .ok_or(Error::NotDifferentiable { point: x.to_vec() })
    }

    fn gradient(&self, at: At, x: &[f64]) -> Result<Vec<f64>> {
        match at {
            At::Time(_) => self.analytic_frame(at).gradient(x),
            At::Frame(_) => self.grid_frame(at)?.gradient(x),
        }
    }

    fn hessian(&self, at: At, x: &[f64]) -> Result<DMatrix<f64>> {
        match at {
            At::Time(_) => self.analytic_frame(at).hessian(x),
            At::Frame(_) => self.grid_frame(at)?.hessian(x),
        }
    }

    fn legendre_frame(&self, k: usize) -> Result<&GridFunction> {
        let Family::Grid(g) = self else {
            unreachable!()
        };
        Self::cached(&g.legendre, k, || {
            Ok(legendre(g.path.frame(k)?, &g.dual)?.output)
        })
    }

    fn polar_frame(&self, k: usize) -> Result<&GridFunction> {
        let Family::Grid(g) = self else {
            unreachable!()
        };
        Self::cached(&g.polar, k, || Ok(polar(g.path.frame(k)?, &g.dual)?.output))
    }

    fn j_frame(&self, k: usize) -> Result<&GridFunction> {
        let Family::Grid(g) = self else {
            unreachable!()
        };
        Self::cached(&g.j, k, || j_transform(g.path.frame(k)?, &g.j_out))
    }

    fn legendre_value(&self, at: At, y: &[f64]) -> Result<f64> {
        match (self, at) {
            (Family::Analytic(a), At::Time(_)) => {
                Ok(legendre_at(&self.analytic_frame(at), y, &a.scan)?.value)
            }
            (_, At::Frame(k)) => Ok(self.legendre_frame(k)?.evaluate(y)?.value()),
            _ => unreachable!(),
        }
    }

    /// `(∇u_t)⁻¹(y)`: dense scan for the nearest gradient, then Newton polish.
    fn gradient_inverse(&self, at: At, y: &[f64]) -> Result<Vec<f64>> {
        match (self, at) {
            (Family::Analytic(a), At::Time(_)) => {
                Ok(legendre_at(&self.analytic_frame(at), y, &a.scan)?.argmax)
            }
            (_, At::Frame(_)) => {
                let f = self.grid_frame(at)?;
                let lat = f.lattice();
                let n = lat.dim();
                let mut best: Option<(f64, usize)> = None;
                for k in 0..lat.len() {
                    if lat.is_boundary(k) {
                        continue;
                    }
                    let p = lat.point(k);
                    let Ok(g) = f.gradient(&p[..n]) else { continue };
                    let d: f64 = g.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                    if d < best.map_or(f64::INFINITY, |b| b.0) {
                        best = Some((d, k));
                    }
                }
                let (_, k) = best.ok_or(Error::EmptyDomain)?;
                let mut x = lat.point_vec(k);
                for _ in 0..3 {
                    let (Ok(g), Ok(h)) = (f.gradient(&x), f.hessian(&x)) else {
                        break;
                    };
                    let r = DVector::from_iterator(n, y.iter().zip(&g).map(|(a, b)| a - b));
                    let Some(step) = h.lu().solve(&r) else { break };
                    let cand: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
                    if !lat.contains(&cand) {
                        break;
                    }
                    x = cand;
                }
                Ok(x)
            }
            _ => unreachable!(),
        }
    }

    /// `(w(t,y), ∇_y w(t,y), ∇°w_t(y))` for `w_t = P u_t`.
    fn polar_data(&self, at: At, y: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
        match (self, at) {
            (Family::Analytic(a), At::Time(_)) => {
                let u = self.analytic_frame(at);
                let pv = polar_at(&u, y, &a.scan)?;
                let ux = u.evaluate(&pv.argmax).value();
                let grad = pv.argmax.iter().map(|c| c / ux).collect();
                Ok((pv.value, grad, pv.argmax))
            }
            (_, At::Frame(k)) => {
                let w = self.polar_frame(k)?;
                let value = w.evaluate(y)?.value();
                let grad = w.gradient(y)?;
                let x = polar_gradient(&ConvexFunction::Grid(w.clone()), y)?
                    .into_point(y)
                    .map_err(|_| Error::RayLinearAtY { point: y.to_vec() })?
                    .0;
                Ok((value, grad, x))
            }
            _ => unreachable!(),
        }
    }

    fn polar_value(&self, at: At, y: &[f64]) -> Result<f64> {
        match (self, at) {
            (Family::Analytic(a), At::Time(_)) => {
                Ok(polar_at(&self.analytic_frame(at), y, &a.scan)?.value)
            }
            (_, At::Frame(k)) => Ok(self.polar_frame(k)?.evaluate(y)?.value()),
            _ => unreachable!(),
        }
    }

    fn polar_gradient_y(&self, at: At, y: &[f64]) -> Result<Vec<f64>> {
        match (self, at) {
            (Family::Analytic(_), At::Time(_)) => Ok(self.polar_data(at, y)?.1),
            (_, At::Frame(k)) => self.polar_frame(k)?.gradient(y),
            _ => unreachable!(),
        }
    }

    fn j_value(&self, at: At, s: &[f64]) -> Result<f64> {
        match (self, at) {
            (Family::Analytic(_), At::Time(_)) => j_at(&self.analytic_frame(at), s),
            (_, At::Frame(k)) => Ok(self.j_frame(k)?.evaluate(s)?.value()),
            _ => unreachable!(),
        }
    }
}

/// `|∂_t w(t,y) + ∂_t u(t, (∇u_t)⁻¹(y))|` with `w_t = L u_t`.
pub fn legendre_first_variation_residual(family: &Family, t: f64, y: &[f64]) -> Result<f64> {
    let st = family.stencil(t)?;
    let x = family.gradient_inverse(st.center, y)?;
    let w_dot = st.d1(|at| family.legendre_value(at, y))?;
    let u_dot = st.d1(|at| family.value(at, &x))?;
    Ok((w_dot + u_dot).abs())
}

fn polar_base(family: &Family, st: &Stencil, y: &[f64]) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (w, grad, x) = family.polar_data(st.center, y)?;
    if !(w > EPS_ZERO_FLOOR) || !w.is_finite() {
        return Err(Error::RayLinearAtY { point: y.to_vec() });
    }
    Ok((w, grad, x))
}

/// `|∂_t log w(t,y) + ∂_t log u(t, ∇°w_t(y))|` with `w_t = P u_t`.
pub fn polar_first_variation_residual(family: &Family, t: f64, y: &[f64]) -> Result<f64> {
    let st = family.stencil(t)?;
    let (w, _, x) = polar_base(family, &st, y)?;
    let u = family.value(st.center, &x)?;
    let w_dot = st.d1(|at| family.polar_value(at, y))?;
    let u_dot = st.d1(|at| family.value(at, &x))?;
    Ok((w_dot / w + u_dot / u).abs())
}

/// Absolute residuals of the four second-variation identities at `(t, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SecondVariation {
    /// `ẅ = −ü + ⟨∇u̇, (∇²u)⁻¹∇u̇⟩` for the Legendre transform.
    pub legendre: f64,
    /// `(log w)¨ = −(log u)¨ + u⟨∇(log u)˙, (∇²u)⁻¹∇(log u)˙⟩` for the polar.
    pub polar: f64,
    /// `ẅ/w = −det B / (u det ∇²u)` with the bordered matrix `B`.
    pub matrix_form: f64,
    /// The polar identity with its quadratic term written through `∇w` and `∇u`.
    pub symmetric_form: f64,
}

impl SecondVariation {
    pub fn max(&self) -> f64 {
        self.legendre
            .max(self.polar)
            .max(self.matrix_form)
            .max(self.symmetric_form)
    }
}

pub fn second_variation_residuals(family: &Family, t: f64, y: &[f64]) -> Result<SecondVariation> {
    let st = family.stencil(t)?;
    let c = st.center;

    // Legendre side, at x = (∇u_t)⁻¹(y).
    let xl = family.gradient_inverse(c, y)?;
    let w_dd = st.d2(|at| family.legendre_value(at, y))?;
    let u_dd = st.d2(|at| family.value(at, &xl))?;
    let grad_u_dot = st.d1_vec(|at| family.gradient(at, &xl))?;
    let h = family.hessian(c, &xl)?;
    let h_inv = h
        .clone()
        .try_inverse()
        .ok_or(Error::SingularHessian { point: xl.clone() })?;
    let legendre = (w_dd - (-u_dd + grad_u_dot.dot(&(&h_inv * &grad_u_dot)))).abs();

    // Polar side, at x = ∇°w_t(y).
    let (w, grad_w, x) = polar_base(family, &st, y)?;
    let n = x.len();
    let u = family.value(c, &x)?;
    let (u_d, u_dd) = st.d12(|at| family.value(at, &x))?;
    let (w_d, w_dd) = st.d12(|at| family.polar_value(at, y))?;
    let grad_u = DVector::from_vec(family.gradient(c, &x)?);
    let grad_u_dot = st.d1_vec(|at| family.gradient(at, &x))?;
    let h = family.hessian(c, &x)?;
    let h_inv = h
        .clone()
        .try_inverse()
        .ok_or(Error::SingularHessian { point: x.clone() })?;
    // a = ∇(u̇/u)
    let a = &grad_u_dot / u - &grad_u * (u_d / (u * u));
    let log_w_dd = w_dd / w - (w_d / w).powi(2);
    let log_u_dd = u_dd / u - (u_d / u).powi(2);
    let quad = u * a.dot(&(&h_inv * &a));
    let polar = (log_w_dd - (-log_u_dd + quad)).abs();

    let inv_u_dd = -u_dd / (u * u) + 2.0 * u_d * u_d / (u * u * u);
    let v = &a * u;
    let mut b = DMatrix::zeros(n + 1, n + 1);
    b[(0, 0)] = -u * u * inv_u_dd;
    for i in 0..n {
        b[(0, i + 1)] = v[i];
        b[(i + 1, 0)] = v[i];
        for j in 0..n {
            b[(i + 1, j + 1)] = h[(i, j)];
        }
    }
    let matrix_form = (w_dd / w - (-b.determinant() / (u * h.determinant()))).abs();

    // b_y = ∇_y(ẇ/w), m = I − ∇w ∇uᵀ
    let grad_w = DVector::from_vec(grad_w);
    let grad_w_dot = st.d1_vec(|at| family.polar_gradient_y(at, y))?;
    let b_y = &grad_w_dot / w - &grad_w * (w_d / (w * w));
    let m = DMatrix::identity(n, n) - &grad_w * grad_u.transpose();
    let m_inv = m
        .try_inverse()
        .ok_or(Error::SingularHessian { point: y.to_vec() })?;
    let sym = -u * w * a.dot(&(&m_inv * &b_y));
    let symmetric_form = (log_w_dd - (-log_u_dd + sym)).abs();

    Ok(SecondVariation {
        legendre,
        polar,
        matrix_form,
        symmetric_form,
    })
}

/// `|∂_t w(t, x/u_t(x)) − ∂_t u(t,x) / (u_t(x) · u_t★(∇u_t(x)))|` with `w_t = J u_t`.
pub fn j_variation_residual(family: &Family, t: f64, x: &[f64]) -> Result<f64> {
    let st = family.stencil(t)?;
    let u = family.value(st.center, x)?;
    if !(u > EPS_ZERO_FLOOR) {
        return Err(Error::EmptyPolarGradient {
            point: x.to_vec(),
            reason: "u vanishes at x".into(),
        });
    }
    let s: Vec<f64> = x.iter().map(|c| c / u).collect();
    let grad = family.gradient(st.center, x)?;
    let u_star = vec_dot(x, &grad) - u;
    let w_dot = st.d1(|at| family.j_value(at, &s))?;
    let u_dot = st.d1(|at| family.value(at, x))?;
    Ok((w_dot - u_dot / (u * u_star)).abs())
}
