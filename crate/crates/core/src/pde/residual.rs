//! PDE residuals of sampled paths, with time derivatives from frame differences.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::funcspace::GridFunction;
use crate::lattice::Lattice;
use crate::pde::path::TimePath;
use crate::pde::solve::HjSolution;
use crate::transforms::legendre;

/// Three-point weights `(frame, d/dt, d²/dt²)` around the interior frame `k`.
fn three_point(path: &TimePath, k: usize) -> [(usize, f64, f64); 3] {
    let ts = path.times();
    let (h1, h2) = (ts[k] - ts[k - 1], ts[k + 1] - ts[k]);
    let s = h1 + h2;
    [
        (k - 1, -h2 / (h1 * s), 2.0 / (h1 * s)),
        (k, (h2 - h1) / (h1 * h2), -2.0 / (h1 * h2)),
        (k + 1, h1 / (h2 * s), 2.0 / (h2 * s)),
    ]
}

fn positive_value(path: &TimePath, k: usize, x: &[f64]) -> Result<f64> {
    let f = path.frame(k)?;
    let u = f
        .evaluate(x)?
        .finite()
        .ok_or_else(|| Error::NotDifferentiable { point: x.to_vec() })?;
    if !(u > f.eps_zero()) {
        return Err(Error::EmptyPolarGradient {
            point: x.to_vec(),
            reason: "u vanishes at x".into(),
        });
    }
    Ok(u)
}

/// `|u̇/u + u★(∇u) g(∇u / u★(∇u))|` at an interior frame time `t`.
///
/// `u★(∇u)` is read from the Legendre transform of the frame on the dual
/// lattice of the solution.
pub fn hj_residual(sol: &HjSolution, t: f64, x: &[f64]) -> Result<f64> {
    let path = &sol.path;
    let k = path.interior_index_of(t)?;
    let u = positive_value(path, k, x)?;
    let mut u_dot = 0.0;
    for (j, w, _) in three_point(path, k) {
        u_dot += w * path.frame(j)?.evaluate(x)?.value();
    }
    let frame = path.frame(k)?;
    let p = frame.gradient(x)?;
    let star = legendre(frame, &sol.dual)?.output.evaluate(&p)?.value();
    if !(star > 0.0) {
        return Err(Error::RayLinearAtY { point: p });
    }
    let q: Vec<f64> = p.iter().map(|c| c / star).collect();
    let g = sol.hamiltonian.evaluate(&q)?.value();
    Ok((u_dot / u + star * g).abs())
}

/// Central-difference gradient and Hessian of a frame with step `h` on every axis.
fn derivatives(f: &GridFunction, x: &[f64], h: f64) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = x.len();
    let at = |shift: &[(usize, f64)]| -> Result<f64> {
        let mut p = x.to_vec();
        for &(a, s) in shift {
            p[a] += s;
        }
        f.evaluate(&p)?
            .finite()
            .ok_or_else(|| Error::NotDifferentiable { point: p.clone() })
    };
    let f0 = at(&[])?;
    let mut g = DVector::zeros(n);
    let mut m = DMatrix::zeros(n, n);
    for a in 0..n {
        let (fp, fm) = (at(&[(a, h)])?, at(&[(a, -h)])?);
        g[a] = (fp - fm) / (2.0 * h);
        m[(a, a)] = (fp - 2.0 * f0 + fm) / (h * h);
        for b in 0..a {
            let v = (at(&[(a, h), (b, h)])? - at(&[(a, h), (b, -h)])? - at(&[(a, -h), (b, h)])?
                + at(&[(a, -h), (b, -h)])?)
                / (4.0 * h * h);
            m[(a, b)] = v;
            m[(b, a)] = v;
        }
    }
    Ok((g, m))
}

/// Spatial step of [`ma_residual`]: `√(cell · radius) / 8`, at least one cell.
///
/// Frames carry an irregular `O(cell²)` error from the two discrete polars, so
/// cell-sized second differences do not converge; a step of order `√cell` does.
pub fn ma_spatial_step(lattice: &Lattice) -> f64 {
    let cell = lattice.max_step();
    let r = (0..lattice.dim())
        .map(|a| lattice.radius(a))
        .fold(0.0, f64::max);
    ((cell * r).sqrt() / 8.0).max(cell)
}

/// `|(1/u)¨ + ⟨∇(u̇/u), (∇²u)⁻¹ ∇(u̇/u)⟩|` at an interior frame time `t`.
pub fn ma_residual(path: &TimePath, t: f64, x: &[f64]) -> Result<f64> {
    let k = path.interior_index_of(t)?;
    ma_residual_with_step(path, t, x, ma_spatial_step(path.frame(k)?.lattice()))
}

/// [`ma_residual`] with an explicit spatial difference step.
pub fn ma_residual_with_step(path: &TimePath, t: f64, x: &[f64], h: f64) -> Result<f64> {
    let k = path.interior_index_of(t)?;
    let u = positive_value(path, k, x)?;
    let n = x.len();
    let mut u_dot = 0.0;
    let mut inv_dd = 0.0;
    let mut grad_dot = DVector::zeros(n);
    let mut centre = None;
    for (j, w1, w2) in three_point(path, k) {
        let v = positive_value(path, j, x)?;
        let (g, hess) = derivatives(path.frame(j)?, x, h)?;
        u_dot += w1 * v;
        inv_dd += w2 / v;
        grad_dot += &g * w1;
        if j == k {
            centre = Some((g, hess));
        }
    }
    let (grad, hess) = centre.expect("stencil contains the centre frame");
    let h_inv = hess
        .try_inverse()
        .ok_or_else(|| Error::SingularHessian { point: x.to_vec() })?;
    let a = &grad_dot / u - &grad * (u_dot / (u * u));
    Ok((inv_dd + a.dot(&(&h_inv * &a))).abs())
}

/// `|∂_t u(0, x) − u̇₀(x)|` from the one-sided three-point formula on the first frames.
pub fn initial_velocity_residual(path: &TimePath, x: &[f64], du0: f64) -> Result<f64> {
    if path.len() < 3 || path.times()[0] != 0.0 {
        return Err(Error::FrameOutOfRange {
            index: 2,
            len: path.len(),
        });
    }
    let ts = path.times();
    let (h1, h2) = (ts[1], ts[2] - ts[1]);
    let s = h1 + h2;
    let v = |j: usize| -> Result<f64> { Ok(path.frame(j)?.evaluate(x)?.value()) };
    let d = -(2.0 * h1 + h2) / (h1 * s) * v(0)? + s / (h1 * h2) * v(1)? - h1 / (h2 * s) * v(2)?;
    Ok((d - du0).abs())
}
