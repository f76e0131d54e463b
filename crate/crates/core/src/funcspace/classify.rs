//! Heuristic structural checks: Cvx₀, S₁, S₂, ray-linearity, nonlinearity at infinity.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::funcspace::ConvexFunction;

/// Sampling parameters for [`classify`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    /// Ray length for analytic inputs; grid inputs use the box.
    pub radius: f64,
    /// Number of ray directions in 2D and 3D.
    pub n_directions: usize,
    /// Random points for convexity, differentiability and Hessian tests.
    pub n_points: usize,
    pub seed: u64,
    /// Relative tolerance of the ray-linearity test.
    pub tol_lin: f64,
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec {
            radius: 16.0,
            n_directions: 16,
            n_points: 200,
            seed: 7,
            tol_lin: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassReport {
    pub in_cvx0: bool,
    pub in_s1: bool,
    pub in_s2: bool,
    /// Directions on which `f` is linear with positive slope near the origin.
    pub ray_linearity_rays: Vec<Vec<f64>>,
    /// Directions on which `f` vanishes near the origin.
    pub zero_set_rays: Vec<Vec<f64>>,
    pub nonlinear_at_infinity: bool,
    pub diagnostics: Vec<String>,
}

fn directions(dim: usize, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count.max(4))
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / count.max(4) as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            let mut out: Vec<Vec<f64>> = (0..3)
                .flat_map(|a| {
                    [1.0, -1.0].map(|s| {
                        let mut e = vec![0.0; 3];
                        e[a] = s;
                        e
                    })
                })
                .collect();
            while out.len() < count.max(6) {
                let v: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
                let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
                if r > 0.1 && r <= 1.0 {
                    out.push(v.iter().map(|c| c / r).collect());
                }
            }
            out
        }
    }
}

/// Longest `t` with `t·d` inside the domain box (analytic inputs use `radius`).
fn ray_length(f: &ConvexFunction, d: &[f64], radius: f64) -> f64 {
    match f {
        ConvexFunction::Analytic(_) => radius,
        ConvexFunction::Grid(g) => {
            let lat = g.lattice();
            (0..lat.dim())
                .filter(|&a| d[a].abs() > 1e-15)
                .map(|a| {
                    if d[a] > 0.0 {
                        lat.hi(a) / d[a]
                    } else {
                        lat.lo(a) / d[a]
                    }
                })
                .fold(f64::INFINITY, f64::min)
        }
    }
}

fn value(f: &ConvexFunction, x: &[f64]) -> f64 {
    f.evaluate(x).map_or(f64::INFINITY, |v| v.value())
}

fn along(d: &[f64], t: f64) -> Vec<f64> {
    d.iter().map(|c| c * t).collect()
}

/// Random point in the central part of the domain box (or the analytic ball).
fn random_point(f: &ConvexFunction, radius: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match f {
        ConvexFunction::Analytic(a) => (0..a.dim())
            .map(|_| rng.random_range(-radius..radius) * 0.5)
            .collect(),
        ConvexFunction::Grid(g) => {
            let lat = g.lattice();
            (0..lat.dim())
                .map(|a| rng.random_range(lat.lo(a)..lat.hi(a)) * 0.8)
                .collect()
        }
    }
}

/// Numeric class verdicts for `f`; never fails, and all verdicts are advisory.
pub fn classify(f: &ConvexFunction, spec: &SampleSpec) -> ClassReport {
    let dim = f.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut diagnostics = vec!["verdicts are sampled heuristics, not proofs".to_string()];
    let eps = f.eps_zero();

    // Cvx₀: vanishing at 0, nonnegativity and midpoint convexity.
    let mut in_cvx0 = value(f, &vec![0.0; dim]) <= eps;
    if !in_cvx0 {
        diagnostics.push("f(0) is not 0".into());
    }
    let (convex_ok, strict_ok) = match f {
        ConvexFunction::Grid(g) => {
            let ok = g.is_midpoint_convex(g.tol_convex());
            (ok, grid_strictly_convex(g, &mut rng, spec.n_points))
        }
        ConvexFunction::Analytic(_) => {
            let mut ok = true;
            let mut strict = true;
            for _ in 0..spec.n_points {
                let x = random_point(f, spec.radius, &mut rng);
                let y = random_point(f, spec.radius, &mut rng);
                let m: Vec<f64> = x.iter().zip(&y).map(|(a, b)| 0.5 * (a + b)).collect();
                let (fx, fy, fm) = (value(f, &x), value(f, &y), value(f, &m));
                if !(fx.is_finite() && fy.is_finite()) {
                    strict = false;
                    continue;
                }
                let avg = 0.5 * (fx + fy);
                let tol = 1e-12 * (1.0 + avg.abs());
                if fm > avg + tol {
                    ok = false;
                }
                let sep = x
                    .iter()
                    .zip(&y)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                if sep > 1e-6 && fm >= avg - tol {
                    strict = false;
                }
            }
            (ok, strict)
        }
    };
    if !convex_ok {
        diagnostics.push("midpoint convexity violated".into());
        in_cvx0 = false;
    }

    // Rays.
    let dirs = directions(dim, spec.n_directions, &mut rng);
    let mut ray_linearity_rays = Vec::new();
    let mut zero_set_rays = Vec::new();
    let mut nonlinear_at_infinity = true;
    let cell = f.as_grid().map_or(0.0, |g| g.lattice().max_step());
    for d in &dirs {
        let big = ray_length(f, d, spec.radius);
        let small = if cell > 0.0 { 4.0 * cell } else { 1e-4 * big };
        let ts = [small, 2.0 * small, 4.0 * small];
        let ratios: Vec<f64> = ts.iter().map(|&t| value(f, &along(d, t)) / t).collect();
        if ratios.iter().all(|r| r.is_finite()) {
            let r0 = ratios[0];
            let linear = ratios
                .iter()
                .all(|r| (r - r0).abs() <= spec.tol_lin * r0.abs().max(r.abs()) + 1e-14);
            if linear {
                if ratios[2] * ts[2] <= eps {
                    zero_set_rays.push(d.clone());
                } else {
                    ray_linearity_rays.push(d.clone());
                }
            }
        }
        if !grows_superlinearly(f, d, big) {
            nonlinear_at_infinity = false;
        }
    }
    if !zero_set_rays.is_empty() {
        diagnostics.push(format!(
            "f vanishes near the origin along {} sampled rays",
            zero_set_rays.len()
        ));
    }
    if !nonlinear_at_infinity {
        diagnostics.push("f is asymptotically linear along some sampled ray".into());
    }

    // S₁: finite, strictly convex, differentiable away from 0. S₂: positive-definite Hessians.
    let mut finite = true;
    let mut differentiable = true;
    let mut pd = true;
    let mut tested = 0;
    for _ in 0..spec.n_points {
        let x = random_point(f, spec.radius, &mut rng);
        if x.iter().map(|c| c.abs()).fold(0.0, f64::max) < 1e-3 {
            continue;
        }
        if !value(f, &x).is_finite() {
            finite = false;
            continue;
        }
        if f.gradient(&x).is_err() {
            differentiable = false;
            continue;
        }
        match f.hessian(&x) {
            Ok(h) => {
                tested += 1;
                if h.clone().cholesky().is_none() {
                    pd = false;
                }
            }
            Err(_) if f.as_grid().is_some() => {}
            Err(_) => pd = false,
        }
    }
    if tested == 0 {
        pd = false;
    }
    let in_s1 = in_cvx0 && finite && strict_ok && differentiable;
    let in_s2 = in_s1 && pd;
    if in_cvx0 && !in_s1 {
        diagnostics.push(format!(
            "not in S1 (finite: {finite}, strictly convex: {strict_ok}, differentiable: {differentiable})"
        ));
    } else if in_s1 && !in_s2 {
        diagnostics.push("Hessian not positive definite at some sample".into());
    }
    ClassReport {
        in_cvx0,
        in_s1,
        in_s2,
        ray_linearity_rays,
        zero_set_rays,
        nonlinear_at_infinity,
        diagnostics,
    }
}

/// Strict convexity on random collinear node triples.
fn grid_strictly_convex(
    g: &crate::funcspace::GridFunction,
    rng: &mut ChaCha8Rng,
    count: usize,
) -> bool {
    let lat = g.lattice();
    let n = lat.dim();
    let tol = 1e-12 * g.max_finite().max(1.0);
    for _ in 0..count {
        let mut mid = [0usize; 3];
        let mut lo = [0usize; 3];
        let mut hi = [0usize; 3];
        for a in 0..n {
            let m = rng.random_range(1..lat.shape()[a] - 1);
            let reach = m.min(lat.shape()[a] - 1 - m);
            let d = rng.random_range(0..=reach);
            mid[a] = m;
            lo[a] = m - d;
            hi[a] = m + d;
        }
        if lo[..n] == mid[..n] {
            continue;
        }
        let vm = g.value_at(lat.ravel(&mid[..n]));
        let vl = g.value_at(lat.ravel(&lo[..n]));
        let vh = g.value_at(lat.ravel(&hi[..n]));
        if vl.is_infinite() || vh.is_infinite() {
            return false;
        }
        if vm.value() >= 0.5 * (vl.value() + vh.value()) - tol {
            return false;
        }
    }
    true
}

/// Whether the tangent-line gap `a·t − f(t·d)` keeps growing along `d`.
///
/// For a function that is eventually sandwiched between `a·t − b` and `a·t`
/// the gap measured with secant slopes stays bounded.
fn grows_superlinearly(f: &ConvexFunction, d: &[f64], big: f64) -> bool {
    let phi = |t: f64| value(f, &along(d, t));
    if !phi(big).is_finite() {
        return true;
    }
    let gap = |r: f64| {
        let slope = (phi(r) - phi(r / 2.0)) / (r / 2.0);
        slope * r - phi(r)
    };
    let (g_half, g_full) = (gap(big / 2.0), gap(big));
    let scale = phi(big).abs().max(1.0);
    g_full > 1.5 * g_half.max(0.0) + 1e-9 * scale && g_full > 1e-6 * scale
}
