//! Set-level consistency checks between `f` and its polar.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::GridFunction;
use crate::lattice::Lattice;
use crate::transforms::polar;

/// Radial comparison of `dom(Pf)` with `(f⁻¹(0))°` and of `(Pf)⁻¹(0)` with `(dom f)°`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainDualityReport {
    /// Largest radial gap between the finite region of `Pf` and the polar of the zero set of `f`.
    pub domain_deviation: f64,
    /// Largest radial gap between the zero set of `Pf` and the polar of the domain of `f`.
    pub zero_set_deviation: f64,
    pub directions: usize,
    /// Radial step of the boundary search (a quarter dual cell).
    pub resolution: f64,
}

impl DomainDualityReport {
    pub fn max_deviation(&self) -> f64 {
        self.domain_deviation.max(self.zero_set_deviation)
    }
}

fn unit_directions(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * (k as f64 + 0.5) / count as f64;
                vec![a.cos(), a.sin()]
            })
            .collect(),
        _ => {
            // Fibonacci sphere.
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = golden * k as f64;
                    vec![r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
    }
}

/// Distance from the origin to the box boundary along `u`.
fn exit_radius(lat: &Lattice, u: &[f64]) -> f64 {
    (0..lat.dim())
        .filter(|&a| u[a].abs() > 1e-15)
        .map(|a| {
            if u[a] > 0.0 {
                lat.hi(a) / u[a]
            } else {
                lat.lo(a) / u[a]
            }
        })
        .fold(f64::INFINITY, f64::min)
}

/// Largest `r ≤ exit` with `inside(r·u)`, found by marching in steps of `step`.
fn radial_extent(g: &GridFunction, u: &[f64], step: f64, inside: impl Fn(f64) -> bool) -> f64 {
    let exit = exit_radius(g.lattice(), u);
    let mut r = 0.0;
    loop {
        let next = (r + step).min(exit);
        let p: Vec<f64> = u.iter().map(|c| c * next).collect();
        let ok = g.evaluate(&p).map(|v| inside(v.value())).unwrap_or(false);
        if !ok {
            return r;
        }
        if next >= exit {
            return exit;
        }
        r = next;
    }
}

/// Support function `max ⟨x, u⟩` over the nodes selected by `keep`.
fn support(f: &GridFunction, u: &[f64], keep: impl Fn(f64) -> bool) -> f64 {
    let lat = f.lattice();
    (0..lat.len())
        .filter(|&k| keep(f.value_at(k).value()))
        .map(|k| {
            let p = lat.point(k);
            (0..lat.dim()).map(|a| p[a] * u[a]).sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Compares the numeric domain and zero set of `Pf` with the polars of the zero set and domain of `f`.
pub fn domain_duality_check(
    f: &GridFunction,
    dual: &Lattice,
    n_directions: usize,
) -> Result<DomainDualityReport> {
    let pf = polar(f, dual)?.output;
    let eps_f = f.eps_zero();
    let eps_p = pf.eps_zero();
    let step = 0.25 * dual.step().iter().cloned().fold(f64::INFINITY, f64::min);
    let dirs = unit_directions(f.dim(), n_directions.max(4));
    let mut dom_dev: f64 = 0.0;
    let mut zero_dev: f64 = 0.0;
    for u in &dirs {
        let exit = exit_radius(dual, u);
        let predicted = |h: f64| if h <= 0.0 { exit } else { (1.0 / h).min(exit) };
        let hz = support(f, u, |v| v <= eps_f);
        let hd = support(f, u, |v| v.is_finite());
        let dom = radial_extent(&pf, u, step, |v| v.is_finite());
        let zero = radial_extent(&pf, u, step, |v| v <= eps_p);
        dom_dev = dom_dev.max((dom - predicted(hz)).abs());
        zero_dev = zero_dev.max((zero - predicted(hd)).abs());
    }
    Ok(DomainDualityReport {
        domain_deviation: dom_dev,
        zero_set_deviation: zero_dev,
        directions: dirs.len(),
        resolution: step,
    })
}

/// Checks that reflecting the polar of `epi f` in `Rⁿ × {0}` lands on the graph of `Pf`.
///
/// For each random direction `(u, σ)` with `σ < 0`, the boundary point of the
/// polar set is `ρ·(u, σ)` with `1/ρ = max_x ⟨x,u⟩ + σ f(x)`; its reflection
/// `(ρu, −ρσ)` is compared with `Pf(ρu)`. Returns the signed deviation of
/// largest magnitude over the points that land inside the dual box.
pub fn epigraph_polar_check(
    f: &GridFunction,
    dual: &Lattice,
    n_directions: usize,
    seed: u64,
) -> Result<f64> {
    if f.dim() > 2 {
        return Err(Error::Unsupported(
            "the epigraph check covers dimensions 1 and 2".into(),
        ));
    }
    let pf = polar(f, dual)?.output;
    let lat = f.lattice();
    let n = lat.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut accepted = 0;
    while accepted < n_directions {
        let mut dir: Vec<f64> = (0..=n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = dir.iter().map(|c| c * c).sum::<f64>().sqrt();
        if !(0.1..=1.0).contains(&len) {
            continue;
        }
        dir.iter_mut().for_each(|c| *c /= len);
        accepted += 1;
        let sigma = dir[n];
        if sigma >= 0.0 {
            // Upward directions meet the vertical recession ray of epi f.
            continue;
        }
        let h = (0..lat.len())
            .filter_map(|k| f.value_at(k).finite().map(|v| (k, v)))
            .map(|(k, v)| {
                let p = lat.point(k);
                (0..n).map(|a| p[a] * dir[a]).sum::<f64>() + sigma * v
            })
            .fold(f64::NEG_INFINITY, f64::max);
        if h <= 0.0 {
            continue;
        }
        let rho = 1.0 / h;
        let y: Vec<f64> = dir[..n].iter().map(|c| c * rho).collect();
        let s = -rho * sigma;
        let Ok(v) = pf.evaluate(&y) else { continue };
        let Some(v) = v.finite() else { continue };
        let dev = v - s;
        if dev.abs() > worst.abs() {
            worst = dev;
        }
    }
    Ok(worst)
}
