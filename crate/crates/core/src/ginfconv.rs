//! Geometric inf-convolution `f ⊡ g = P(Pf + Pg)`.
//!
//! The dual route is authoritative. The one-dimensional direct route scans pairs
//! `(y, z)` with `(x − y) g(z) = (z − x) f(y)` and minimizes the harmonic sum
//! `f(y) g(z) / (f(y) + g(z))`; it needs strictly convex inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::funcspace::GridFunction;
use crate::lattice::Lattice;
use crate::transforms::polar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    DualSpace,
    Direct1D,
}

/// Minimizing pair of the direct formula at one output node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WitnessPair {
    pub y: f64,
    pub z: f64,
    pub f_y: f64,
    pub g_z: f64,
}

impl WitnessPair {
    /// `(g(z) y + f(y) z) / (f(y) + g(z))`, which equals `x` on the constraint.
    pub fn combination(&self) -> f64 {
        (self.g_z * self.y + self.f_y * self.z) / (self.f_y + self.g_z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GinfResult {
    pub output: GridFunction,
    pub route: Route,
    /// Per output node, present for the direct route.
    pub witness_pairs: Option<Vec<Option<WitnessPair>>>,
}

/// `P(Pf + Pg)` with both polars on `dual` and the output on the lattice of `f`.
pub fn ginf_dual(f: &GridFunction, g: &GridFunction, dual: &Lattice) -> Result<GinfResult> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: g.dim(),
        });
    }
    let pf = polar(f, dual)?.output;
    let pg = polar(g, dual)?.output;
    let sum = pf.add(&pg)?;
    let output = polar(&sum, f.lattice())?.output;
    Ok(GinfResult {
        output,
        route: Route::DualSpace,
        witness_pairs: None,
    })
}

/// Value of the direct formula at one point; `+∞` with no witness when no pair is feasible.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirectValue {
    #[serde(with = "crate::funcspace::ext_f64")]
    pub value: f64,
    pub witness: Option<WitnessPair>,
}

fn positive(v: ExtReal, eps: f64) -> Option<f64> {
    v.finite().filter(|v| *v > eps)
}

/// Brute-force direct formula at `x` over lattice pairs of `f` and `g`.
///
/// For each `y`, sign changes of `r(z) = (x − y) g(z) − (z − x) f(y)` between
/// consecutive `z` nodes are located by linear interpolation. Only when no
/// crossing exists at all are node pairs accepted with
/// `|r| ≤ cell · (f(y) + g(z))`.
pub fn ginf_direct_1d(f: &GridFunction, g: &GridFunction, x: f64) -> Result<DirectValue> {
    if f.dim() != 1 || g.dim() != 1 {
        return Err(Error::Unsupported(
            "the direct formula is one-dimensional".into(),
        ));
    }
    if x == 0.0 {
        return Ok(DirectValue {
            value: 0.0,
            witness: Some(WitnessPair {
                y: 0.0,
                z: 0.0,
                f_y: 0.0,
                g_z: 0.0,
            }),
        });
    }
    let (lf, lg) = (f.lattice(), g.lattice());
    let (ef, eg) = (f.eps_zero(), g.eps_zero());
    let gz: Vec<Option<f64>> = (0..lg.len()).map(|k| positive(g.value_at(k), eg)).collect();
    let zs: Vec<f64> = (0..lg.len()).map(|k| lg.coord(0, k)).collect();
    let mut best: Option<(f64, WitnessPair)> = None;
    let mut consider = |w: WitnessPair| {
        let v = w.f_y * w.g_z / (w.f_y + w.g_z);
        if v < best.map_or(f64::INFINITY, |b| b.0) {
            best = Some((v, w));
        }
    };
    let mut crossed = false;
    for j in 0..lf.len() {
        let Some(fy) = positive(f.value_at(j), ef) else {
            continue;
        };
        let y = lf.coord(0, j);
        let r = |z: f64, gv: f64| (x - y) * gv - (z - x) * fy;
        for k in 0..zs.len() - 1 {
            let (Some(g1), Some(g2)) = (gz[k], gz[k + 1]) else {
                continue;
            };
            let (r1, r2) = (r(zs[k], g1), r(zs[k + 1], g2));
            if r1 == 0.0 {
                crossed = true;
                consider(WitnessPair {
                    y,
                    z: zs[k],
                    f_y: fy,
                    g_z: g1,
                });
            } else if r1 * r2 < 0.0 {
                crossed = true;
                let w = r1 / (r1 - r2);
                consider(WitnessPair {
                    y,
                    z: zs[k] + w * (zs[k + 1] - zs[k]),
                    f_y: fy,
                    g_z: g1 + w * (g2 - g1),
                });
            }
        }
    }
    if !crossed {
        let cell = lf.step()[0].max(lg.step()[0]);
        for j in 0..lf.len() {
            let Some(fy) = positive(f.value_at(j), ef) else {
                continue;
            };
            let y = lf.coord(0, j);
            for (k, gv) in gz.iter().enumerate() {
                let Some(gv) = *gv else { continue };
                if ((x - y) * gv - (zs[k] - x) * fy).abs() <= cell * (fy + gv) {
                    consider(WitnessPair {
                        y,
                        z: zs[k],
                        f_y: fy,
                        g_z: gv,
                    });
                }
            }
        }
    }
    Ok(match best {
        Some((v, w)) => DirectValue {
            value: v,
            witness: Some(w),
        },
        None => DirectValue {
            value: f64::INFINITY,
            witness: None,
        },
    })
}

/// [`ginf_direct_1d`] at every node of `out`, with witnesses.
pub fn ginf_direct_1d_grid(
    f: &GridFunction,
    g: &GridFunction,
    out: &Lattice,
) -> Result<GinfResult> {
    let mut values = Vec::with_capacity(out.len());
    let mut witnesses = Vec::with_capacity(out.len());
    for k in 0..out.len() {
        let d = ginf_direct_1d(f, g, out.coord(0, k))?;
        values.push(ExtReal::new(d.value));
        witnesses.push(d.witness);
    }
    Ok(GinfResult {
        output: GridFunction::new(out.clone(), values)?,
        route: Route::Direct1D,
        witness_pairs: Some(witnesses),
    })
}

/// A point of the cone body `{(x, y) : y φ(x/y) ≤ 1}` at direction `s = x/y`.
fn sample_cone(f: &GridFunction, rng: &mut ChaCha8Rng) -> Option<(Vec<f64>, f64)> {
    let lat = f.lattice();
    let s: Vec<f64> = (0..lat.dim())
        .map(|a| rng.random_range(lat.lo(a)..=lat.hi(a)))
        .collect();
    let v = f.evaluate(&s).ok()?;
    let v = v.finite()?;
    let height = if v <= f.eps_zero() {
        rng.random_range(0.0..10.0)
    } else if rng.random_bool(0.5) {
        1.0 / v
    } else {
        rng.random_range(0.0..=1.0) / v
    };
    Some((s, height))
}

/// Largest excess `(y₁+y₂) h((x₁+x₂)/(y₁+y₂)) − 1` over sampled pairs from the
/// cone bodies of `f` and `g`, with `h = f ⊡ g` from the dual route.
pub fn cone_body_check(
    f: &GridFunction,
    g: &GridFunction,
    dual: &Lattice,
    n_samples: usize,
    seed: u64,
) -> Result<f64> {
    let h = ginf_dual(f, g, dual)?.output;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut drawn = 0;
    let mut attempts = 0;
    while drawn < n_samples && attempts < 20 * n_samples.max(1) {
        attempts += 1;
        let (Some((s1, y1)), Some((s2, y2))) = (sample_cone(f, &mut rng), sample_cone(g, &mut rng))
        else {
            continue;
        };
        let y = y1 + y2;
        if !(y > 0.0) {
            continue;
        }
        let s: Vec<f64> = s1
            .iter()
            .zip(&s2)
            .map(|(a, b)| (y1 * a + y2 * b) / y)
            .collect();
        let Ok(v) = h.evaluate(&s) else { continue };
        drawn += 1;
        worst = worst.max(y * v.value() - 1.0);
    }
    Ok(worst)
}
