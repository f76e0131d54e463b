//! The J transform `J = L∘P = P∘L`.
//!
//! Two routes: the fractional-linear map `F(x, t) = (x/t, 1/t)` applied to an
//! epigraph sample followed by a lower convex hull (1D and 2D), and the
//! composition of the discrete polar and Legendre transforms (any dimension).

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::funcspace::GridFunction;
use crate::lattice::Lattice;
use crate::transforms::hull::{convex_hull_2d, convex_hull_3d, polygon_contains, LowerHull1d};
use crate::transforms::{legendre, polar};

fn finish(out: &Lattice, mut values: Vec<f64>) -> Result<GridFunction> {
    values[out.origin_flat()] = 0.0;
    let values = values
        .into_iter()
        .map(|v| ExtReal::new(v.max(0.0)))
        .collect();
    Ok(GridFunction::new(out.clone(), values)?.with_convexified(true))
}

/// J via the F-map and a lower convex hull, resampled on `out`.
///
/// Nodes outside the projection of the image cloud get `+∞`.
pub fn j_transform_fmap(f: &GridFunction, out: &Lattice) -> Result<GridFunction> {
    if f.dim() != out.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: out.dim(),
        });
    }
    match f.dim() {
        1 => fmap_1d(f, out),
        2 => fmap_2d(f, out),
        _ => Err(Error::Unsupported(
            "the F-map route covers dimensions 1 and 2".into(),
        )),
    }
}

fn fmap_1d(f: &GridFunction, out: &Lattice) -> Result<GridFunction> {
    let lat = f.lattice();
    let eps = f.eps_zero();
    let mut pts = vec![[0.0, 0.0]];
    for k in 0..lat.len() {
        if let Some(v) = f.value_at(k).finite() {
            let t = v.max(eps);
            pts.push([lat.coord(0, k) / t, 1.0 / t]);
        }
    }
    let hull = LowerHull1d::new(pts)?;
    let values = (0..out.len()).map(|j| hull.eval(out.coord(0, j))).collect();
    finish(out, values)
}

fn fmap_2d(f: &GridFunction, out: &Lattice) -> Result<GridFunction> {
    let lat = f.lattice();
    let eps = f.eps_zero();
    let reach = (0..2).map(|a| out.radius(a)).fold(0.0, f64::max);
    let mut pts: Vec<[f64; 3]> = vec![[0.0; 3]];
    for k in 0..lat.len() {
        let Some(v) = f.value_at(k).finite() else {
            continue;
        };
        let p = lat.point(k);
        let r = p[0].hypot(p[1]);
        if r == 0.0 {
            continue;
        }
        // Zero-set nodes map onto rays through the origin; any lift that keeps
        // the image well past the output box traces the same hull there.
        let t = if v <= eps {
            eps.max(r / (1e5 * reach))
        } else {
            v
        };
        pts.push([p[0] / t, p[1] / t, 1.0 / t]);
    }
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    for p in &pts {
        for a in 0..3 {
            lo[a] = lo[a].min(p[a]);
            hi[a] = hi[a].max(p[a]);
        }
    }
    let span: Vec<f64> = (0..3)
        .map(|a| (hi[a] - lo[a]).max(f64::MIN_POSITIVE))
        .collect();
    let scaled: Vec<[f64; 3]> = pts
        .iter()
        .map(|p| {
            [
                (p[0] - lo[0]) / span[0],
                (p[1] - lo[1]) / span[1],
                (p[2] - lo[2]) / span[2],
            ]
        })
        .collect();
    let planes = match convex_hull_3d(&scaled) {
        Ok(p) => p,
        Err(e) => {
            log::debug!("F-map hull failed ({e}); using the composition route");
            let mid = lat.reciprocal();
            return j_transform_composition(f, &mid, out);
        }
    };
    let lower: Vec<([f64; 3], f64)> = planes.into_iter().filter(|(n, _)| n[2] < -1e-12).collect();
    let shadow = convex_hull_2d(scaled.iter().map(|p| [p[0], p[1]]).collect());
    let values = (0..out.len())
        .map(|j| {
            let s = out.point(j);
            let q = [(s[0] - lo[0]) / span[0], (s[1] - lo[1]) / span[1]];
            if !polygon_contains(&shadow, q, 1e-12) {
                return f64::INFINITY;
            }
            let tau = lower
                .iter()
                .map(|(n, d)| (d - n[0] * q[0] - n[1] * q[1]) / n[2])
                .fold(f64::NEG_INFINITY, f64::max);
            lo[2] + tau * span[2]
        })
        .collect();
    finish(out, values)
}

/// J as `L(P f)`, with `P f` sampled on the intermediate lattice `mid`.
pub fn j_transform_composition(
    f: &GridFunction,
    mid: &Lattice,
    out: &Lattice,
) -> Result<GridFunction> {
    let pf = polar(f, mid)?;
    let mut j = legendre(&pf.output, out)?.output;
    j = j.with_argmax(None);
    Ok(j)
}

/// J with the F-map route in 1D/2D and the composition route in 3D.
pub fn j_transform(f: &GridFunction, out: &Lattice) -> Result<GridFunction> {
    match f.dim() {
        1 | 2 => j_transform_fmap(f, out),
        _ => j_transform_composition(f, &f.lattice().reciprocal(), out),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::AnalyticConvexFunction as F;

    #[test]
    fn interval_indicator_maps_to_ray() {
        let lat = Lattice::new(&[[-1.0, 3.0]], &[401]).unwrap();
        let f = GridFunction::sample(&F::interval_indicator(0.0, 2.0), &lat).unwrap();
        let j = j_transform_fmap(&f, &lat).unwrap();
        for k in 0..lat.len() {
            let s = lat.coord(0, k);
            let v = j.value_at(k);
            if s < -1e-12 {
                assert!(v.is_infinite());
            } else {
                assert!((v.value() - s / 2.0).abs() <= 1e-9, "s={s}");
            }
        }
    }

    #[test]
    fn ray_maps_to_interval_indicator() {
        let lat = Lattice::new(&[[-1.0, 999.0]], &[1001]).unwrap();
        let f = GridFunction::sample(&F::ray_linear(2.0), &lat).unwrap();
        let out = Lattice::new(&[[-1.0, 1.0]], &[201]).unwrap();
        let j = j_transform_fmap(&f, &out).unwrap();
        for k in 0..out.len() {
            let s = out.coord(0, k);
            let v = j.value_at(k);
            if !(-1e-12..=0.5 + 1e-12).contains(&s) {
                assert!(v.is_infinite(), "s={s}");
            } else {
                assert!(v.value() <= 1e-3, "s={s}");
            }
        }
    }

    #[test]
    fn power_maps_to_conjugate_power() {
        let lat = Lattice::symmetric(1, 3.0, 601).unwrap();
        for p in [2.0, 3.0, 4.0] {
            let f = GridFunction::sample(&F::power(1, 2.0, p, 1.0), &lat).unwrap();
            let out = Lattice::symmetric(1, 2.0, 81).unwrap();
            let j = j_transform_fmap(&f, &out).unwrap();
            for k in 0..out.len() {
                let s: f64 = out.coord(0, k);
                if s.abs() >= 0.5 {
                    let exact = s.abs().powf(p / (p - 1.0));
                    assert!(
                        (j.value_at(k).value() - exact).abs() <= 1e-3 * exact.max(1.0),
                        "p={p} s={s}"
                    );
                }
            }
        }
    }

    #[test]
    fn routes_agree_in_2d() {
        let lat = Lattice::symmetric(2, 3.0, 81).unwrap();
        let f = GridFunction::sample(&F::squared_norm(2), &lat).unwrap();
        let out = Lattice::symmetric(2, 1.5, 13).unwrap();
        let a = j_transform_fmap(&f, &out).unwrap();
        let b =
            j_transform_composition(&f, &Lattice::symmetric(2, 6.0, 121).unwrap(), &out).unwrap();
        for k in 0..out.len() {
            let p = out.point(k);
            let r2 = p[0] * p[0] + p[1] * p[1];
            if (0.5..=2.0).contains(&r2) {
                // J(|x|²) = |s|².
                assert!(
                    (a.value_at(k).value() - r2).abs() <= 2e-2,
                    "{p:?}: {}",
                    a.value_at(k)
                );
                assert!((a.value_at(k).value() - b.value_at(k).value()).abs() <= 2e-2);
            }
        }
    }
}
