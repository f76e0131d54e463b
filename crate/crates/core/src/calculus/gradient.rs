//! Polar subgradients: `y` with `Pf(y) f(x) = ⟨x,y⟩ − 1`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::{ConvexFunction, GridFunction};
use crate::lattice::Lattice;
use crate::transforms::{dual_lattice, polar};

/// Why the polar subdifferential is empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyReason {
    /// `x` lies in the interior of the zero set of `f`.
    InteriorZeroSet,
    /// `⟨x,∇f(x)⟩ = f(x)`: `f` is linear along the ray through `x`.
    NormLikeNoAttainment,
    /// `f(x) = 0` on the boundary of the zero set.
    BoundaryZeroSet,
}

impl std::fmt::Display for EmptyReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            EmptyReason::InteriorZeroSet => "interior of the zero set",
            EmptyReason::NormLikeNoAttainment => "linear along the ray, no attainment",
            EmptyReason::BoundaryZeroSet => "boundary of the zero set",
        };
        f.write_str(s)
    }
}

/// Outcome of [`polar_gradient`].
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PolarGradientResult {
    Empty {
        reason: EmptyReason,
    },
    /// The polar gradient `y` and `Pf(y) > 0`.
    Point {
        y: Vec<f64>,
        polar_value: f64,
    },
    /// One-dimensional polar subdifferential at a kink.
    Interval1D {
        lo: f64,
        hi: f64,
    },
}

impl PolarGradientResult {
    /// `(y, Pf(y))` for a point result, [`Error::EmptyPolarGradient`] otherwise.
    pub fn into_point(self, x: &[f64]) -> Result<(Vec<f64>, f64)> {
        match self {
            PolarGradientResult::Point { y, polar_value } => Ok((y, polar_value)),
            PolarGradientResult::Empty { reason } => Err(Error::EmptyPolarGradient {
                point: x.to_vec(),
                reason: reason.to_string(),
            }),
            PolarGradientResult::Interval1D { lo, hi } => Err(Error::EmptyPolarGradient {
                point: x.to_vec(),
                reason: format!("set-valued: [{lo}, {hi}]"),
            }),
        }
    }
}

/// Probe step used to decide whether a zero of `f` is interior to the zero set.
fn probe_step(f: &ConvexFunction, x: &[f64]) -> f64 {
    match f {
        ConvexFunction::Grid(g) => g.lattice().max_step(),
        ConvexFunction::Analytic(_) => 1e-6 * (1.0 + x.iter().map(|c| c.abs()).fold(0.0, f64::max)),
    }
}

fn interior_to_zero_set(f: &ConvexFunction, x: &[f64], eps: f64) -> bool {
    let h = probe_step(f, x);
    (0..x.len()).all(|a| {
        [-h, h].iter().all(|d| {
            let mut p = x.to_vec();
            p[a] += d;
            f.evaluate(&p).map(|v| v.value() <= eps).unwrap_or(false)
        })
    })
}

/// `∇°f(x) = ∇f(x)/(⟨x,∇f(x)⟩ − f(x))` with `Pf = 1/(⟨x,∇f(x)⟩ − f(x))`.
///
/// One-dimensional grid functions at a kink fall back to
/// [`polar_subdifferential_1d`] over the default dual lattice.
pub fn polar_gradient(f: &ConvexFunction, x: &[f64]) -> Result<PolarGradientResult> {
    if x.len() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: x.len(),
        });
    }
    let fx = f.evaluate(x)?;
    let Some(fx) = fx.finite() else {
        return Err(Error::NotDifferentiable { point: x.to_vec() });
    };
    let eps = f.eps_zero();
    if fx <= eps {
        let reason = if interior_to_zero_set(f, x, eps) {
            EmptyReason::InteriorZeroSet
        } else {
            EmptyReason::BoundaryZeroSet
        };
        return Ok(PolarGradientResult::Empty { reason });
    }
    let g = match f.gradient(x) {
        Ok(g) => g,
        Err(Error::NotDifferentiable { .. }) if matches!(f, ConvexFunction::Grid(g) if g.dim() == 1) =>
        {
            let grid = f.as_grid().expect("grid function");
            let dual = dual_lattice(grid.lattice(), None, None)?;
            return Ok(match polar_subdifferential_1d(grid, x[0], &dual)? {
                Some([lo, hi]) => PolarGradientResult::Interval1D { lo, hi },
                None => PolarGradientResult::Empty {
                    reason: EmptyReason::NormLikeNoAttainment,
                },
            });
        }
        Err(e) => return Err(e),
    };
    let xg: f64 = x.iter().zip(&g).map(|(a, b)| a * b).sum();
    let s = xg - fx;
    if s <= eps.max(1e-9 * (xg.abs() + fx)) {
        return Ok(PolarGradientResult::Empty {
            reason: EmptyReason::NormLikeNoAttainment,
        });
    }
    Ok(PolarGradientResult::Point {
        y: g.iter().map(|c| c / s).collect(),
        polar_value: 1.0 / s,
    })
}

/// Dual nodes `y` with `|Pf(y) f(x) − (xy − 1)| ≤ f(x) (h_dual² + h_primal²) / 8`, as an interval.
///
/// Near a smooth point the residual grows quadratically in `y − ∇°f(x)`, so
/// the accepted nodes stay within one dual cell of it.
///
/// `x` is snapped to the nearest node of `f`. Returns `None` when no dual node
/// qualifies or `f(x)` is zero or infinite.
pub fn polar_subdifferential_1d(
    f: &GridFunction,
    x: f64,
    dual: &Lattice,
) -> Result<Option<[f64; 2]>> {
    if f.dim() != 1 || dual.dim() != 1 {
        return Err(Error::Unsupported(
            "the subdifferential scan is one-dimensional".into(),
        ));
    }
    let k = f.lattice().nearest(&[x]);
    let x = f.lattice().point(k)[0];
    let Some(fx) = f.value_at(k).finite() else {
        return Ok(None);
    };
    if fx <= f.eps_zero() {
        return Ok(None);
    }
    let pf = polar(f, dual)?.output;
    let (hd, hp) = (dual.step()[0], f.lattice().step()[0]);
    let tol = fx * (hd * hd + hp * hp) / 8.0;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for j in 0..dual.len() {
        let Some(p) = pf.value_at(j).finite() else {
            continue;
        };
        let y = dual.point(j)[0];
        if (p * fx - (x * y - 1.0)).abs() <= tol {
            lo = lo.min(y);
            hi = hi.max(y);
        }
    }
    Ok((lo <= hi).then_some([lo, hi]))
}

/// `∇°(f+g)(x)` as the convex combination of `∇°f(x)` and `∇°g(x)` weighted by
/// `Pg(∇°g(x))` and `Pf(∇°f(x))`.
pub fn polar_gradient_of_sum(
    f: &ConvexFunction,
    g: &ConvexFunction,
    x: &[f64],
) -> Result<Vec<f64>> {
    let (yf, a) = polar_gradient(f, x)?.into_point(x)?;
    let (yg, b) = polar_gradient(g, x)?.into_point(x)?;
    Ok(yf
        .iter()
        .zip(&yg)
        .map(|(p, q)| (b * p + a * q) / (a + b))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::AnalyticConvexFunction as F;

    fn point(r: PolarGradientResult) -> (Vec<f64>, f64) {
        r.into_point(&[]).unwrap()
    }

    #[test]
    fn square_at_one() {
        let (y, p) = point(polar_gradient(&F::squared_norm(1).into(), &[1.0]).unwrap());
        assert_eq!(y, vec![2.0]);
        assert_eq!(p, 1.0);
    }

    #[test]
    fn norm_and_ball_are_empty() {
        let r = polar_gradient(&F::norm(2, 2.0).into(), &[0.3, -0.4]).unwrap();
        assert_eq!(
            r,
            PolarGradientResult::Empty {
                reason: EmptyReason::NormLikeNoAttainment
            }
        );
        let r = polar_gradient(&F::ball_indicator(2, 2.0, 1.0).into(), &[0.2, 0.1]).unwrap();
        assert_eq!(
            r,
            PolarGradientResult::Empty {
                reason: EmptyReason::InteriorZeroSet
            }
        );
    }

    #[test]
    fn scan_matches_closed_form_for_square() {
        let lat = Lattice::symmetric(1, 3.0, 601).unwrap();
        let f = GridFunction::sample(&F::squared_norm(1), &lat).unwrap();
        let dual = Lattice::symmetric(1, 4.0, 161).unwrap();
        let [lo, hi] = polar_subdifferential_1d(&f, 1.0, &dual).unwrap().unwrap();
        let cell = dual.step()[0];
        assert!(
            (lo - 2.0).abs() <= cell && (hi - 2.0).abs() <= cell,
            "[{lo}, {hi}]"
        );
    }

    #[test]
    fn scan_on_ray_linear_tail() {
        let lat = Lattice::symmetric(1, 8.0, 801).unwrap();
        let f =
            GridFunction::tabulate(&lat, |x| crate::ExtReal::new((2.0 * (x[0] - 1.0)).max(0.0)))
                .unwrap();
        let dual = Lattice::symmetric(1, 2.0, 81).unwrap();
        let [lo, hi] = polar_subdifferential_1d(&f, 2.0, &dual).unwrap().unwrap();
        // The residual grows linearly below y = 1, so a couple of cells qualify.
        assert!(
            (hi - 1.0).abs() <= 1e-12 && lo >= 1.0 - 3.0 * dual.step()[0],
            "[{lo}, {hi}]"
        );
    }

    #[test]
    fn scan_of_norm_is_empty() {
        let lat = Lattice::symmetric(1, 3.0, 301).unwrap();
        let f = GridFunction::sample(&F::norm(1, 2.0), &lat).unwrap();
        let dual = Lattice::symmetric(1, 3.0, 121).unwrap();
        assert_eq!(polar_subdifferential_1d(&f, 1.0, &dual).unwrap(), None);
    }

    #[test]
    fn grid_gradient_at_kink_is_an_interval() {
        let lat = Lattice::symmetric(1, 4.0, 401).unwrap();
        let f = GridFunction::tabulate(&lat, |x| {
            crate::ExtReal::new(x[0].abs().max(x[0] * x[0] * 2.0 - 1.0))
        })
        .unwrap();
        // |x| meets 2x²−1 at x = 1: the slopes 1 and 4 give ∂°f(1) = [4/3, ∞).
        let r = polar_gradient(&f.into(), &[1.0]).unwrap();
        let PolarGradientResult::Interval1D { lo, hi } = r else {
            panic!("{r:?}")
        };
        assert!((lo - 4.0 / 3.0).abs() <= 0.5, "{lo}");
        assert_eq!(
            hi,
            Lattice::symmetric(1, 4.0, 401).unwrap().reciprocal().hi(0)
        );
    }

    #[test]
    fn sum_formula_matches_direct_gradient() {
        let f: ConvexFunction = F::squared_norm(1).into();
        let g: ConvexFunction = F::power(1, 2.0, 4.0, 1.0).into();
        let y = polar_gradient_of_sum(&f, &g, &[1.0]).unwrap();
        assert!((y[0] - 1.5).abs() <= 1e-14);
        let same = polar_gradient_of_sum(&f, &f, &[1.0]).unwrap();
        assert_eq!(same, vec![2.0]);
    }
}
