//! Hessian transfer between `f`, its polar and its J transform.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::calculus::gradient::polar_gradient;
use crate::error::{Error, Result};
use crate::funcspace::{AnalyticConvexFunction, ConvexFunction, GridFunction};
use crate::transforms::polar_analytic;

/// Second-order data linked through `y = ∇°f(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianTransfer {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f_value: f64,
    pub polar_value: f64,
    #[serde(serialize_with = "ser_matrix")]
    pub hess_f: DMatrix<f64>,
    #[serde(serialize_with = "ser_matrix")]
    pub hess_polar: DMatrix<f64>,
    /// `∇²Jf(x/f(x))`, the inverse of `hess_polar`.
    #[serde(serialize_with = "ser_matrix")]
    pub hess_j: DMatrix<f64>,
    /// `|det ∇²f(x) · det ∇²Pf(y) · (f(x)Pf(y))^{n+2} − 1|`.
    pub det_residual: f64,
    /// Largest entry of `hess_polar − transfer_formula(hess_f)`; zero when
    /// `hess_polar` was itself obtained from the formula.
    pub transfer_residual: f64,
}

fn ser_matrix<S: serde::Serializer>(
    m: &DMatrix<f64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = s.serialize_seq(Some(m.nrows()))?;
    for i in 0..m.nrows() {
        let row: Vec<f64> = (0..m.ncols()).map(|j| m[(i, j)]).collect();
        seq.serialize_element(&row)?;
    }
    seq.end()
}

/// `[f(x)Pf(y) (I − x yᵀ)ᵀ ∇²f(x) (I − x yᵀ)]⁻¹`, with `x` a column and `y` a row.
pub fn transfer_formula(
    x: &[f64],
    y: &[f64],
    f_value: f64,
    polar_value: f64,
    hess_f: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let n = x.len();
    let m = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } - x[i] * y[j]);
    let inv = (m.transpose() * hess_f * &m) * (f_value * polar_value);
    let inv = (&inv + inv.transpose()) * 0.5;
    inv.try_inverse()
        .ok_or(Error::SingularHessian { point: y.to_vec() })
}

fn check_invertible(h: &DMatrix<f64>, x: &[f64]) -> Result<()> {
    let det = h.determinant();
    let scale = h.amax().powi(h.nrows() as i32);
    if !(det.abs() > 1e-14 * scale) || !det.is_finite() {
        return Err(Error::SingularHessian { point: x.to_vec() });
    }
    Ok(())
}

fn assemble(
    x: &[f64],
    y: Vec<f64>,
    f_value: f64,
    polar_value: f64,
    hess_f: DMatrix<f64>,
    measured_polar: Option<DMatrix<f64>>,
) -> Result<HessianTransfer> {
    let n = x.len();
    let formula = transfer_formula(x, &y, f_value, polar_value, &hess_f)?;
    let (hess_polar, transfer_residual) = match measured_polar {
        Some(h) => {
            let r = (&h - &formula).amax();
            (h, r)
        }
        None => (formula, 0.0),
    };
    let hess_j = hess_polar
        .clone()
        .try_inverse()
        .ok_or(Error::SingularHessian { point: y.clone() })?;
    let det_residual = (hess_f.determinant()
        * hess_polar.determinant()
        * (f_value * polar_value).powi(n as i32 + 2)
        - 1.0)
        .abs();
    Ok(HessianTransfer {
        x: x.to_vec(),
        y,
        f_value,
        polar_value,
        hess_f,
        hess_polar,
        hess_j,
        det_residual,
        transfer_residual,
    })
}

/// Exact path: `∇²Pf(y)` from the closed-form polar when the catalog has one,
/// otherwise from the transfer formula.
pub fn hessian_of_polar(f: &AnalyticConvexFunction, x: &[f64]) -> Result<HessianTransfer> {
    let cf = ConvexFunction::Analytic(f.clone());
    let (y, polar_value) = polar_gradient(&cf, x)?.into_point(x)?;
    let f_value = f.evaluate(x).value();
    let hess_f = f.hessian(x)?;
    check_invertible(&hess_f, x)?;
    let measured = match polar_analytic(f) {
        Ok(pf) => Some(pf.hessian(&y)?),
        Err(Error::Unsupported(_)) => None,
        Err(e) => return Err(e),
    };
    assemble(x, y, f_value, polar_value, hess_f, measured)
}

/// Grid path: finite differences of `f` at `x` and of the sampled polar `pf` at `y`.
///
/// `Pf(y)` is taken from the polar gradient rather than interpolated from `pf`.
pub fn hessian_of_polar_grid(
    f: &GridFunction,
    pf: &GridFunction,
    x: &[f64],
) -> Result<HessianTransfer> {
    let cf = ConvexFunction::Grid(f.clone());
    let (y, polar_value) = polar_gradient(&cf, x)?.into_point(x)?;
    if !(polar_value > pf.eps_zero()) || !polar_value.is_finite() {
        return Err(Error::RayLinearAtY { point: y });
    }
    let f_value = f.evaluate(x)?.value();
    let hess_f = f.hessian(x)?;
    check_invertible(&hess_f, x)?;
    let hess_polar = pf.hessian(&y)?;
    check_invertible(&hess_polar, &y)?;
    assemble(x, y, f_value, polar_value, hess_f, Some(hess_polar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcspace::AnalyticConvexFunction as F;
    use crate::lattice::Lattice;
    use crate::transforms::polar;

    #[test]
    fn square_1d() {
        let t = hessian_of_polar(&F::squared_norm(1), &[1.0]).unwrap();
        assert_eq!(t.y, vec![2.0]);
        assert!((t.hess_polar[(0, 0)] - 0.5).abs() <= 1e-15);
        assert!(t.det_residual <= 1e-14);
        assert!(t.transfer_residual <= 1e-14);
    }

    #[test]
    fn squared_norm_2d() {
        let t = hessian_of_polar(&F::squared_norm(2), &[1.0, 0.0]).unwrap();
        assert_eq!(t.y, vec![2.0, 0.0]);
        assert!(t.det_residual <= 1e-10);
    }

    #[test]
    fn transfer_orientation_on_non_radial_power() {
        // ‖x‖₃² has polar ¼‖y‖_{3/2}², whose Hessian is known in closed form.
        let f = F::power(2, 3.0, 2.0, 1.0);
        let pf = polar_analytic(&f).unwrap();
        for x in [[0.7, 0.3], [-0.4, 1.1], [1.3, -0.9]] {
            let t = hessian_of_polar(&f, &x).unwrap();
            let exact = pf.hessian(&t.y).unwrap();
            let formula = transfer_formula(&x, &t.y, t.f_value, t.polar_value, &t.hess_f).unwrap();
            assert!(
                (&formula - &exact).amax() <= 1e-10 * exact.amax(),
                "{formula} vs {exact}"
            );
            // Swapping the outer product orientation breaks the identity.
            let swapped = transfer_formula(&t.y, &x, t.f_value, t.polar_value, &t.hess_f).unwrap();
            assert!((&swapped - &exact).amax() > 1e-3);
        }
    }

    #[test]
    fn quadratic_positive_definite_transfer() {
        let f = F::quadratic(vec![vec![3.0, 1.0], vec![1.0, 0.5]]);
        let t = hessian_of_polar(&f, &[0.3, -2.0]).unwrap();
        assert!(t.hess_polar.clone().symmetric_eigenvalues().min() > 0.0);
        assert!(t.det_residual <= 1e-12);
        assert!(t.transfer_residual <= 1e-12);
    }

    #[test]
    fn grid_path_on_square() {
        let lat = Lattice::symmetric(1, 3.0, 2401).unwrap();
        let f = GridFunction::sample(&F::squared_norm(1), &lat).unwrap();
        let dual = Lattice::symmetric(1, 4.0, 41).unwrap();
        let pf = polar(&f, &dual).unwrap().output;
        let t = hessian_of_polar_grid(&f, &pf, &[1.0]).unwrap();
        assert!(t.det_residual <= 1e-3, "{t:?}");
    }

    #[test]
    fn singular_hessian_is_refused() {
        let f = F::MaxOfAffinePlus {
            pieces: vec![crate::funcspace::AffinePiece {
                slope: vec![1.0],
                intercept: -1.0,
            }],
        };
        assert!(hessian_of_polar(&F::sum(vec![f, F::norm(1, 2.0)]), &[2.0]).is_err());
    }
}
