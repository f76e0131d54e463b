//! Uniform box lattices with a node at the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 3;

/// A uniform lattice on a box `[lo_0,hi_0] × … × [lo_{n-1},hi_{n-1}]`.
///
/// Node `k` on axis `a` sits at `(k - origin[a]) * step[a]`, so the origin is
/// represented exactly. Flat indices are row-major with axis 0 slowest, which
/// makes flat order equal to lexicographic multi-index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lattice {
    bounds: Vec<[f64; 2]>,
    shape: Vec<usize>,
    #[serde(skip)]
    step: Vec<f64>,
    #[serde(skip)]
    origin: Vec<usize>,
    #[serde(skip)]
    strides: Vec<usize>,
}

impl Lattice {
    pub fn new(bounds: &[[f64; 2]], shape: &[usize]) -> Result<Self> {
        let dim = bounds.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidShape(format!("dimension {dim} not in 1..=3")));
        }
        if shape.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: shape.len(),
            });
        }
        let mut step = Vec::with_capacity(dim);
        let mut origin = Vec::with_capacity(dim);
        for (axis, (&[lo, hi], &n)) in bounds.iter().zip(shape).enumerate() {
            if !(lo.is_finite() && hi.is_finite()) || !(lo < 0.0 && 0.0 < hi) {
                return Err(Error::BoxExcludesOrigin(format!(
                    "axis {axis}: [{lo}, {hi}] must satisfy lo < 0 < hi"
                )));
            }
            if n < 3 || n % 2 == 0 {
                return Err(Error::InvalidShape(format!(
                    "axis {axis}: point count {n} must be odd and at least 3"
                )));
            }
            let h = (hi - lo) / (n - 1) as f64;
            let k0 = (-lo / h).round();
            if (lo + k0 * h).abs() > 1e-9 * h {
                return Err(Error::BoxExcludesOrigin(format!(
                    "axis {axis}: origin is not a lattice node of [{lo}, {hi}] with {n} points"
                )));
            }
            step.push(h);
            origin.push(k0 as usize);
        }
        let mut strides = vec![1; dim];
        for a in (0..dim.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * shape[a + 1];
        }
        Ok(Lattice {
            bounds: bounds.to_vec(),
            shape: shape.to_vec(),
            step,
            origin,
            strides,
        })
    }

    /// Symmetric box `[-r, r]^dim` with `n` points per axis.
    pub fn symmetric(dim: usize, radius: f64, n: usize) -> Result<Self> {
        Lattice::new(&vec![[-radius, radius]; dim], &vec![n; dim])
    }

    /// Rebuilds derived fields after deserialization.
    pub(crate) fn rebuilt(self) -> Result<Self> {
        Lattice::new(&self.bounds, &self.shape)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bounds(&self) -> &[[f64; 2]] {
        &self.bounds
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn step(&self) -> &[f64] {
        &self.step
    }

    /// Largest cell width over all axes.
    pub fn max_step(&self) -> f64 {
        self.step.iter().cloned().fold(0.0, f64::max)
    }

    /// Per-axis half-width `max(|lo|, hi)`.
    pub fn radius(&self, axis: usize) -> f64 {
        let [lo, hi] = self.bounds[axis];
        lo.abs().max(hi)
    }

    #[inline]
    pub fn coord(&self, axis: usize, k: usize) -> f64 {
        (k as f64 - self.origin[axis] as f64) * self.step[axis]
    }

    /// Coordinate of the last node on `axis` (numerically the box end).
    pub fn hi(&self, axis: usize) -> f64 {
        self.coord(axis, self.shape[axis] - 1)
    }

    pub fn lo(&self, axis: usize) -> f64 {
        self.coord(axis, 0)
    }

    pub fn origin_flat(&self) -> usize {
        self.ravel(&self.origin)
    }

    pub fn origin_index(&self) -> &[usize] {
        &self.origin
    }

    #[inline]
    pub fn ravel(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    #[inline]
    pub fn unravel(&self, mut flat: usize) -> [usize; MAX_DIM] {
        let mut out = [0; MAX_DIM];
        for a in 0..self.dim() {
            out[a] = flat / self.strides[a];
            flat %= self.strides[a];
        }
        out
    }

    /// Coordinates of a node, padded with zeros past `dim`.
    #[inline]
    pub fn point(&self, flat: usize) -> [f64; MAX_DIM] {
        let idx = self.unravel(flat);
        let mut p = [0.0; MAX_DIM];
        for a in 0..self.dim() {
            p[a] = self.coord(a, idx[a]);
        }
        p
    }

    pub fn point_vec(&self, flat: usize) -> Vec<f64> {
        self.point(flat)[..self.dim()].to_vec()
    }

    pub fn is_boundary(&self, flat: usize) -> bool {
        let idx = self.unravel(flat);
        (0..self.dim()).any(|a| idx[a] == 0 || idx[a] + 1 == self.shape[a])
    }

    /// Whether `x` lies in the box, with a relative slack of `1e-12` cells.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && (0..self.dim()).all(|a| {
                let slack = 1e-12 * self.step[a];
                x[a] >= self.lo(a) - slack && x[a] <= self.hi(a) + slack
            })
    }

    /// Nearest node to `x` (clamped into the box).
    pub fn nearest(&self, x: &[f64]) -> usize {
        let mut idx = [0usize; MAX_DIM];
        for a in 0..self.dim() {
            let k = (x[a] / self.step[a]).round() + self.origin[a] as f64;
            idx[a] = k.clamp(0.0, (self.shape[a] - 1) as f64) as usize;
        }
        self.ravel(&idx[..self.dim()])
    }

    /// Cell containing `x` along `axis`: lower node index and fractional offset.
    pub(crate) fn locate(&self, axis: usize, x: f64) -> (usize, f64) {
        let s = x / self.step[axis] + self.origin[axis] as f64;
        let last = self.shape[axis] - 1;
        let k = s.floor().clamp(0.0, (last - 1) as f64) as usize;
        let frac = (s - k as f64).clamp(0.0, 1.0);
        (k, frac)
    }

    /// Reciprocal dual lattice `[-N/(2R), N/(2R)]` per axis with the same shape.
    pub fn reciprocal(&self) -> Lattice {
        let bounds: Vec<[f64; 2]> = (0..self.dim())
            .map(|a| {
                let y = self.shape[a] as f64 / (2.0 * self.radius(a));
                [-y, y]
            })
            .collect();
        Lattice::new(&bounds, &self.shape).expect("reciprocal lattice is symmetric and odd")
    }

    pub fn same_nodes(&self, other: &Lattice) -> bool {
        self.shape == other.shape
            && self.bounds.iter().zip(&other.bounds).all(|(a, b)| {
                (a[0] - b[0]).abs() <= 1e-12 * (1.0 + a[0].abs())
                    && (a[1] - b[1]).abs() <= 1e-12 * (1.0 + a[1].abs())
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_exact_node() {
        let l = Lattice::new(&[[-1.0, 3.0]], &[9]).unwrap();
        assert_eq!(l.coord(0, l.origin_index()[0]), 0.0);
        assert_eq!(l.coord(0, 0), -1.0);
        assert!((l.hi(0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_even_shape_and_missing_origin() {
        assert!(matches!(
            Lattice::new(&[[-1.0, 1.0]], &[4]),
            Err(Error::InvalidShape(_))
        ));
        assert!(matches!(
            Lattice::new(&[[0.5, 1.0]], &[5]),
            Err(Error::BoxExcludesOrigin(_))
        ));
        assert!(matches!(
            Lattice::new(&[[-1.0, 2.0]], &[5]),
            Err(Error::BoxExcludesOrigin(_))
        ));
    }

    #[test]
    fn flat_order_is_lexicographic() {
        let l = Lattice::symmetric(2, 1.0, 3).unwrap();
        assert_eq!(l.unravel(5)[..2], [1, 2]);
        assert_eq!(l.ravel(&[2, 0]), 6);
        assert_eq!(l.point(0)[..2], [-1.0, -1.0]);
        assert_eq!(l.point(l.origin_flat())[..2], [0.0, 0.0]);
        assert!(l.is_boundary(0) && !l.is_boundary(4));
    }
}
