//! Sampled geometric convex functions on box lattices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::funcspace::analytic::AnalyticConvexFunction;
use crate::lattice::{Lattice, MAX_DIM};
use crate::tolerances;

/// Per-node maximizers of a transform, as flat indices into `source`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgmaxMap {
    pub source: Lattice,
    pub nodes: Vec<Option<usize>>,
}

impl ArgmaxMap {
    /// Coordinates of the maximizer recorded for output node `flat`.
    pub fn point(&self, flat: usize) -> Option<Vec<f64>> {
        self.nodes[flat].map(|k| self.source.point_vec(k))
    }
}

/// Values in `[0, +∞]` on the nodes of a [`Lattice`], multilinearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    lattice: Lattice,
    values: Vec<ExtReal>,
    convexified: bool,
    argmax: Option<ArgmaxMap>,
    max_finite: f64,
}

impl GridFunction {
    /// Wraps node values; the origin value must vanish (up to round-off).
    pub fn new(lattice: Lattice, mut values: Vec<ExtReal>) -> Result<Self> {
        if values.len() != lattice.len() {
            return Err(Error::DimensionMismatch {
                expected: lattice.len(),
                got: values.len(),
            });
        }
        let max_finite = values.iter().filter_map(|v| v.finite()).fold(0.0, f64::max);
        let o = lattice.origin_flat();
        if values[o].value() > tolerances::eps_zero(max_finite) {
            return Err(Error::InvalidFunction(format!(
                "value at the origin is {}, expected 0",
                values[o]
            )));
        }
        values[o] = ExtReal::ZERO;
        Ok(GridFunction {
            lattice,
            values,
            convexified: false,
            argmax: None,
            max_finite,
        })
    }

    /// Evaluates `f` at every node.
    pub fn sample(f: &AnalyticConvexFunction, lattice: &Lattice) -> Result<Self> {
        if f.dim() != lattice.dim() {
            return Err(Error::DimensionMismatch {
                expected: lattice.dim(),
                got: f.dim(),
            });
        }
        Self::tabulate(lattice, |x| f.evaluate(x))
    }

    pub fn tabulate(lattice: &Lattice, mut f: impl FnMut(&[f64]) -> ExtReal) -> Result<Self> {
        let n = lattice.dim();
        let values = (0..lattice.len())
            .map(|k| f(&lattice.point(k)[..n]))
            .collect();
        Self::new(lattice.clone(), values)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn values(&self) -> &[ExtReal] {
        &self.values
    }

    pub fn value_at(&self, flat: usize) -> ExtReal {
        self.values[flat]
    }

    pub fn is_convexified(&self) -> bool {
        self.convexified
    }

    pub fn with_convexified(mut self, flag: bool) -> Self {
        self.convexified = flag;
        self
    }

    pub fn argmax_map(&self) -> Option<&ArgmaxMap> {
        self.argmax.as_ref()
    }

    pub fn with_argmax(mut self, argmax: Option<ArgmaxMap>) -> Self {
        self.argmax = argmax;
        self
    }

    /// Largest finite node value (0 if none).
    pub fn max_finite(&self) -> f64 {
        self.max_finite
    }

    pub fn has_finite_nonzero(&self) -> bool {
        self.max_finite > 0.0
    }

    /// Zero-set threshold `max(1e-12, 1e-9 · max finite value)`.
    pub fn eps_zero(&self) -> f64 {
        tolerances::eps_zero(self.max_finite)
    }

    /// Nodewise `t · f` for `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidFunction(format!(
                "scale factor must be positive, got {t}"
            )));
        }
        Self::new(
            self.lattice.clone(),
            self.values.iter().map(|v| v.scale(t)).collect(),
        )
    }

    /// Nodewise extended-real sum on a shared lattice.
    pub fn add(&self, other: &GridFunction) -> Result<Self> {
        if !self.lattice.same_nodes(&other.lattice) {
            return Err(Error::InvalidShape(
                "grid functions live on different lattices".into(),
            ));
        }
        Self::new(
            self.lattice.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| *a + *b)
                .collect(),
        )
    }

    /// Multilinear interpolation; `+∞` if any contributing node is `+∞`.
    pub fn evaluate(&self, x: &[f64]) -> Result<ExtReal> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if !self.lattice.contains(x) {
            return Err(Error::OutOfBox { point: x.to_vec() });
        }
        Ok(self.interpolate(x))
    }

    pub(crate) fn interpolate(&self, x: &[f64]) -> ExtReal {
        let n = self.dim();
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for a in 0..n {
            let (k, mut t) = self.lattice.locate(a, x[a]);
            if t < 1e-9 {
                t = 0.0;
            } else if t > 1.0 - 1e-9 {
                t = 1.0;
            }
            base[a] = k;
            frac[a] = t;
        }
        let mut acc = 0.0;
        let mut idx = [0usize; MAX_DIM];
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            for a in 0..n {
                let hi = (corner >> a) & 1 == 1;
                w *= if hi { frac[a] } else { 1.0 - frac[a] };
                idx[a] = base[a] + hi as usize;
            }
            if w == 0.0 {
                continue;
            }
            let v = self.values[self.lattice.ravel(&idx[..n])];
            if v.is_infinite() {
                return ExtReal::INFINITY;
            }
            acc += w * v.value();
        }
        ExtReal::new(acc)
    }

    fn finite_at(&self, x: &[f64]) -> Result<f64> {
        self.evaluate(x)?
            .finite()
            .ok_or_else(|| Error::NotDifferentiable { point: x.to_vec() })
    }

    /// Typical slope `max finite value / max box radius`, the floor of the kink test scale.
    fn global_slope(&self) -> f64 {
        let r = (0..self.dim())
            .map(|a| self.lattice.radius(a))
            .fold(0.0, f64::max);
        self.max_finite / r
    }

    /// Central-difference gradient with step `max(1e-5, cell/2)`; one-sided at the box edge.
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let f0 = self.finite_at(x)?;
        let n = self.dim();
        let floor = self.global_slope();
        let mut g = vec![0.0; n];
        for a in 0..n {
            let cell = self.lattice.step()[a];
            let h = tolerances::H_GRAD_MIN.max(cell / 2.0);
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[a] += h;
            xm[a] -= h;
            let fp = if self.lattice.contains(&xp) {
                Some(self.finite_at(&xp)?)
            } else {
                None
            };
            let fm = if self.lattice.contains(&xm) {
                Some(self.finite_at(&xm)?)
            } else {
                None
            };
            g[a] = match (fp, fm) {
                (Some(fp), Some(fm)) => {
                    let sp = (fp - f0) / h;
                    let sm = (f0 - fm) / h;
                    let scale = sp.abs().max(sm.abs()).max(floor);
                    if (sp - sm).abs() > tolerances::KINK_FACTOR * scale * cell {
                        return Err(Error::NotDifferentiable { point: x.to_vec() });
                    }
                    (fp - fm) / (2.0 * h)
                }
                (Some(fp), None) => (fp - f0) / h,
                (None, Some(fm)) => (f0 - fm) / h,
                (None, None) => return Err(Error::OutOfBox { point: x.to_vec() }),
            };
        }
        Ok(g)
    }

    /// Second central differences at the nodes of the cell containing `x`,
    /// blended with the multilinear weights of `x`.
    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.dim();
        if x.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: x.len(),
            });
        }
        if !self.lattice.contains(x) {
            return Err(Error::OutOfBox { point: x.to_vec() });
        }
        let shape = self.lattice.shape();
        let mut base = [0usize; MAX_DIM];
        let mut frac = [0.0; MAX_DIM];
        for a in 0..n {
            let (k, mut t) = self.lattice.locate(a, x[a]);
            if t < 1e-9 {
                t = 0.0;
            } else if t > 1.0 - 1e-9 {
                t = 1.0;
            }
            base[a] = k;
            frac[a] = t;
        }
        let mut m = DMatrix::zeros(n, n);
        for corner in 0..(1usize << n) {
            let mut w = 1.0;
            let mut idx = [0usize; MAX_DIM];
            for a in 0..n {
                let hi = (corner >> a) & 1 == 1;
                w *= if hi { frac[a] } else { 1.0 - frac[a] };
                idx[a] = base[a] + hi as usize;
            }
            if w == 0.0 {
                continue;
            }
            if (0..n).any(|a| idx[a] == 0 || idx[a] + 1 >= shape[a]) {
                return Err(Error::OutOfBox { point: x.to_vec() });
            }
            m += self.nodal_hessian(&idx[..n], x)? * w;
        }
        Ok(m)
    }

    fn nodal_hessian(&self, idx: &[usize], x: &[f64]) -> Result<DMatrix<f64>> {
        let n = idx.len();
        let h = self.lattice.step();
        let at = |shift: &[(usize, isize)]| -> Result<f64> {
            let mut i = [0usize; MAX_DIM];
            i[..n].copy_from_slice(idx);
            for &(a, s) in shift {
                i[a] = (i[a] as isize + s) as usize;
            }
            self.values[self.lattice.ravel(&i[..n])]
                .finite()
                .ok_or_else(|| Error::NotDifferentiable { point: x.to_vec() })
        };
        let f0 = at(&[])?;
        let mut m = DMatrix::zeros(n, n);
        for a in 0..n {
            m[(a, a)] = (at(&[(a, 1)])? - 2.0 * f0 + at(&[(a, -1)])?) / (h[a] * h[a]);
            for b in 0..a {
                let v =
                    (at(&[(a, 1), (b, 1)])? - at(&[(a, 1), (b, -1)])? - at(&[(a, -1), (b, 1)])?
                        + at(&[(a, -1), (b, -1)])?)
                        / (4.0 * h[a] * h[b]);
                m[(a, b)] = v;
                m[(b, a)] = v;
            }
        }
        Ok(m)
    }

    /// Lattice directions used for the discrete convexity scan.
    fn scan_directions(&self) -> Vec<[isize; MAX_DIM]> {
        let n = self.dim();
        let span: isize = match n {
            1 => 1,
            2 => 2,
            _ => 1,
        };
        let mut dirs = Vec::new();
        let r = -span..=span;
        for a in r.clone() {
            for b in if n > 1 { r.clone() } else { 0..=0 } {
                for c in if n > 2 { r.clone() } else { 0..=0 } {
                    let d = [a, b, c];
                    let first = d.iter().copied().find(|v| *v != 0);
                    if first.is_none_or(|v| v < 0) {
                        continue;
                    }
                    let g = d.iter().fold(0, |g, v| gcd(g, v.unsigned_abs()));
                    if g == 1 {
                        dirs.push(d);
                    }
                }
            }
        }
        dirs
    }

    /// Largest violation of `f(i) ≤ (f(i−d) + f(i+d))/2` over collinear node triples.
    ///
    /// In 1D every triple is scanned; in 2D and 3D the offsets are all multiples
    /// of the primitive lattice directions with small components.
    pub fn midpoint_convexity_violation(&self) -> f64 {
        let n = self.dim();
        let shape = self.lattice.shape();
        let mut worst: f64 = 0.0;
        let dirs = self.scan_directions();
        for flat in 0..self.lattice.len() {
            let idx = self.lattice.unravel(flat);
            let mid = self.values[flat];
            for d in &dirs {
                let mut k = 1isize;
                loop {
                    let mut lo = [0usize; MAX_DIM];
                    let mut hi = [0usize; MAX_DIM];
                    let mut inside = true;
                    for a in 0..n {
                        let i = idx[a] as isize;
                        let l = i - k * d[a];
                        let h = i + k * d[a];
                        let top = shape[a] as isize;
                        if l < 0 || h < 0 || l >= top || h >= top {
                            inside = false;
                            break;
                        }
                        lo[a] = l as usize;
                        hi[a] = h as usize;
                    }
                    if !inside {
                        break;
                    }
                    let vl = self.values[self.lattice.ravel(&lo[..n])];
                    let vh = self.values[self.lattice.ravel(&hi[..n])];
                    if vl.is_finite() && vh.is_finite() {
                        let gap = if mid.is_infinite() {
                            f64::INFINITY
                        } else {
                            mid.value() - 0.5 * (vl.value() + vh.value())
                        };
                        worst = worst.max(gap);
                    }
                    k += 1;
                }
            }
        }
        worst
    }

    /// Default slack for [`GridFunction::is_midpoint_convex`].
    pub fn tol_convex(&self) -> f64 {
        tolerances::TOL_CONVEX_REL * self.max_finite.max(1.0)
    }

    pub fn is_midpoint_convex(&self, tol: f64) -> bool {
        self.midpoint_convexity_violation() <= tol
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
