//! Exact discrete sup over lattice nodes with tile-level pruning.
//!
//! Input nodes are grouped into small rectangular tiles. Each tile carries a
//! coordinate bounding box and the extreme values of `f` on it, which bound the
//! objective over the whole tile. A tile is scanned only if its bound can reach
//! the current best, so the result is the exact lattice maximum with the
//! smallest-flat-index tie-break.

use crate::funcspace::GridFunction;
use crate::lattice::{Lattice, MAX_DIM};
use crate::tolerances::BOUND_SLACK;

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Objective {
    /// `⟨x,y⟩ − f(x)` over finite nodes.
    Legendre,
    /// `(⟨x,y⟩ − 1)/f(x)` over nodes with `eps < f(x) < ∞`.
    Polar,
}

#[derive(Debug, Clone)]
struct Tile {
    start: usize,
    end: usize,
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
    /// Smallest `f` over the tile's nodes.
    fmin: f64,
}

/// A block of neighbouring tiles with the union of their bounds.
#[derive(Debug, Clone)]
struct Group {
    tiles: Vec<usize>,
    lo: [f64; MAX_DIM],
    hi: [f64; MAX_DIM],
    fmin: f64,
}

#[derive(Debug)]
struct Cloud {
    xs: Vec<[f64; MAX_DIM]>,
    /// `f` for the Legendre objective, `1/f` for the polar one.
    ws: Vec<f64>,
    flat: Vec<usize>,
    tiles: Vec<Tile>,
    groups: Vec<Group>,
}

impl Cloud {
    fn build(
        lattice: &Lattice,
        keep: impl Fn(usize) -> Option<f64>,
        weight: impl Fn(f64) -> f64,
    ) -> Cloud {
        let n = lattice.dim();
        let side = match n {
            1 => 32,
            2 => 8,
            _ => 4,
        };
        let shape = lattice.shape();
        let mut counts = [1usize; MAX_DIM];
        for a in 0..n {
            counts[a] = shape[a].div_ceil(side);
        }
        let mut cloud = Cloud {
            xs: Vec::new(),
            ws: Vec::new(),
            flat: Vec::new(),
            tiles: Vec::new(),
            groups: Vec::new(),
        };
        let group_side = match n {
            1 => 32,
            2 => 8,
            _ => 4,
        };
        let mut group_of: std::collections::BTreeMap<[usize; MAX_DIM], usize> =
            std::collections::BTreeMap::new();
        for t0 in 0..counts[0] {
            for t1 in 0..counts[1] {
                for t2 in 0..counts[2] {
                    let tile_idx = [t0, t1, t2];
                    let start = cloud.xs.len();
                    let mut lo = [f64::INFINITY; MAX_DIM];
                    let mut hi = [f64::NEG_INFINITY; MAX_DIM];
                    let mut fmin = f64::INFINITY;
                    let mut range = [(0usize, 1usize); MAX_DIM];
                    for a in 0..n {
                        range[a] = (tile_idx[a] * side, ((tile_idx[a] + 1) * side).min(shape[a]));
                    }
                    for i0 in range[0].0..range[0].1 {
                        for i1 in range[1].0..range[1].1 {
                            for i2 in range[2].0..range[2].1 {
                                let idx = [i0, i1, i2];
                                let flat = lattice.ravel(&idx[..n]);
                                let Some(f) = keep(flat) else { continue };
                                let p = lattice.point(flat);
                                for a in 0..n {
                                    lo[a] = lo[a].min(p[a]);
                                    hi[a] = hi[a].max(p[a]);
                                }
                                fmin = fmin.min(f);
                                cloud.xs.push(p);
                                cloud.ws.push(weight(f));
                                cloud.flat.push(flat);
                            }
                        }
                    }
                    if cloud.xs.len() > start {
                        for a in n..MAX_DIM {
                            lo[a] = 0.0;
                            hi[a] = 0.0;
                        }
                        let key = [t0 / group_side, t1 / group_side, t2 / group_side];
                        let g = *group_of.entry(key).or_insert_with(|| {
                            cloud.groups.push(Group {
                                tiles: Vec::new(),
                                lo: [f64::INFINITY; MAX_DIM],
                                hi: [f64::NEG_INFINITY; MAX_DIM],
                                fmin: f64::INFINITY,
                            });
                            cloud.groups.len() - 1
                        });
                        let group = &mut cloud.groups[g];
                        group.tiles.push(cloud.tiles.len());
                        for a in 0..MAX_DIM {
                            group.lo[a] = group.lo[a].min(lo[a]);
                            group.hi[a] = group.hi[a].max(hi[a]);
                        }
                        group.fmin = group.fmin.min(fmin);
                        cloud.tiles.push(Tile {
                            start,
                            end: cloud.xs.len(),
                            lo,
                            hi,
                            fmin,
                        });
                    }
                }
            }
        }
        cloud
    }

    fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }
}

#[inline]
fn dot(x: &[f64; MAX_DIM], y: &[f64; MAX_DIM]) -> f64 {
    x[0] * y[0] + x[1] * y[1] + x[2] * y[2]
}

#[inline]
fn box_max_dot(lo: &[f64; MAX_DIM], hi: &[f64; MAX_DIM], y: &[f64; MAX_DIM]) -> f64 {
    (0..MAX_DIM).map(|a| (lo[a] * y[a]).max(hi[a] * y[a])).sum()
}

/// Raw sup results per output node.
#[derive(Debug, Clone)]
pub(crate) struct SupOutput {
    /// Sup value; `f64::INFINITY` where the zero-set constraint fails.
    pub values: Vec<f64>,
    pub argmax: Vec<Option<usize>>,
}

pub(crate) struct SupEngine<'a> {
    f: &'a GridFunction,
    objective: Objective,
    cloud: Cloud,
    /// Zero-set nodes (polar only).
    zeros: Cloud,
}

impl<'a> SupEngine<'a> {
    pub fn new(f: &'a GridFunction, objective: Objective) -> Self {
        let lat = f.lattice();
        let vals = f.values();
        let eps = f.eps_zero();
        let (cloud, zeros) = match objective {
            Objective::Legendre => (
                Cloud::build(lat, |k| vals[k].finite(), |v| v),
                Cloud::build(lat, |_| None, |v| v),
            ),
            Objective::Polar => (
                Cloud::build(lat, |k| vals[k].finite().filter(|v| *v > eps), |v| 1.0 / v),
                Cloud::build(lat, |k| vals[k].finite().filter(|v| *v <= eps), |v| v),
            ),
        };
        SupEngine {
            f,
            objective,
            cloud,
            zeros,
        }
    }

    /// Whether no node enters the objective.
    pub fn objective_is_empty(&self) -> bool {
        self.cloud.is_empty()
    }

    #[inline]
    fn value(&self, k: usize, y: &[f64; MAX_DIM]) -> f64 {
        let d = dot(&self.cloud.xs[k], y);
        match self.objective {
            Objective::Legendre => d - self.cloud.ws[k],
            Objective::Polar => (d - 1.0) * self.cloud.ws[k],
        }
    }

    /// Upper bound of the objective over nodes in the box `[lo, hi]` with `f ≥ fmin`.
    #[inline]
    fn bound(
        &self,
        lo: &[f64; MAX_DIM],
        hi: &[f64; MAX_DIM],
        fmin: f64,
        y: &[f64; MAX_DIM],
    ) -> f64 {
        let m = box_max_dot(lo, hi, y);
        let slack = BOUND_SLACK * (1.0 + m.abs() + fmin.abs());
        match self.objective {
            Objective::Legendre => m - fmin + slack,
            Objective::Polar => {
                let num = m - 1.0 + slack;
                if num <= 0.0 {
                    num
                } else {
                    num / fmin
                }
            }
        }
    }

    /// Whether some zero-set node `x` has `⟨x,y⟩ > 1`.
    fn violates_zero_set(&self, y: &[f64; MAX_DIM]) -> bool {
        let thresh = 1.0 + 1e-12;
        self.zeros.tiles.iter().any(|t| {
            box_max_dot(&t.lo, &t.hi, y) > thresh
                && (t.start..t.end).any(|k| dot(&self.zeros.xs[k], y) > thresh)
        })
    }

    fn sup_at(&self, y: &[f64; MAX_DIM], warm: Option<usize>) -> (f64, Option<usize>) {
        let (mut best, mut arg): (f64, Option<usize>) = match self.objective {
            Objective::Legendre => (f64::NEG_INFINITY, None),
            Objective::Polar => (0.0, None),
        };
        let mut best_flat = usize::MAX;
        if let Some(k) = warm {
            let v = self.value(k, y);
            if v > best {
                best = v;
                arg = Some(k);
                best_flat = self.cloud.flat[k];
            }
        }
        let polar = self.objective == Objective::Polar;
        for g in &self.cloud.groups {
            let b = self.bound(&g.lo, &g.hi, g.fmin, y);
            if b < best || (arg.is_none() && polar && b <= 0.0) {
                continue;
            }
            for &ti in &g.tiles {
                let t = &self.cloud.tiles[ti];
                let b = self.bound(&t.lo, &t.hi, t.fmin, y);
                if b < best || (arg.is_none() && polar && b <= 0.0) {
                    continue;
                }
                for k in t.start..t.end {
                    let v = self.value(k, y);
                    if v > best || (v == best && arg.is_some() && self.cloud.flat[k] < best_flat) {
                        if self.objective == Objective::Polar && v <= 0.0 {
                            continue;
                        }
                        best = v;
                        arg = Some(k);
                        best_flat = self.cloud.flat[k];
                    }
                }
            }
        }
        (best, arg)
    }

    /// Sup at every node of `dual`, in flat order.
    pub fn run(&self, dual: &Lattice) -> SupOutput {
        let n = dual.dim();
        debug_assert_eq!(n, self.f.dim());
        let mut values = Vec::with_capacity(dual.len());
        let mut argmax = Vec::with_capacity(dual.len());
        let mut warm = None;
        for j in 0..dual.len() {
            let y = dual.point(j);
            if self.objective == Objective::Polar && self.violates_zero_set(&y) {
                values.push(f64::INFINITY);
                argmax.push(None);
                continue;
            }
            let (v, a) = self.sup_at(&y, warm);
            if a.is_some() {
                warm = a;
            }
            values.push(v);
            argmax.push(a.map(|k| self.cloud.flat[k]));
        }
        SupOutput { values, argmax }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::extreal::ExtReal;
    use proptest::prelude::*;

    fn brute(f: &GridFunction, dual: &Lattice, objective: Objective) -> SupOutput {
        let lat = f.lattice();
        let eps = f.eps_zero();
        let n = lat.dim();
        let mut values = Vec::new();
        let mut argmax = Vec::new();
        for j in 0..dual.len() {
            let y = dual.point(j);
            let (mut best, mut arg) = match objective {
                Objective::Legendre => (f64::NEG_INFINITY, None),
                Objective::Polar => (0.0, None),
            };
            let mut blocked = false;
            for k in 0..lat.len() {
                let x = lat.point(k);
                let d: f64 = (0..n).map(|a| x[a] * y[a]).sum();
                let Some(fx) = f.value_at(k).finite() else {
                    continue;
                };
                let v = match objective {
                    Objective::Legendre => d - fx,
                    Objective::Polar if fx <= eps => {
                        if d > 1.0 + 1e-12 {
                            blocked = true;
                        }
                        continue;
                    }
                    Objective::Polar => (d - 1.0) / fx,
                };
                if v > best {
                    best = v;
                    arg = Some(k);
                }
            }
            if blocked {
                values.push(f64::INFINITY);
                argmax.push(None);
            } else {
                values.push(best);
                argmax.push(arg);
            }
        }
        SupOutput { values, argmax }
    }

    fn random_grid(dim: usize, n: usize, seed: &[f64]) -> GridFunction {
        let lat = Lattice::symmetric(dim, 2.0, n).unwrap();
        let mut i = 0;
        GridFunction::tabulate(&lat, |x| {
            i += 1;
            let r: f64 = x.iter().map(|v| v * v).sum();
            let s = seed[i % seed.len()];
            if r == 0.0 {
                ExtReal::ZERO
            } else if s > 0.9 {
                ExtReal::INFINITY
            } else if r < 0.3 && s < 0.2 {
                ExtReal::ZERO
            } else {
                ExtReal::new(r * (1.0 + s) + 0.1 * s)
            }
        })
        .unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn pruned_sup_equals_brute_force(
            seed in proptest::collection::vec(0.0f64..1.0, 7..40),
            dim in 1usize..=2,
            polar in any::<bool>(),
        ) {
            let n = if dim == 1 { 71 } else { 19 };
            let f = random_grid(dim, n, &seed);
            let dual = Lattice::symmetric(dim, 3.0, if dim == 1 { 41 } else { 15 }).unwrap();
            let obj = if polar { Objective::Polar } else { Objective::Legendre };
            let fast = SupEngine::new(&f, obj).run(&dual);
            let slow = brute(&f, &dual, obj);
            for j in 0..dual.len() {
                let (a, b) = (fast.values[j], slow.values[j]);
                prop_assert!(a == b || (a - b).abs() <= 1e-12 * (1.0 + b.abs()), "node {j}: {a} vs {b}");
                if a.is_finite() && slow.argmax[j].is_some() {
                    prop_assert_eq!(fast.argmax[j], slow.argmax[j]);
                }
            }
        }
    }
}
