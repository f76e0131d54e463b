//! Convex hulls used by the F-map route of the J transform and by polytope polarity.

use std::collections::HashSet;

use crate::error::{Error, Result};

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Lower convex hull of `(s, τ)` points, as a piecewise-linear function of `s`.
#[derive(Debug, Clone)]
pub(crate) struct LowerHull1d {
    vertices: Vec<[f64; 2]>,
}

impl LowerHull1d {
    pub fn new(mut pts: Vec<[f64; 2]>) -> Result<Self> {
        pts.retain(|p| p[0].is_finite() && p[1].is_finite());
        if pts.is_empty() {
            return Err(Error::DegenerateEpigraph("no finite points".into()));
        }
        pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        let mut hull: Vec<[f64; 2]> = Vec::with_capacity(pts.len());
        for p in pts {
            if let Some(last) = hull.last() {
                if last[0] == p[0] {
                    continue;
                }
            }
            while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        Ok(LowerHull1d { vertices: hull })
    }

    /// Hull value at `s`; `+∞` outside the abscissa range of the cloud.
    pub fn eval(&self, s: f64) -> f64 {
        let v = &self.vertices;
        let (first, last) = (v[0][0], v[v.len() - 1][0]);
        if s < first - 1e-12 * (1.0 + first.abs()) || s > last + 1e-12 * (1.0 + last.abs()) {
            return f64::INFINITY;
        }
        let k = v.partition_point(|p| p[0] < s);
        if k == 0 {
            return v[0][1];
        }
        if k == v.len() {
            return v[v.len() - 1][1];
        }
        let (a, b) = (v[k - 1], v[k]);
        let w = (s - a[0]) / (b[0] - a[0]);
        a[1] + w * (b[1] - a[1])
    }
}

/// Counter-clockwise convex hull of planar points (collinear points dropped).
pub(crate) fn convex_hull_2d(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Whether `p` lies in the counter-clockwise polygon `poly` up to `tol`.
pub(crate) fn polygon_contains(poly: &[[f64; 2]], p: [f64; 2], tol: f64) -> bool {
    if poly.len() < 3 {
        return false;
    }
    (0..poly.len()).all(|i| {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        cross(a, b, p) >= -tol * len
    })
}

#[derive(Debug, Clone)]
struct Face {
    v: [usize; 3],
    n: [f64; 3],
    d: f64,
    alive: bool,
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm3(a: [f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

/// Outward facet planes `⟨n, p⟩ = d` (unit `n`) of the 3D convex hull.
///
/// Points are expected to be scaled to roughly unit size; visibility uses an
/// absolute tolerance, so nearly coplanar points are absorbed.
pub(crate) fn convex_hull_3d(pts: &[[f64; 3]]) -> Result<Vec<([f64; 3], f64)>> {
    const TOL: f64 = 1e-10;
    let degenerate = || Error::DegenerateEpigraph("point cloud is flat".into());
    if pts.len() < 4 {
        return Err(degenerate());
    }
    // Initial tetrahedron from extreme points.
    let i0 = (0..pts.len())
        .min_by(|&a, &b| pts[a][0].total_cmp(&pts[b][0]))
        .unwrap();
    let i1 = (0..pts.len())
        .max_by(|&a, &b| norm3(sub(pts[a], pts[i0])).total_cmp(&norm3(sub(pts[b], pts[i0]))))
        .unwrap();
    let axis = sub(pts[i1], pts[i0]);
    if norm3(axis) < TOL {
        return Err(degenerate());
    }
    let i2 = (0..pts.len())
        .max_by(|&a, &b| {
            norm3(cross3(axis, sub(pts[a], pts[i0])))
                .total_cmp(&norm3(cross3(axis, sub(pts[b], pts[i0]))))
        })
        .unwrap();
    let nrm = cross3(axis, sub(pts[i2], pts[i0]));
    if norm3(nrm) < TOL {
        return Err(degenerate());
    }
    let i3 = (0..pts.len())
        .max_by(|&a, &b| {
            dot3(nrm, sub(pts[a], pts[i0]))
                .abs()
                .total_cmp(&dot3(nrm, sub(pts[b], pts[i0])).abs())
        })
        .unwrap();
    if dot3(nrm, sub(pts[i3], pts[i0])).abs() < TOL * norm3(nrm) {
        return Err(degenerate());
    }
    let tet = [i0, i1, i2, i3];
    let centroid = {
        let mut c = [0.0; 3];
        for &i in &tet {
            for a in 0..3 {
                c[a] += pts[i][a] / 4.0;
            }
        }
        c
    };
    let make = |a: usize, b: usize, c: usize| -> Option<Face> {
        let n = cross3(sub(pts[b], pts[a]), sub(pts[c], pts[a]));
        let len = norm3(n);
        if len == 0.0 {
            return None;
        }
        let n = [n[0] / len, n[1] / len, n[2] / len];
        Some(Face {
            v: [a, b, c],
            n,
            d: dot3(n, pts[a]),
            alive: true,
        })
    };
    let mut faces: Vec<Face> = Vec::new();
    for (a, b, c) in [(i0, i1, i2), (i0, i1, i3), (i0, i2, i3), (i1, i2, i3)] {
        let mut f = make(a, b, c).ok_or_else(degenerate)?;
        if dot3(f.n, centroid) - f.d > 0.0 {
            f = make(a, c, b).ok_or_else(degenerate)?;
        }
        faces.push(f);
    }
    let mut visible: Vec<usize> = Vec::new();
    let mut edges: HashSet<(usize, usize)> = HashSet::new();
    for (p, &pt) in pts.iter().enumerate() {
        if tet.contains(&p) {
            continue;
        }
        visible.clear();
        visible.extend(
            (0..faces.len()).filter(|&k| faces[k].alive && dot3(faces[k].n, pt) - faces[k].d > TOL),
        );
        if visible.is_empty() {
            continue;
        }
        edges.clear();
        for &k in &visible {
            let v = faces[k].v;
            for e in 0..3 {
                edges.insert((v[e], v[(e + 1) % 3]));
            }
            faces[k].alive = false;
        }
        let horizon: Vec<(usize, usize)> = edges
            .iter()
            .copied()
            .filter(|&(a, b)| !edges.contains(&(b, a)))
            .collect();
        for (a, b) in horizon {
            if let Some(f) = make(a, b, p) {
                faces.push(f);
            }
        }
        if faces.len() > 4 * faces.iter().filter(|f| f.alive).count() + 64 {
            faces.retain(|f| f.alive);
        }
    }
    Ok(faces
        .into_iter()
        .filter(|f| f.alive)
        .map(|f| (f.n, f.d))
        .collect())
}
