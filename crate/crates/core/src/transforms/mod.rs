//! Legendre, polarity and J transforms on grid functions, plus envelopes and set-level checks.

pub mod checks;
mod hull;
pub mod j;
pub mod polar_analytic;
mod sup;

pub use checks::{domain_duality_check, epigraph_polar_check, DomainDualityReport};
pub use j::{j_transform, j_transform_composition, j_transform_fmap};
pub use polar_analytic::polar_analytic;

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::funcspace::{ArgmaxMap, GridFunction};
use crate::lattice::Lattice;
use sup::{Objective, SupEngine};

/// Output of a sup-type transform together with its maximizers.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformResult {
    /// Transformed function; its argmax map refers to the input lattice.
    pub output: GridFunction,
    /// Share of output nodes whose maximizer lies on the input box boundary.
    pub boundary_attainment_fraction: f64,
}

impl TransformResult {
    fn from_sup(
        input: &GridFunction,
        dual: &Lattice,
        values: Vec<ExtReal>,
        argmax: Vec<Option<usize>>,
    ) -> Result<Self> {
        let src = input.lattice();
        let on_boundary = argmax
            .iter()
            .filter(|a| a.is_some_and(|k| src.is_boundary(k)))
            .count();
        let fraction = on_boundary as f64 / dual.len() as f64;
        let output = GridFunction::new(dual.clone(), values)?
            .with_convexified(true)
            .with_argmax(Some(ArgmaxMap {
                source: src.clone(),
                nodes: argmax,
            }));
        Ok(TransformResult {
            output,
            boundary_attainment_fraction: fraction,
        })
    }

    pub fn argmax(&self) -> &[Option<usize>] {
        &self
            .output
            .argmax_map()
            .expect("transform results carry an argmax map")
            .nodes
    }

    /// Boundary-attainment share restricted to output nodes selected by `keep`.
    pub fn boundary_fraction_where(&self, keep: impl Fn(&[f64]) -> bool) -> f64 {
        let map = self
            .output
            .argmax_map()
            .expect("transform results carry an argmax map");
        let lat = self.output.lattice();
        let mut total = 0usize;
        let mut hit = 0usize;
        for j in 0..lat.len() {
            if keep(&lat.point_vec(j)) {
                total += 1;
                if map.nodes[j].is_some_and(|k| map.source.is_boundary(k)) {
                    hit += 1;
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    }

    /// Strict-mode gate: any boundary attainment becomes a [`Error::Truncation`].
    pub fn check_truncation(&self) -> Result<()> {
        if self.boundary_attainment_fraction > 0.0 {
            Err(Error::Truncation {
                fraction: self.boundary_attainment_fraction,
            })
        } else {
            Ok(())
        }
    }
}

/// Dual lattice from optional overrides, defaulting to the reciprocal box with the input shape.
pub fn dual_lattice(
    input: &Lattice,
    bounds: Option<&[[f64; 2]]>,
    shape: Option<&[usize]>,
) -> Result<Lattice> {
    let default = input.reciprocal();
    let b = bounds.map_or_else(|| default.bounds().to_vec(), |b| b.to_vec());
    let s = shape.map_or_else(|| input.shape().to_vec(), |s| s.to_vec());
    if b.len() != input.dim() {
        return Err(Error::DimensionMismatch {
            expected: input.dim(),
            got: b.len(),
        });
    }
    Lattice::new(&b, &s)
}

fn check_dims(f: &GridFunction, dual: &Lattice) -> Result<()> {
    if f.dim() != dual.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            got: dual.dim(),
        });
    }
    Ok(())
}

/// Discrete Legendre transform `max_x ⟨x,y⟩ − f(x)` over finite lattice nodes.
pub fn legendre(f: &GridFunction, dual: &Lattice) -> Result<TransformResult> {
    check_dims(f, dual)?;
    let engine = SupEngine::new(f, Objective::Legendre);
    if engine.objective_is_empty() {
        return Err(Error::EmptyDomain);
    }
    let out = engine.run(dual);
    let values = out.values.into_iter().map(ExtReal::new).collect();
    TransformResult::from_sup(f, dual, values, out.argmax)
}

/// Discrete polarity transform.
///
/// `Pf(y) = max(0, max_x (⟨x,y⟩ − 1)/f(x))` over nodes with `eps_zero < f(x) < ∞`;
/// `y` is sent to `+∞` when `⟨x,y⟩ > 1` for a node of the zero set. A function
/// vanishing on the whole grid maps to the indicator of the origin.
pub fn polar(f: &GridFunction, dual: &Lattice) -> Result<TransformResult> {
    check_dims(f, dual)?;
    let eps = f.eps_zero();
    if f.values().iter().all(|v| v.is_finite() && v.value() <= eps) {
        let o = dual.origin_flat();
        let values = (0..dual.len())
            .map(|j| {
                if j == o {
                    ExtReal::ZERO
                } else {
                    ExtReal::INFINITY
                }
            })
            .collect();
        return TransformResult::from_sup(f, dual, values, vec![None; dual.len()]);
    }
    let engine = SupEngine::new(f, Objective::Polar);
    let out = engine.run(dual);
    let o = dual.origin_flat();
    let mut values: Vec<ExtReal> = out
        .values
        .into_iter()
        .map(|v| ExtReal::new(v.max(0.0)))
        .collect();
    let mut argmax = out.argmax;
    values[o] = ExtReal::ZERO;
    argmax[o] = None;
    TransformResult::from_sup(f, dual, values, argmax)
}

/// `P(P f)` on the lattice of `f`, via the intermediate `dual` lattice.
pub fn geometric_envelope_with(f: &GridFunction, dual: &Lattice) -> Result<GridFunction> {
    let pf = polar(f, dual)?;
    Ok(polar(&pf.output, f.lattice())?.output)
}

/// Greatest geometric convex minorant `P(P f)`, using the default dual lattice.
pub fn geometric_envelope(f: &GridFunction) -> Result<GridFunction> {
    geometric_envelope_with(f, &f.lattice().reciprocal())
}
