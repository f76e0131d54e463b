//! Time-indexed families of grid functions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::funcspace::GridFunction;

/// Which construction produced a path, with short labels for its inputs.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Hj { f: String, g: String },
    MaDirichlet { u0: String, u1: String, t_end: f64 },
    MaCauchy { u0: String, du0: String, t_est: f64 },
    Custom { label: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameDiagnostics {
    /// Fraction of frame nodes whose defining sup was attained on the dual box boundary.
    pub boundary_fraction: f64,
    pub midpoint_convex: bool,
}

impl FrameDiagnostics {
    pub fn of(frame: &GridFunction, boundary_fraction: f64) -> Self {
        FrameDiagnostics {
            boundary_fraction,
            midpoint_convex: frame.is_midpoint_convex(frame.tol_convex()),
        }
    }
}

/// Frames `u(t, ·)` at increasing times on a shared lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct TimePath {
    times: Vec<f64>,
    frames: Vec<GridFunction>,
    pub provenance: Provenance,
    pub diagnostics: Vec<FrameDiagnostics>,
    /// Advisory-check messages collected while building the path.
    pub advisories: Vec<String>,
}

impl TimePath {
    pub fn new(times: Vec<f64>, frames: Vec<GridFunction>, provenance: Provenance) -> Result<Self> {
        if times.len() != frames.len() {
            return Err(Error::DimensionMismatch {
                expected: times.len(),
                got: frames.len(),
            });
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::InvalidShape(
                "times must be nonnegative and strictly increasing".into(),
            ));
        }
        if let Some(first) = frames.first() {
            if frames
                .iter()
                .any(|f| !f.lattice().same_nodes(first.lattice()))
            {
                return Err(Error::InvalidShape(
                    "frames live on different lattices".into(),
                ));
            }
        }
        let diagnostics = frames
            .iter()
            .map(|f| FrameDiagnostics::of(f, 0.0))
            .collect();
        Ok(TimePath {
            times,
            frames,
            provenance,
            diagnostics,
            advisories: Vec::new(),
        })
    }

    pub(crate) fn with_boundary_fractions(mut self, fractions: &[f64]) -> Self {
        for (d, f) in self.diagnostics.iter_mut().zip(fractions) {
            d.boundary_fraction = *f;
        }
        self
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[GridFunction] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn frame(&self, index: usize) -> Result<&GridFunction> {
        self.frames.get(index).ok_or(Error::FrameOutOfRange {
            index,
            len: self.len(),
        })
    }

    /// Index of the frame at time `t` (within `1e-9` relative).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|s| (s - t).abs() <= 1e-9 * (1.0 + t.abs()))
            .ok_or(Error::FrameOutOfRange {
                index: usize::MAX,
                len: self.len(),
            })
    }

    /// Index of an interior frame at time `t`, with neighbours on both sides.
    pub fn interior_index_of(&self, t: f64) -> Result<usize> {
        let k = self.index_of(t)?;
        if k == 0 || k + 1 >= self.len() {
            return Err(Error::FrameOutOfRange {
                index: k,
                len: self.len(),
            });
        }
        Ok(k)
    }
}
