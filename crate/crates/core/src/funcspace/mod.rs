//! Function representations: the closed-form catalog and sampled grid functions.

pub mod analytic;
pub mod classify;
pub mod descriptor;
pub mod grid;

pub use analytic::{conjugate_exponent, p_norm, AffinePiece, AnalyticConvexFunction, HalfSpace};
pub use classify::{classify, ClassReport, SampleSpec};
pub use descriptor::FunctionDescriptor;
pub use grid::{ArgmaxMap, GridFunction};

use nalgebra::DMatrix;

use crate::error::Result;
use crate::extreal::ExtReal;

/// Either representation of a geometric convex function.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexFunction {
    Analytic(AnalyticConvexFunction),
    Grid(GridFunction),
}

impl ConvexFunction {
    pub fn dim(&self) -> usize {
        match self {
            ConvexFunction::Analytic(f) => f.dim(),
            ConvexFunction::Grid(g) => g.dim(),
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<ExtReal> {
        match self {
            ConvexFunction::Analytic(f) => Ok(f.evaluate(x)),
            ConvexFunction::Grid(g) => g.evaluate(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            ConvexFunction::Analytic(f) => f.gradient(x),
            ConvexFunction::Grid(g) => g.gradient(x),
        }
    }

    pub fn hessian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            ConvexFunction::Analytic(f) => f.hessian(x),
            ConvexFunction::Grid(g) => g.hessian(x),
        }
    }

    /// Values at or below this count as zero.
    pub fn eps_zero(&self) -> f64 {
        match self {
            ConvexFunction::Analytic(_) => crate::tolerances::EPS_ZERO_FLOOR,
            ConvexFunction::Grid(g) => g.eps_zero(),
        }
    }

    pub fn as_grid(&self) -> Option<&GridFunction> {
        match self {
            ConvexFunction::Grid(g) => Some(g),
            ConvexFunction::Analytic(_) => None,
        }
    }
}

impl From<AnalyticConvexFunction> for ConvexFunction {
    fn from(f: AnalyticConvexFunction) -> Self {
        ConvexFunction::Analytic(f)
    }
}

impl From<GridFunction> for ConvexFunction {
    fn from(g: GridFunction) -> Self {
        ConvexFunction::Grid(g)
    }
}

/// Serde adapter writing `+∞` as the string `"inf"`.
pub(crate) mod ext_f64 {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Str(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Str(s) => parse_token(&s).ok_or_else(|| {
                de::Error::custom(format!("expected a number or \"inf\", got {s:?}"))
            }),
        }
    }

    pub fn parse_token(s: &str) -> Option<f64> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
            other => other.parse().ok(),
        }
    }
}
