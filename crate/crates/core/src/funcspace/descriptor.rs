//! JSON interchange form of [`ConvexFunction`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::funcspace::analytic::AnalyticConvexFunction;
use crate::funcspace::grid::{ArgmaxMap, GridFunction};
use crate::funcspace::ConvexFunction;
use crate::lattice::Lattice;

pub const DEFAULT_INF_TOKEN: &str = "inf";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FunctionDescriptor {
    Analytic { expr: AnalyticConvexFunction },
    Grid(GridDescriptor),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValue {
    Num(f64),
    Token(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDescriptor {
    pub dim: usize,
    #[serde(rename = "box")]
    pub bounds: Vec<[f64; 2]>,
    pub shape: Vec<usize>,
    pub values: Vec<GridValue>,
    #[serde(default = "default_inf")]
    pub inf: String,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub convexified: bool,
    /// Flat indices into `argmax_source`, `-1` where no maximizer exists.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax: Option<Vec<i64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub argmax_source: Option<Lattice>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary_fraction: Option<f64>,
}

fn default_inf() -> String {
    DEFAULT_INF_TOKEN.to_string()
}

impl FunctionDescriptor {
    pub fn from_function(f: &ConvexFunction) -> Self {
        match f {
            ConvexFunction::Analytic(a) => FunctionDescriptor::Analytic { expr: a.clone() },
            ConvexFunction::Grid(g) => FunctionDescriptor::from_grid(g),
        }
    }

    pub fn from_grid(g: &GridFunction) -> Self {
        let lat = g.lattice();
        let values = g
            .values()
            .iter()
            .map(|v| match v.finite() {
                Some(x) => GridValue::Num(x),
                None => GridValue::Token(DEFAULT_INF_TOKEN.into()),
            })
            .collect();
        let (argmax, argmax_source) = match g.argmax_map() {
            Some(m) => (
                Some(m.nodes.iter().map(|k| k.map_or(-1, |k| k as i64)).collect()),
                Some(m.source.clone()),
            ),
            None => (None, None),
        };
        FunctionDescriptor::Grid(GridDescriptor {
            dim: lat.dim(),
            bounds: lat.bounds().to_vec(),
            shape: lat.shape().to_vec(),
            values,
            inf: DEFAULT_INF_TOKEN.into(),
            convexified: g.is_convexified(),
            argmax,
            argmax_source,
            boundary_fraction: None,
        })
    }

    pub fn with_boundary_fraction(mut self, fraction: f64) -> Self {
        if let FunctionDescriptor::Grid(g) = &mut self {
            g.boundary_fraction = Some(fraction);
        }
        self
    }

    pub fn to_function(&self) -> Result<ConvexFunction> {
        match self {
            FunctionDescriptor::Analytic { expr } => {
                expr.validate()?;
                Ok(ConvexFunction::Analytic(expr.clone()))
            }
            FunctionDescriptor::Grid(g) => Ok(ConvexFunction::Grid(g.to_grid()?)),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

impl GridDescriptor {
    pub fn to_grid(&self) -> Result<GridFunction> {
        if self.bounds.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: self.bounds.len(),
            });
        }
        let lattice = Lattice::new(&self.bounds, &self.shape)?;
        let values = self
            .values
            .iter()
            .map(|v| match v {
                GridValue::Num(x) => ExtReal::try_new(*x)
                    .ok_or_else(|| Error::Descriptor(format!("invalid grid value {x}"))),
                GridValue::Token(t) if *t == self.inf => Ok(ExtReal::INFINITY),
                GridValue::Token(t) => Err(Error::Descriptor(format!("unknown value token {t:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        let mut g = GridFunction::new(lattice, values)?.with_convexified(self.convexified);
        if let Some(idx) = &self.argmax {
            let source = self
                .argmax_source
                .clone()
                .ok_or_else(|| Error::Descriptor("argmax given without argmax_source".into()))?
                .rebuilt()?;
            if idx.len() != g.lattice().len() {
                return Err(Error::Descriptor(
                    "argmax length differs from the value count".into(),
                ));
            }
            let nodes = idx
                .iter()
                .map(|&k| match k {
                    -1 => Ok(None),
                    k if k >= 0 && (k as usize) < source.len() => Ok(Some(k as usize)),
                    k => Err(Error::Descriptor(format!("argmax index {k} out of range"))),
                })
                .collect::<Result<Vec<_>>>()?;
            g = g.with_argmax(Some(ArgmaxMap { source, nodes }));
        }
        Ok(g)
    }
}
