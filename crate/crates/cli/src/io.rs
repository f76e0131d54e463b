//! Descriptor loading, sampling of analytic inputs and atomic writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use polarity::funcspace::descriptor::GridValue;
use polarity::pde::TimePath;
use polarity::verify::default_lattice;
use polarity::{ConvexFunction, FunctionDescriptor, GridFunction, Lattice};
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn read_descriptor(path: &Path) -> Result<FunctionDescriptor> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    FunctionDescriptor::from_json(&text).map_err(|source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_function(path: &Path) -> Result<ConvexFunction> {
    read_descriptor(path)?
        .to_function()
        .map_err(|source| CliError::Parse {
            path: path.to_path_buf(),
            source,
        })
}

/// Grid inputs as they are; analytic ones sampled on `lattice`, or on the default lattice.
pub fn grid_on(f: &ConvexFunction, lattice: Option<&Lattice>) -> Result<GridFunction> {
    match f {
        ConvexFunction::Grid(g) => Ok(g.clone()),
        ConvexFunction::Analytic(a) => {
            let lat = match lattice {
                Some(l) => l.clone(),
                None => default_lattice(a.dim())?,
            };
            Ok(GridFunction::sample(a, &lat)?)
        }
    }
}

/// Signed samples of a velocity descriptor on the nodes of `lattice`.
///
/// A grid descriptor on the same nodes is read verbatim, so negative values survive.
pub fn velocity_on(path: &Path, lattice: &Lattice) -> Result<Vec<f64>> {
    let desc = read_descriptor(path)?;
    let parse_err = |source| CliError::Parse {
        path: path.to_path_buf(),
        source,
    };
    if let FunctionDescriptor::Grid(g) = &desc {
        let lat = Lattice::new(&g.bounds, &g.shape).map_err(parse_err)?;
        if lat.same_nodes(lattice) && g.values.len() == lat.len() {
            return g
                .values
                .iter()
                .map(|v| match v {
                    GridValue::Num(x) if x.is_finite() => Ok(*x),
                    _ => Err(CliError::Usage(format!(
                        "{}: velocity samples must be finite",
                        path.display()
                    ))),
                })
                .collect();
        }
    }
    let f = desc.to_function().map_err(parse_err)?;
    (0..lattice.len())
        .map(|k| {
            let v = f.evaluate(&lattice.point_vec(k))?.value();
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::Usage(format!(
                    "{}: velocity is infinite at a node of u0",
                    path.display()
                )))
            }
        })
        .collect()
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let err = |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(polarity::Error::from)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

pub fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

/// Shortest round-trip form, with exponents for very small or large magnitudes.
fn csv_num(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v:?}")
    }
}

/// Flat `t,x0,..,u` rows of every frame.
pub fn frames_csv(path: &TimePath) -> String {
    let mut out = String::new();
    let Some(first) = path.frames().first() else {
        return "t,u\n".into();
    };
    let lat = first.lattice();
    let axes: Vec<String> = (0..lat.dim()).map(|a| format!("x{a}")).collect();
    out.push_str(&format!("t,{},u\n", axes.join(",")));
    for (t, f) in path.times().iter().zip(path.frames()) {
        for k in 0..lat.len() {
            let x = lat.point_vec(k);
            let xs: Vec<String> = x.iter().map(|c| csv_num(*c)).collect();
            out.push_str(&format!(
                "{},{},{}\n",
                csv_num(*t),
                xs.join(","),
                csv_num(f.value_at(k).value())
            ));
        }
    }
    out
}

pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn csv_value(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        csv_num(v)
    }
}

/// Seconds since the Unix epoch.
pub fn now_unix() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}
