mod info;
mod solve;
mod transform;
mod verify;

pub use info::info;
pub use solve::{cauchy, hj, interpolate};
pub use transform::{ginf, transform};
pub use verify::verify;

use polarity::Lattice;

use crate::config::Settings;
use crate::error::{CliError, Result};

/// The dual lattice with `--dual-box`/`--dual-shape` applied over `default`.
fn dual_lattice(settings: &Settings, default: Lattice) -> Result<Lattice> {
    let dim = default.dim();
    let bounds = settings.dual_bounds(dim)?;
    let shape = settings.dual_shape_for(dim)?;
    if bounds.is_none() && shape.is_none() {
        return Ok(default);
    }
    let b = bounds.unwrap_or_else(|| default.bounds().to_vec());
    let s = shape.unwrap_or_else(|| default.shape().to_vec());
    Lattice::new(&b, &s).map_err(|e| CliError::Usage(format!("dual lattice: {e}")))
}
