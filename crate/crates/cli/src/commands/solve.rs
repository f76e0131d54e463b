use std::path::{Path, PathBuf};

use polarity::pde::{
    hj_residual, solve_ma_cauchy_partial, solve_ma_dirichlet, solve_ma_dirichlet_ginf,
    solve_polar_hj, AdvisoryPolicy, FrameDiagnostics, Provenance, SolveOptions, TimePath,
};
use polarity::verify::involution_dual;
use polarity::{FunctionDescriptor, Lattice};
use serde::Serialize;

use crate::args::{CauchyArgs, Format, HjArgs, InterpolateArgs, InterpolateRoute};
use crate::config::Settings;
use crate::error::{CliError, Result};
use crate::io;

pub const MANIFEST_SCHEMA: u32 = 1;
/// Bound on the HJ residual rows written by `--check`.
pub const HJ_RESIDUAL_TOL: f64 = 5e-2;

#[derive(Serialize)]
struct Manifest<'a> {
    schema: u32,
    verb: &'a str,
    times: &'a [f64],
    frames: Vec<String>,
    provenance: &'a Provenance,
    diagnostics: &'a [FrameDiagnostics],
    advisories: &'a [String],
    dual: &'a Lattice,
    #[serde(skip_serializing_if = "Option::is_none")]
    t_est: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    refused: Option<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    csv: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residuals: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    created_unix: Option<u64>,
}

struct Extras<'a> {
    t_est: Option<f64>,
    refused: Option<&'a [f64]>,
    residuals_csv: Option<String>,
}

fn options(settings: &Settings, dual: Lattice) -> SolveOptions {
    let policy = if settings.strict {
        AdvisoryPolicy::Fail
    } else {
        AdvisoryPolicy::Warn
    };
    SolveOptions::new(dual).with_policy(policy)
}

fn gate(settings: &Settings, path: &TimePath) -> Result<()> {
    let fraction = path
        .diagnostics
        .iter()
        .map(|d| d.boundary_fraction)
        .fold(0.0, f64::max);
    if settings.strict && fraction > 0.0 {
        return Err(polarity::Error::Truncation { fraction }.into());
    }
    for a in &path.advisories {
        log::warn!("{a}");
    }
    Ok(())
}

fn out_dir(out: &Option<PathBuf>, verb: &str) -> PathBuf {
    out.clone()
        .unwrap_or_else(|| PathBuf::from(format!("polarity-{verb}")))
}

/// Frames, then the optional CSVs, then the manifest.
fn write_path(
    dir: &Path,
    verb: &str,
    path: &TimePath,
    dual: &Lattice,
    extras: Extras,
    settings: &Settings,
) -> Result<()> {
    io::create_dir(dir)?;
    let mut names = Vec::with_capacity(path.len());
    for (k, frame) in path.frames().iter().enumerate() {
        let name = format!("frame_{k:04}.json");
        io::write_json(
            &dir.join(&name),
            &FunctionDescriptor::from_grid(&frame.clone().with_argmax(None)),
        )?;
        names.push(name);
    }
    let csv = if settings.format == Format::Csv {
        io::write_atomic(&dir.join("frames.csv"), io::frames_csv(path).as_bytes())?;
        Some("frames.csv")
    } else {
        None
    };
    let residuals = match &extras.residuals_csv {
        Some(text) => {
            io::write_atomic(&dir.join("residuals.csv"), text.as_bytes())?;
            Some("residuals.csv")
        }
        None => None,
    };
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        verb,
        times: path.times(),
        frames: names,
        provenance: &path.provenance,
        diagnostics: &path.diagnostics,
        advisories: &path.advisories,
        dual,
        t_est: extras.t_est,
        refused: extras.refused,
        csv,
        residuals,
        created_unix: (!settings.no_timestamp).then(io::now_unix),
    };
    io::write_json(&dir.join("manifest.json"), &manifest)?;
    println!("wrote {} frames to {}", path.len(), dir.display());
    Ok(())
}

fn label(p: &Path) -> String {
    p.display().to_string()
}

/// Points at `±{1/4, 3/8, 1/2}` of the box radius along each axis.
fn check_points(lattice: &Lattice) -> Vec<Vec<f64>> {
    let r = (0..lattice.dim())
        .map(|a| lattice.radius(a))
        .fold(f64::INFINITY, f64::min);
    let mut pts = Vec::new();
    for a in 0..lattice.dim() {
        for c in [-0.5, -0.375, -0.25, 0.25, 0.375, 0.5] {
            let mut x = vec![0.0; lattice.dim()];
            x[a] = c * r;
            pts.push(x);
        }
    }
    pts
}

pub fn hj(args: &HjArgs, settings: &Settings) -> Result<()> {
    let f = io::grid_on(&io::load_function(&args.f)?, None)?;
    let dual = super::dual_lattice(settings, involution_dual(f.lattice())?)?;
    let g = io::grid_on(&io::load_function(&args.g)?, Some(&dual))?;
    if g.dim() != f.dim() {
        return Err(CliError::Usage(format!(
            "f has dimension {} but g has {}",
            f.dim(),
            g.dim()
        )));
    }
    let mut sol = solve_polar_hj(&f, &g, &settings.times(), &options(settings, dual.clone()))?;
    sol.path.provenance = Provenance::Hj {
        f: label(&args.f),
        g: label(&args.g),
    };
    gate(settings, &sol.path)?;
    let mut failed = 0;
    let mut total = 0;
    let residuals_csv = if settings.check {
        let axes: Vec<String> = (0..f.dim()).map(|a| format!("x{a}")).collect();
        let mut text = format!("t,{},residual,tolerance,pass,note\n", axes.join(","));
        let n = sol.path.len();
        let mut frames: Vec<usize> = (1..=5)
            .map(|k| 1 + (k * (n - 2)) / 6)
            .filter(|&k| k + 1 < n)
            .collect();
        frames.dedup();
        for k in frames {
            let t = sol.path.times()[k];
            for x in check_points(f.lattice()) {
                let r = hj_residual(&sol, t, &x);
                let (value, note) = match &r {
                    Ok(v) => (*v, String::new()),
                    Err(e) => (f64::NAN, e.to_string()),
                };
                let pass = value <= HJ_RESIDUAL_TOL;
                total += 1;
                if !pass {
                    failed += 1;
                    eprintln!("FAIL hj residual at t={t} x={x:?}: {value:.3e} ({note})");
                }
                let xs: Vec<String> = x.iter().map(|c| io::csv_value(*c)).collect();
                text.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    io::csv_value(t),
                    xs.join(","),
                    io::csv_value(value),
                    io::csv_value(HJ_RESIDUAL_TOL),
                    pass,
                    io::csv_field(&note)
                ));
            }
        }
        Some(text)
    } else {
        None
    };
    let extras = Extras {
        t_est: None,
        refused: None,
        residuals_csv,
    };
    write_path(
        &out_dir(&args.out, "hj"),
        "hj",
        &sol.path,
        &dual,
        extras,
        settings,
    )?;
    if failed > 0 {
        return Err(CliError::Verification { failed, total });
    }
    Ok(())
}

pub fn interpolate(args: &InterpolateArgs, settings: &Settings) -> Result<()> {
    let f0 = io::load_function(&args.u0)?;
    let f1 = io::load_function(&args.u1)?;
    if f0.dim() != f1.dim() {
        return Err(CliError::Usage(format!(
            "u0 has dimension {} but u1 has {}",
            f0.dim(),
            f1.dim()
        )));
    }
    let (u0, u1) = match (f0.as_grid(), f1.as_grid()) {
        (None, Some(g1)) => (io::grid_on(&f0, Some(g1.lattice()))?, g1.clone()),
        _ => {
            let u0 = io::grid_on(&f0, None)?;
            let u1 = io::grid_on(&f1, Some(u0.lattice()))?;
            (u0, u1)
        }
    };
    let dual = super::dual_lattice(settings, involution_dual(u0.lattice())?)?;
    let opts = options(settings, dual.clone());
    let times = settings.times();
    let mut path = match args.route {
        InterpolateRoute::Dual => solve_ma_dirichlet(&u0, &u1, settings.t_end, &times, &opts)?,
        InterpolateRoute::Ginf => solve_ma_dirichlet_ginf(&u0, &u1, settings.t_end, &times, &opts)?,
    };
    path.provenance = Provenance::MaDirichlet {
        u0: label(&args.u0),
        u1: label(&args.u1),
        t_end: settings.t_end,
    };
    gate(settings, &path)?;
    let extras = Extras {
        t_est: None,
        refused: None,
        residuals_csv: None,
    };
    write_path(
        &out_dir(&args.out, "interpolate"),
        "interpolate",
        &path,
        &dual,
        extras,
        settings,
    )
}

/// Writes the admissible frames; refused times then exit with a numeric refusal.
pub fn cauchy(args: &CauchyArgs, settings: &Settings) -> Result<()> {
    let u0 = io::grid_on(&io::load_function(&args.u0)?, None)?;
    let du0 = io::velocity_on(&args.du0, u0.lattice())?;
    let dual = super::dual_lattice(settings, involution_dual(u0.lattice())?)?;
    let mut sol = solve_ma_cauchy_partial(
        &u0,
        &du0,
        &settings.times(),
        &options(settings, dual.clone()),
    )?;
    sol.path.provenance = Provenance::MaCauchy {
        u0: label(&args.u0),
        du0: label(&args.du0),
        t_est: sol.t_est,
    };
    gate(settings, &sol.path)?;
    let extras = Extras {
        t_est: Some(sol.t_est),
        refused: Some(&sol.refused),
        residuals_csv: None,
    };
    write_path(
        &out_dir(&args.out, "cauchy"),
        "cauchy",
        &sol.path,
        &dual,
        extras,
        settings,
    )?;
    match sol.refused.first() {
        Some(&time) => Err(polarity::Error::BeyondMaximalTime {
            time,
            t_est: sol.t_est,
        }
        .into()),
        None => Ok(()),
    }
}
