use std::path::Path;
use std::time::Instant;

use polarity::funcspace::descriptor::GridDescriptor;
use polarity::ginfconv::ginf_direct_1d_grid;
use polarity::transforms::{
    dual_lattice as reciprocal_dual, j_transform, legendre, polar, polar_analytic,
};
use polarity::verify::involution_dual;
use polarity::{ConvexFunction, FunctionDescriptor, Lattice};
use serde::Serialize;

use crate::args::{GinfArgs, GinfRoute, Op, TransformArgs};
use crate::config::Settings;
use crate::error::{CliError, Result};
use crate::io;

#[derive(Serialize)]
struct Sidecar<'a> {
    op: &'a str,
    inputs: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dual: Option<Lattice>,
    /// Largest boundary-attainment share over the sups involved.
    #[serde(skip_serializing_if = "Option::is_none")]
    boundary_fraction: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    elapsed_ms: Option<u128>,
}

fn emit(
    out: Option<&Path>,
    desc: &FunctionDescriptor,
    mut sidecar: Sidecar,
    started: Instant,
    settings: &Settings,
) -> Result<()> {
    let body = io::to_json(desc)?;
    let Some(out) = out else {
        print!("{body}");
        return Ok(());
    };
    io::write_atomic(out, body.as_bytes())?;
    if !settings.no_timestamp {
        sidecar.elapsed_ms = Some(started.elapsed().as_millis());
    }
    io::write_json(&out.with_extension("diag.json"), &sidecar)
}

fn gate(settings: &Settings, fraction: f64) -> Result<()> {
    if settings.strict && fraction > 0.0 {
        return Err(polarity::Error::Truncation { fraction }.into());
    }
    Ok(())
}

fn grid_descriptor(g: &polarity::GridFunction, fraction: Option<f64>) -> FunctionDescriptor {
    match (FunctionDescriptor::from_grid(g), fraction) {
        (FunctionDescriptor::Grid(d), Some(f)) => FunctionDescriptor::Grid(GridDescriptor {
            boundary_fraction: Some(f),
            ..d
        }),
        (d, _) => d,
    }
}

pub fn transform(args: &TransformArgs, settings: &Settings) -> Result<()> {
    let started = Instant::now();
    let f = io::load_function(&args.input)?;
    let name = match args.op {
        Op::Legendre => "legendre",
        Op::Polar => "polar",
        Op::J => "j",
        Op::Envelope => "envelope",
    };
    let mut sidecar = Sidecar {
        op: name,
        inputs: vec![args.input.display().to_string()],
        dual: None,
        boundary_fraction: None,
        elapsed_ms: None,
    };
    if let (Op::Polar, ConvexFunction::Analytic(a)) = (args.op, &f) {
        if settings.dual_box.is_none() && settings.dual_shape.is_none() {
            match polar_analytic(a) {
                Ok(p) => {
                    let desc = FunctionDescriptor::Analytic { expr: p };
                    return emit(args.out.as_deref(), &desc, sidecar, started, settings);
                }
                Err(e) => log::info!("no closed-form polar ({e}); sampling"),
            }
        }
    }
    let g = io::grid_on(&f, None)?;
    let desc = match args.op {
        Op::Legendre | Op::Polar => {
            let dual = super::dual_lattice(settings, reciprocal_dual(g.lattice(), None, None)?)?;
            let r = if args.op == Op::Legendre {
                legendre(&g, &dual)?
            } else {
                polar(&g, &dual)?
            };
            gate(settings, r.boundary_attainment_fraction)?;
            sidecar.boundary_fraction = Some(r.boundary_attainment_fraction);
            sidecar.dual = Some(dual);
            grid_descriptor(&r.output, Some(r.boundary_attainment_fraction))
        }
        Op::J => {
            let out = super::dual_lattice(settings, g.lattice().clone())?;
            let j = j_transform(&g, &out)?;
            sidecar.dual = Some(out);
            grid_descriptor(&j, None)
        }
        Op::Envelope => {
            let dual = super::dual_lattice(settings, involution_dual(g.lattice())?)?;
            let p = polar(&g, &dual)?;
            let back = polar(&p.output, g.lattice())?;
            let fraction = p
                .boundary_attainment_fraction
                .max(back.boundary_attainment_fraction);
            gate(settings, fraction)?;
            sidecar.boundary_fraction = Some(fraction);
            sidecar.dual = Some(dual);
            grid_descriptor(&back.output.with_argmax(None), None)
        }
    };
    emit(args.out.as_deref(), &desc, sidecar, started, settings)
}

pub fn ginf(args: &GinfArgs, settings: &Settings) -> Result<()> {
    let started = Instant::now();
    let f = io::load_function(&args.f)?;
    let g0 = io::load_function(&args.g)?;
    if f.dim() != g0.dim() {
        return Err(CliError::Usage(format!(
            "f has dimension {} but g has {}",
            f.dim(),
            g0.dim()
        )));
    }
    let f = io::grid_on(&f, None)?;
    let g = io::grid_on(&g0, Some(f.lattice()))?;
    let mut sidecar = Sidecar {
        op: "ginf",
        inputs: vec![args.f.display().to_string(), args.g.display().to_string()],
        dual: None,
        boundary_fraction: None,
        elapsed_ms: None,
    };
    let output = match args.route {
        GinfRoute::Dual => {
            let dual = super::dual_lattice(settings, involution_dual(f.lattice())?)?;
            let pf = polar(&f, &dual)?;
            let pg = polar(&g, &dual)?;
            let fraction = pf
                .boundary_attainment_fraction
                .max(pg.boundary_attainment_fraction);
            gate(settings, fraction)?;
            sidecar.boundary_fraction = Some(fraction);
            sidecar.dual = Some(dual);
            polar(&pf.output.add(&pg.output)?, f.lattice())?.output
        }
        GinfRoute::Direct => {
            if f.dim() != 1 {
                return Err(CliError::Usage(
                    "the direct route is one-dimensional".into(),
                ));
            }
            ginf_direct_1d_grid(&f, &g, f.lattice())?.output
        }
    };
    let desc = grid_descriptor(&output.with_argmax(None), None);
    emit(args.out.as_deref(), &desc, sidecar, started, settings)
}
