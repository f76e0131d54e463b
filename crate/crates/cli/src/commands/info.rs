use polarity::funcspace::{classify, ClassReport, SampleSpec};
use polarity::transforms::polar_analytic;
use polarity::{ConvexFunction, Lattice};
use serde::Serialize;

use crate::args::InfoArgs;
use crate::error::Result;
use crate::io;

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Summary {
    Analytic {
        dim: usize,
        closed_form_polar: bool,
        class: ClassReport,
    },
    Grid {
        dim: usize,
        lattice: Lattice,
        nodes: usize,
        finite_nodes: usize,
        max_finite: f64,
        convexified: bool,
        midpoint_convexity_violation: f64,
        class: ClassReport,
    },
}

pub fn info(args: &InfoArgs) -> Result<()> {
    let f = io::load_function(&args.input)?;
    let class = classify(&f, &SampleSpec::default());
    let summary = match &f {
        ConvexFunction::Analytic(a) => Summary::Analytic {
            dim: a.dim(),
            closed_form_polar: polar_analytic(a).is_ok(),
            class,
        },
        ConvexFunction::Grid(g) => Summary::Grid {
            dim: g.dim(),
            lattice: g.lattice().clone(),
            nodes: g.lattice().len(),
            finite_nodes: g.values().iter().filter(|v| v.is_finite()).count(),
            max_finite: g.max_finite(),
            convexified: g.is_convexified(),
            midpoint_convexity_violation: g.midpoint_convexity_violation(),
            class,
        },
    };
    print!("{}", io::to_json(&summary)?);
    Ok(())
}
