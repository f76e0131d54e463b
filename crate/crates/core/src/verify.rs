//! Named numerical checks: each row is a measured residual against a tolerance.
//!
//! [`run_builtin`] runs a fixed catalog of functions with known answers;
//! [`run_on_input`] runs the same families of checks on a caller's function.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::calculus::{
    hessian_of_polar, hessian_of_polar_grid, j_variation_residual,
    legendre_first_variation_residual, polar_first_variation_residual, polar_gradient,
    polar_gradient_of_sum, polar_subdifferential_1d, second_variation_residuals, Family,
    PolarGradientResult,
};
use crate::error::{Error, Result};
use crate::funcspace::{p_norm, AnalyticConvexFunction as F, ConvexFunction, GridFunction};
use crate::ginfconv::{ginf_direct_1d_grid, ginf_dual};
use crate::lattice::Lattice;
use crate::pde::{
    hj_residual, initial_velocity_residual, ma_residual, solve_ma_cauchy, solve_ma_cauchy_partial,
    solve_ma_dirichlet, solve_polar_hj, Provenance, SolveOptions, TimePath,
};
use crate::transforms::{
    geometric_envelope_with, j_transform_composition, j_transform_fmap, polar, polar_analytic,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Involution,
    Jdual,
    Hessian,
    Variation,
    Ginf,
    Pde,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Involution,
        Suite::Jdual,
        Suite::Hessian,
        Suite::Variation,
        Suite::Ginf,
        Suite::Pde,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Involution => "involution",
            Suite::Jdual => "jdual",
            Suite::Hessian => "hessian",
            Suite::Variation => "variation",
            Suite::Ginf => "ginf",
            Suite::Pde => "pde",
            Suite::All => "all",
        }
    }

    fn parts(self) -> Vec<Suite> {
        match self {
            Suite::All => Suite::EACH.to_vec(),
            s => vec![s],
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Unsupported(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost,
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRow {
    pub suite: Suite,
    pub check: String,
    /// `NaN` when the computation itself failed; see `note`.
    pub measured: f64,
    pub bound: Bound,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRow {
    pub fn new(
        suite: Suite,
        check: impl Into<String>,
        measured: Result<f64>,
        bound: Bound,
        tolerance: f64,
    ) -> Self {
        let (measured, note) = match measured {
            Ok(v) => (v, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        let pass = match bound {
            Bound::AtMost => measured <= tolerance,
            Bound::AtLeast => measured >= tolerance,
        };
        CheckRow {
            suite,
            check: check.into(),
            measured,
            bound,
            tolerance,
            pass,
            note,
        }
    }
}

impl fmt::Display for CheckRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.bound {
            Bound::AtMost => "<=",
            Bound::AtLeast => ">=",
        };
        write!(
            f,
            "{} {}/{}: {:.3e} {op} {:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.suite,
            self.check,
            self.measured,
            self.tolerance
        )?;
        if let Some(n) = &self.note {
            write!(f, " ({n})")?;
        }
        Ok(())
    }
}

struct Sink {
    suite: Suite,
    rows: Vec<CheckRow>,
}

impl Sink {
    fn new(suite: Suite) -> Self {
        Sink {
            suite,
            rows: Vec::new(),
        }
    }

    fn at_most(&mut self, check: impl Into<String>, measured: Result<f64>, tol: f64) {
        self.rows.push(CheckRow::new(
            self.suite,
            check,
            measured,
            Bound::AtMost,
            tol,
        ));
    }

    fn at_least(&mut self, check: impl Into<String>, measured: Result<f64>, tol: f64) {
        self.rows.push(CheckRow::new(
            self.suite,
            check,
            measured,
            Bound::AtLeast,
            tol,
        ));
    }
}

/// Runs the builtin catalog of `suite`.
pub fn run_builtin(suite: Suite) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    for s in suite.parts() {
        let mut sink = Sink::new(s);
        match s {
            Suite::Involution => builtin::involution(&mut sink),
            Suite::Jdual => builtin::jdual(&mut sink),
            Suite::Hessian => builtin::hessian(&mut sink),
            Suite::Variation => builtin::variation(&mut sink),
            Suite::Ginf => builtin::ginf(&mut sink),
            Suite::Pde => builtin::pde(&mut sink),
            Suite::All => unreachable!(),
        }
        rows.extend(sink.rows);
    }
    rows
}

/// Runs the checks of `suite` on `f`. Analytic inputs are sampled on [`default_lattice`],
/// or finer for the J, Hessian and variation checks.
pub fn run_on_input(suite: Suite, f: &ConvexFunction) -> Vec<CheckRow> {
    let mut rows = Vec::new();
    for s in suite.parts() {
        let mut sink = Sink::new(s);
        match s {
            Suite::Involution => input::involution(&mut sink, f),
            Suite::Jdual => input::jdual(&mut sink, f),
            Suite::Hessian => input::hessian(&mut sink, f),
            Suite::Variation => input::variation(&mut sink, f),
            Suite::Ginf => input::ginf(&mut sink, f),
            Suite::Pde => input::pde(&mut sink, f),
            Suite::All => unreachable!(),
        }
        rows.extend(sink.rows);
    }
    rows
}

/// Sampling lattice for analytic inputs: `[-3,3]` with 257 nodes in 1D,
/// `[-2,2]²` with 129² in 2D, `[-1,1]³` with 33³ in 3D.
pub fn default_lattice(dim: usize) -> Result<Lattice> {
    match dim {
        1 => Lattice::symmetric(1, 3.0, 257),
        2 => Lattice::symmetric(2, 2.0, 129),
        3 => Lattice::symmetric(3, 1.0, 33),
        d => Err(Error::InvalidShape(format!(
            "dimension {d} is not supported"
        ))),
    }
}

/// Intermediate lattice for `P(P f)`: radius `(16/R)·√((N−1)/64)` and `2(N−1)+1` nodes per axis.
pub fn involution_dual(lattice: &Lattice) -> Result<Lattice> {
    let (r, n) = box_size(lattice);
    let radius = 16.0 / r * ((n - 1) as f64 / 64.0).sqrt();
    Lattice::symmetric(lattice.dim(), radius, 2 * (n - 1) + 1)
}

/// `‖P(P f) − f‖_∞` over the central half of the box of `f`.
pub fn involution_error(f: &GridFunction) -> Result<f64> {
    let env = geometric_envelope_with(f, &involution_dual(f.lattice())?)?;
    Ok(central_gap(&env, f.lattice(), |k| f.value_at(k).value()))
}

fn box_size(lattice: &Lattice) -> (f64, usize) {
    let r = (0..lattice.dim())
        .map(|a| lattice.radius(a))
        .fold(0.0, f64::max);
    let n = lattice.shape().iter().copied().max().unwrap_or(1);
    (r, n)
}

fn in_central_half(lattice: &Lattice, x: &[f64]) -> bool {
    x.iter()
        .enumerate()
        .all(|(a, c)| c.abs() <= lattice.radius(a) / 2.0 + 1e-12)
}

/// Largest `|a − exact|` over central-half nodes of `lattice`; `+∞` if exactly one side is infinite.
fn central_gap(a: &GridFunction, lattice: &Lattice, exact: impl Fn(usize) -> f64) -> f64 {
    let mut worst = 0.0f64;
    for k in 0..lattice.len() {
        if !in_central_half(lattice, &lattice.point_vec(k)) {
            continue;
        }
        let (u, v) = (a.value_at(k).value(), exact(k));
        match (u.is_finite(), v.is_finite()) {
            (true, true) => worst = worst.max((u - v).abs()),
            (false, false) => {}
            _ => return f64::INFINITY,
        }
    }
    worst
}

/// Seeded points in `[-r, r]^dim` with Euclidean norm at least `min_norm`.
fn random_points(dim: usize, count: usize, r: f64, min_norm: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x: Vec<f64> = (0..dim).map(|_| rng.random_range(-r..=r)).collect();
        if p_norm(&x, 2.0) >= min_norm {
            out.push(x);
        }
    }
    out
}

fn max_of(values: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    let mut worst = 0.0f64;
    for v in values {
        let v = v?;
        if v.is_nan() {
            return Ok(f64::NAN);
        }
        worst = worst.max(v);
    }
    Ok(worst)
}

/// `e_coarse / e_fine`, infinite when the fine error vanishes.
fn ratio(coarse: f64, fine: f64) -> f64 {
    if fine > 0.0 {
        coarse / fine
    } else {
        f64::INFINITY
    }
}

fn times(t_end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
}

fn jdual_residuals(
    f: &GridFunction,
    xs: &[Vec<f64>],
    out: &Lattice,
    mid: &Lattice,
) -> Result<(f64, f64, f64)> {
    let a = j_transform_fmap(f, out)?;
    let b = j_transform_composition(f, mid, out)?;
    let (mut ra, mut rb, mut gap) = (0.0f64, 0.0f64, 0.0f64);
    for x in xs {
        let fx = f.evaluate(x)?.value();
        let s: Vec<f64> = x.iter().map(|c| c / fx).collect();
        let ja = a.evaluate(&s)?.value();
        let jb = b.evaluate(&s)?.value();
        ra = ra.max((fx * ja - 1.0).abs());
        rb = rb.max((fx * jb - 1.0).abs());
        gap = gap.max((ja - jb).abs());
    }
    Ok((ra, rb, gap))
}

fn grid_hessian_residual(f: &GridFunction, pf: &GridFunction, xs: &[Vec<f64>]) -> Result<f64> {
    max_of(
        xs.iter()
            .map(|x| Ok(hessian_of_polar_grid(f, pf, x)?.det_residual)),
    )
}

fn hj_max_residual(sol: &crate::pde::HjSolution, t: f64, xs: &[Vec<f64>]) -> Result<f64> {
    max_of(xs.iter().map(|x| hj_residual(sol, t, x)))
}

fn ma_max_residual(path: &TimePath, t: f64, xs: &[Vec<f64>]) -> Result<f64> {
    max_of(xs.iter().map(|x| ma_residual(path, t, x)))
}

fn scaling_path(f: &GridFunction, ts: &[f64]) -> Result<TimePath> {
    let frames = ts
        .iter()
        .map(|t| f.scaled(1.0 + t))
        .collect::<Result<Vec<_>>>()?;
    TimePath::new(
        ts.to_vec(),
        frames,
        Provenance::Custom {
            label: "scaling".into(),
        },
    )
}

fn variation_rows(sink: &mut Sink, prefix: &str, fam: &Family, ys: &[Vec<f64>], tol: f64) {
    let first_l = max_of(
        ys.iter()
            .map(|y| legendre_first_variation_residual(fam, 0.5, y)),
    );
    let first_p = max_of(
        ys.iter()
            .map(|y| polar_first_variation_residual(fam, 0.5, y)),
    );
    sink.at_most(format!("{prefix}.first_legendre"), first_l, tol);
    sink.at_most(format!("{prefix}.first_polar"), first_p, tol);
    let second: Result<Vec<_>> = ys
        .iter()
        .map(|y| second_variation_residuals(fam, 0.5, y))
        .collect();
    type Pick = fn(&crate::calculus::SecondVariation) -> f64;
    let forms: [(&str, Pick); 4] = [
        ("second_legendre", |r| r.legendre),
        ("second_polar", |r| r.polar),
        ("second_bordered", |r| r.matrix_form),
        ("second_symmetric", |r| r.symmetric_form),
    ];
    for (name, pick) in forms {
        let m = second
            .as_ref()
            .map_err(Clone::clone)
            .and_then(|rs| max_of(rs.iter().map(|r| Ok(pick(r)))));
        sink.at_most(format!("{prefix}.{name}"), m, tol);
    }
}

mod builtin {
    use super::*;

    pub(super) fn involution(sink: &mut Sink) {
        let cases = [
            ("x^2", F::squared_norm(1), 3.0, 257),
            ("l1_norm_squared", F::power(2, 1.0, 2.0, 1.0), 2.0, 129),
            (
                "quadratic_2d",
                F::quadratic(vec![vec![2.0, 0.5], vec![0.5, 1.0]]),
                2.0,
                129,
            ),
        ];
        for (name, f, r, n) in cases {
            let err = |n: usize| -> Result<f64> {
                let lat = Lattice::symmetric(f.dim(), r, n)?;
                involution_error(&GridFunction::sample(&f, &lat)?)
            };
            let coarse = err(n);
            let fine = err(2 * n - 1);
            let shrink = match (&coarse, &fine) {
                (Ok(c), Ok(f)) => Ok(ratio(*c, *f)),
                (Err(e), _) | (_, Err(e)) => Err(e.clone()),
            };
            sink.at_most(format!("{name}.error_n{n}"), coarse, 5e-2);
            sink.at_least(format!("{name}.refinement_ratio"), shrink, 1.5);
        }

        let grid = (|| -> Result<f64> {
            let lat = Lattice::symmetric(2, 128.0, 129)?;
            let dual = Lattice::symmetric(2, 2.0, 41)?;
            let pf = polar(&GridFunction::sample(&F::norm(2, 1.0), &lat)?, &dual)?.output;
            Ok((0..dual.len())
                .filter(|&j| !dual.is_boundary(j))
                .map(|j| (pf.value_at(j).value() - p_norm(&dual.point_vec(j), f64::INFINITY)).abs())
                .fold(0.0, f64::max))
        })();
        sink.at_most("l1_norm.polar_is_max_norm_grid", grid, 1e-2);
        let exact = polar_analytic(&F::norm(2, 1.0)).map(|pf| {
            if pf != F::norm(2, f64::INFINITY) {
                return f64::INFINITY;
            }
            random_points(2, 50, 3.0, 0.0, 7)
                .iter()
                .map(|y| (pf.evaluate(y).value() - p_norm(y, f64::INFINITY)).abs())
                .fold(0.0, f64::max)
        });
        sink.at_most("l1_norm.polar_is_max_norm_analytic", exact, 0.0);
    }

    pub(super) fn jdual(sink: &mut Sink) {
        let xs: Vec<Vec<f64>> = (0..20)
            .map(|k| {
                let m = 0.75 + 0.05 * (k / 2) as f64;
                vec![if k % 2 == 0 { m } else { -m }]
            })
            .collect();
        for p in [2.0, 3.0, 4.0] {
            let r = (|| {
                let lat = Lattice::symmetric(1, 3.0, 601)?;
                let f = GridFunction::sample(&F::power(1, 2.0, p, 1.0), &lat)?;
                jdual_residuals(
                    &f,
                    &xs,
                    &Lattice::symmetric(1, 3.0, 241)?,
                    &Lattice::symmetric(1, 12.0, 2401)?,
                )
            })();
            let pick = |i: usize| r.clone().map(|t| [t.0, t.1, t.2][i]);
            sink.at_most(format!("t^{p}.fmap_identity"), pick(0), 1e-3);
            sink.at_most(format!("t^{p}.composition_identity"), pick(1), 1e-3);
            sink.at_most(format!("t^{p}.route_gap"), pick(2), 2e-3);
        }
    }

    pub(super) fn hessian(sink: &mut Sink) {
        let quads = [
            ("quadratic_1d", F::quadratic(vec![vec![1.5]])),
            (
                "quadratic_2d",
                F::quadratic(vec![vec![2.0, 0.5], vec![0.5, 1.0]]),
            ),
        ];
        for (i, (name, f)) in quads.iter().enumerate() {
            let pts = random_points(f.dim(), 20, 2.0, 0.25, 11 + i as u64);
            let det = max_of(pts.iter().map(|x| Ok(hessian_of_polar(f, x)?.det_residual)));
            sink.at_most(format!("{name}.analytic_det"), det, 1e-8);
        }
        let grid_1d = (|| {
            let f = GridFunction::sample(&F::squared_norm(1), &Lattice::symmetric(1, 3.0, 2401)?)?;
            let pf = polar(&f, &Lattice::symmetric(1, 4.0, 21)?)?.output;
            let xs: Vec<Vec<f64>> = [0.8, 1.0, 1.5, -1.2].iter().map(|x| vec![*x]).collect();
            grid_hessian_residual(&f, &pf, &xs)
        })();
        sink.at_most("x^2.grid_det", grid_1d, 1e-3);
        let grid_2d = (|| {
            let f = GridFunction::sample(&quads[1].1, &Lattice::symmetric(2, 2.0, 769)?)?;
            let pf = polar(&f, &Lattice::symmetric(2, 4.0, 21)?)?.output;
            let xs = vec![
                vec![1.0, 0.0],
                vec![0.0, 1.0],
                vec![0.7, 0.7],
                vec![-0.8, 0.6],
                vec![0.5, -1.0],
            ];
            grid_hessian_residual(&f, &pf, &xs)
        })();
        sink.at_most("quadratic_2d.grid_det", grid_2d, 1e-3);

        let sq = ConvexFunction::Analytic(F::squared_norm(1));
        let at_one = polar_gradient(&sq, &[1.0]).and_then(|r| match r {
            PolarGradientResult::Point { y, polar_value } => {
                Ok((y[0] - 2.0).abs() + (polar_value - 1.0).abs())
            }
            other => Err(Error::Unsupported(format!("unexpected {other:?}"))),
        });
        sink.at_most("x^2.polar_gradient_at_1", at_one, 1e-12);
        let dual = Lattice::symmetric(1, 4.0, 81);
        let scan = dual.and_then(|dual| {
            let f = GridFunction::sample(&F::squared_norm(1), &Lattice::symmetric(1, 3.0, 601)?)?;
            let [lo, hi] = polar_subdifferential_1d(&f, 1.0, &dual)?
                .ok_or_else(|| Error::Unsupported("empty subdifferential scan".into()))?;
            Ok((lo - 2.0).abs().max((hi - 2.0).abs()))
        });
        sink.at_most("x^2.subdifferential_scan", scan, 0.1);
        let empty = polar_gradient(&ConvexFunction::Analytic(F::norm(1, 2.0)), &[1.0]).map(|r| {
            if matches!(r, PolarGradientResult::Empty { .. }) {
                0.0
            } else {
                1.0
            }
        });
        sink.at_most("norm.polar_gradient_empty", empty, 0.0);

        let f = ConvexFunction::Analytic(F::squared_norm(1));
        let g = ConvexFunction::Analytic(F::power(1, 2.0, 4.0, 1.0));
        let sum =
            ConvexFunction::Analytic(F::sum(vec![F::squared_norm(1), F::power(1, 2.0, 4.0, 1.0)]));
        let gap = max_of(random_points(1, 20, 2.0, 0.2, 23).iter().map(|x| {
            let a = polar_gradient_of_sum(&f, &g, x)?;
            let (b, _) = polar_gradient(&sum, x)?.into_point(x)?;
            Ok((a[0] - b[0]).abs())
        }));
        sink.at_most("x^2+x^4.gradient_of_sum", gap, 1e-6);
    }

    pub(super) fn variation(sink: &mut Sink) {
        let ys: Vec<Vec<f64>> = [0.7, 1.5, -2.0].iter().map(|y| vec![*y]).collect();
        let fam = Lattice::symmetric(1, 6.0, 241).map(|scan| {
            Family::analytic(|t| F::scaled(1.0 + t, F::squared_norm(1)), scan).with_richardson(true)
        });
        match fam {
            Ok(fam) => {
                variation_rows(sink, "scaling_analytic", &fam, &ys, 1e-3);
                let j = max_of(
                    [0.5, 1.0, -1.5]
                        .iter()
                        .map(|x| j_variation_residual(&fam, 0.5, &[*x])),
                );
                sink.at_most("scaling_analytic.j", j, 1e-3);
            }
            Err(e) => sink.at_most("scaling_analytic", Err(e), 1e-3),
        }
        let grid = (|| {
            let f = GridFunction::sample(&F::squared_norm(1), &Lattice::symmetric(1, 3.0, 601)?)?;
            let path = scaling_path(&f, &[0.4, 0.5, 0.6])?;
            Ok(Family::grid(path, Lattice::symmetric(1, 4.0, 161)?))
        })();
        let ys: Vec<Vec<f64>> = [1.0, 2.0].iter().map(|y| vec![*y]).collect();
        match grid {
            Ok(fam) => variation_rows(sink, "scaling_grid", &fam, &ys, 1e-2),
            Err(e) => sink.at_most("scaling_grid", Err(e), 1e-2),
        }
    }

    pub(super) fn ginf(sink: &mut Sink) {
        let sq = (|| {
            let f = GridFunction::sample(&F::squared_norm(1), &Lattice::symmetric(1, 3.0, 401)?)?;
            let dual = ginf_dual(&f, &f, &Lattice::symmetric(1, 12.0, 801)?)?.output;
            let direct = ginf_direct_1d_grid(&f, &f, f.lattice())?.output;
            let lat = f.lattice();
            let gap = central_gap(&dual, lat, |k| direct.value_at(k).value());
            let half = central_gap(&dual, lat, |k| lat.coord(0, k).powi(2) / 2.0);
            Ok((gap, half))
        })();
        sink.at_most("x^2.route_gap", sq.clone().map(|v: (f64, f64)| v.0), 1e-2);
        sink.at_most("x^2.self_halving", sq.map(|v| v.1), 1e-2);
        let l1 = (|| {
            let f = GridFunction::sample(&F::norm(1, 1.0), &Lattice::symmetric(1, 4.0, 161)?)?;
            let h = ginf_dual(&f, &f, &Lattice::symmetric(1, 2000.0, 4001)?)?.output;
            let lat = f.lattice();
            Ok(central_gap(&h, lat, |k| lat.coord(0, k).abs() / 2.0))
        })();
        sink.at_most("l1.self_halving", l1, 1e-3);
    }

    pub(super) fn pde(sink: &mut Sink) {
        hj(sink);
        dirichlet(sink);
        cauchy(sink);
    }

    fn hj_solve(n: usize, m: usize, nt: usize) -> Result<crate::pde::HjSolution> {
        let lat = Lattice::symmetric(1, 3.0, n)?;
        let dual = Lattice::symmetric(1, 12.0, m)?;
        let f = GridFunction::sample(&F::squared_norm(1), &lat)?;
        let g = GridFunction::sample(&F::scaled(0.5, F::squared_norm(1)), &dual)?;
        solve_polar_hj(&f, &g, &times(1.0, nt), &SolveOptions::new(dual))
    }

    fn hj(sink: &mut Sink) {
        match hj_solve(257, 1025, 101) {
            Ok(sol) => {
                for t in [0.25, 0.5, 1.0] {
                    let d = sol.path.index_of(t).map(|k| {
                        let fr = &sol.path.frames()[k];
                        let lat = fr.lattice();
                        central_gap(fr, lat, |j| lat.coord(0, j).powi(2) / (1.0 + 2.0 * t))
                    });
                    sink.at_most(format!("hj_quadratic.deviation_t{t}"), d, 2e-2);
                }
            }
            Err(e) => sink.at_most("hj_quadratic.deviation", Err(e), 2e-2),
        }
        let xs: Vec<Vec<f64>> = [0.5, 1.0, 1.5].iter().map(|x| vec![*x]).collect();
        let coarse = hj_solve(129, 513, 21).and_then(|s| hj_max_residual(&s, 0.5, &xs));
        let fine = hj_solve(257, 1025, 41).and_then(|s| hj_max_residual(&s, 0.5, &xs));
        let slope = match (&coarse, &fine) {
            (Ok(c), Ok(f)) => Ok(ratio(*c, *f).log2()),
            (Err(e), _) | (_, Err(e)) => Err(e.clone()),
        };
        sink.at_most("hj_quadratic.residual", fine, 5e-2);
        sink.at_least("hj_quadratic.residual_slope", slope, 0.8);
    }

    fn dirichlet_solve(n: usize, m: usize, nt: usize) -> Result<TimePath> {
        let lat = Lattice::symmetric(1, 3.0, n)?;
        let u0 = GridFunction::sample(&F::squared_norm(1), &lat)?;
        let u1 = GridFunction::sample(&F::scaled(4.0, F::squared_norm(1)), &lat)?;
        let opts = SolveOptions::new(Lattice::symmetric(1, 24.0, m)?);
        solve_ma_dirichlet(&u0, &u1, 1.0, &times(1.0, nt), &opts)
    }

    fn dirichlet(sink: &mut Sink) {
        let xs: Vec<Vec<f64>> = [0.5, 1.0, 1.5].iter().map(|x| vec![*x]).collect();
        let coarse = dirichlet_solve(257, 1025, 101);
        let dev = coarse.as_ref().map_err(Clone::clone).map(|path| {
            path.times()
                .iter()
                .zip(path.frames())
                .map(|(t, fr)| {
                    let s = (1.0 - t) / 4.0 + t / 16.0;
                    let lat = fr.lattice();
                    central_gap(fr, lat, |j| lat.coord(0, j).powi(2) / (4.0 * s))
                })
                .fold(0.0, f64::max)
        });
        sink.at_most("ma_dirichlet.deviation", dev, 2e-2);
        let r = coarse.and_then(|p| ma_max_residual(&p, 0.5, &xs));
        sink.at_most("ma_dirichlet.residual_n257", r, 5e-2);
        let r = dirichlet_solve(513, 2049, 201).and_then(|p| ma_max_residual(&p, 0.5, &xs));
        sink.at_most("ma_dirichlet.residual_n513", r, 5e-2);
    }

    fn cauchy(sink: &mut Sink) {
        let run = (|| {
            let lat = Lattice::symmetric(1, 3.0, 257)?;
            let u0 = GridFunction::sample(&F::squared_norm(1), &lat)?;
            let du0: Vec<f64> = u0.values().iter().map(|v| v.value()).collect();
            let opts = SolveOptions::new(Lattice::symmetric(1, 12.0, 513)?);
            let sol = solve_ma_cauchy_partial(&u0, &du0, &times(2.0, 41), &opts)?;
            let fine = solve_ma_cauchy(&u0, &du0, &[0.0, 0.01, 0.02], &opts)?;
            let vel = max_of(
                [0.5, 1.0, -1.2]
                    .iter()
                    .map(|x| initial_velocity_residual(&fine.path, &[*x], x * x)),
            )?;
            Ok((sol.t_est, sol.refused.len() as f64, vel))
        })();
        let pick = |i: usize| run.clone().map(|t| [t.0, t.1, t.2][i]);
        sink.at_least("ma_cauchy.t_est_lower", pick(0), 0.95);
        sink.at_most("ma_cauchy.t_est_upper", pick(0), 1.0);
        sink.at_least("ma_cauchy.refused_frames", pick(1), 1.0);
        sink.at_most("ma_cauchy.initial_velocity", pick(2), 5e-2);
    }
}

mod input {
    use super::*;

    fn grid_of(f: &ConvexFunction) -> Result<GridFunction> {
        match f {
            ConvexFunction::Grid(g) => Ok(g.clone()),
            ConvexFunction::Analytic(a) => GridFunction::sample(a, &default_lattice(a.dim())?),
        }
    }

    /// Like `grid_of`, with analytic inputs sampled on `nodes[dim − 1]` nodes per axis.
    fn fine_grid_of(f: &ConvexFunction, nodes: [usize; 3]) -> Result<GridFunction> {
        match f {
            ConvexFunction::Grid(g) => Ok(g.clone()),
            ConvexFunction::Analytic(a) => {
                let (r, _) = box_size(&default_lattice(a.dim())?);
                GridFunction::sample(a, &Lattice::symmetric(a.dim(), r, nodes[a.dim() - 1])?)
            }
        }
    }

    /// Probe points at `frac` of the box radius: `±frac·R, ±2frac·R/3` in 1D, five directions otherwise.
    fn probe_points(lattice: &Lattice, frac: f64) -> Vec<Vec<f64>> {
        let r = (0..lattice.dim())
            .map(|a| lattice.radius(a))
            .fold(f64::INFINITY, f64::min);
        match lattice.dim() {
            1 => [1.0, -1.0, 2.0 / 3.0, -2.0 / 3.0]
                .iter()
                .map(|c| vec![c * frac * r])
                .collect(),
            d => (0..5)
                .map(|k| {
                    let th = 0.3 + k as f64 * std::f64::consts::TAU / 5.0;
                    let mut x = vec![0.0; d];
                    x[0] = frac * r * th.cos();
                    x[1] = frac * r * th.sin();
                    x
                })
                .collect(),
        }
    }

    /// Probe points whose value is positive and finite, with their polar gradients.
    fn probes_with_gradients(
        f: &ConvexFunction,
        lattice: &Lattice,
        frac: f64,
    ) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
        let out: Vec<_> = probe_points(lattice, frac)
            .into_iter()
            .filter_map(|x| {
                let (y, _) = polar_gradient(f, &x).ok()?.into_point(&x).ok()?;
                Some((x, y))
            })
            .collect();
        if out.is_empty() {
            return Err(Error::EmptyPolarGradient {
                point: vec![],
                reason: "no probe point has a polar gradient".into(),
            });
        }
        Ok(out)
    }

    fn covering(dim: usize, pts: &[Vec<f64>], nodes: usize) -> Result<Lattice> {
        let r = pts
            .iter()
            .map(|y| p_norm(y, f64::INFINITY))
            .fold(0.0, f64::max);
        Lattice::symmetric(dim, 1.5 * r.max(1e-3), nodes)
    }

    pub(super) fn involution(sink: &mut Sink, f: &ConvexFunction) {
        sink.at_most(
            "input.error",
            grid_of(f).and_then(|g| involution_error(&g)),
            5e-2,
        );
    }

    /// The point `x = r u` on the ray of `s` with `x / f(x) = s`, by bisection on `r`.
    fn preimage(f: &GridFunction, s: &[f64]) -> Option<Vec<f64>> {
        let norm = p_norm(s, 2.0);
        if norm == 0.0 {
            return None;
        }
        let u: Vec<f64> = s.iter().map(|c| c / norm).collect();
        let lat = f.lattice();
        let r_max = (0..lat.dim())
            .filter(|&a| u[a] != 0.0)
            .map(|a| lat.radius(a) / u[a].abs())
            .fold(f64::INFINITY, f64::min);
        let phi = |r: f64| -> f64 {
            let x: Vec<f64> = u.iter().map(|c| c * r).collect();
            match f.evaluate(&x).map(|v| v.value()) {
                Ok(v) if v > f.eps_zero() => r / v,
                Ok(v) if v.is_finite() => f64::INFINITY,
                _ => 0.0,
            }
        };
        let (mut lo, mut hi) = (r_max * 1e-6, r_max);
        if phi(lo) < norm || phi(hi) > norm {
            return None;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if phi(mid) >= norm {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(u.iter().map(|c| c * 0.5 * (lo + hi)).collect())
    }

    /// Checks `f(x) J(s) = 1` at up to 20 interior nodes `s` of the output
    /// lattice, with `x` solved from `x / f(x) = s`, so no interpolation of `J` enters.
    pub(super) fn jdual(sink: &mut Sink, f: &ConvexFunction) {
        let r = (|| {
            let g = fine_grid_of(f, [2401, 129, 33])?;
            let cf = ConvexFunction::Grid(g.clone());
            let pairs = probes_with_gradients(&cf, g.lattice(), 0.5)?;
            let ss: Vec<Vec<f64>> = pairs
                .iter()
                .map(|(x, _)| {
                    let fx = g.evaluate(x)?.value();
                    Ok(x.iter().map(|c| c / fx).collect())
                })
                .collect::<Result<_>>()?;
            let ys: Vec<Vec<f64>> = pairs.into_iter().map(|p| p.1).collect();
            let d = g.dim();
            let out = covering(d, &ss, if d == 1 { 241 } else { 31 })?;
            let mid = covering(d, &ys, if d == 1 { 2401 } else { 241 })?;
            let mid = Lattice::symmetric(d, 2.0 * mid.radius(0), mid.shape()[0])?;
            let (s_lo, s_hi) = ss
                .iter()
                .map(|s| p_norm(s, 2.0))
                .fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
            let nodes: Vec<(usize, Vec<f64>)> = (0..out.len())
                .filter(|&j| !out.is_boundary(j))
                .filter_map(|j| {
                    let s = out.point_vec(j);
                    let n = p_norm(&s, 2.0);
                    if n < s_lo || n > s_hi {
                        return None;
                    }
                    Some((j, preimage(&g, &s)?))
                })
                .collect();
            if nodes.is_empty() {
                return Err(Error::DegenerateEpigraph(
                    "no output node has a preimage on the input box".into(),
                ));
            }
            let stride = nodes.len().div_ceil(20);
            let a = j_transform_fmap(&g, &out)?;
            let b = j_transform_composition(&g, &mid, &out)?;
            let (mut ra, mut rb, mut gap) = (0.0f64, 0.0f64, 0.0f64);
            for (j, x) in nodes.iter().step_by(stride) {
                let fx = g.evaluate(x)?.value();
                let (ja, jb) = (a.value_at(*j).value(), b.value_at(*j).value());
                ra = ra.max((fx * ja - 1.0).abs());
                rb = rb.max((fx * jb - 1.0).abs());
                gap = gap.max((ja - jb).abs());
            }
            Ok((ra, rb, gap))
        })();
        let pick = |i: usize| r.clone().map(|t| [t.0, t.1, t.2][i]);
        sink.at_most("input.fmap_identity", pick(0), 1e-3);
        sink.at_most("input.composition_identity", pick(1), 1e-3);
        sink.at_most("input.route_gap", pick(2), 2e-3);
    }

    pub(super) fn hessian(sink: &mut Sink, f: &ConvexFunction) {
        if let ConvexFunction::Analytic(a) = f {
            let det = default_lattice(a.dim()).and_then(|lat| {
                let (r, _) = box_size(&lat);
                let pts = random_points(a.dim(), 20, r / 2.0, r / 8.0, 31);
                max_of(pts.iter().map(|x| Ok(hessian_of_polar(a, x)?.det_residual)))
            });
            sink.at_most("input.analytic_det", det, 1e-8);
        }
        let det = (|| {
            let g = fine_grid_of(f, [2401, 769, 65])?;
            let pairs = probes_with_gradients(&ConvexFunction::Grid(g.clone()), g.lattice(), 0.5)?;
            let ys: Vec<Vec<f64>> = pairs.iter().map(|p| p.1.clone()).collect();
            let pf = polar(&g, &covering(g.dim(), &ys, 21)?)?.output;
            let xs: Vec<Vec<f64>> = pairs.into_iter().map(|p| p.0).collect();
            grid_hessian_residual(&g, &pf, &xs)
        })();
        sink.at_most("input.grid_det", det, 1e-3);
    }

    pub(super) fn variation(sink: &mut Sink, f: &ConvexFunction) {
        let ys = fine_grid_of(f, [2401, 385, 33]).and_then(|g| {
            let pairs = probes_with_gradients(f, g.lattice(), 0.75)?;
            Ok((g, pairs.into_iter().map(|p| p.1).collect::<Vec<_>>()))
        });
        let (g, ys) = match ys {
            Ok(v) => v,
            Err(e) => return sink.at_most("input.variation", Err(e), 1e-2),
        };
        if let ConvexFunction::Analytic(a) = f {
            let a = a.clone();
            let scan = default_lattice(a.dim()).and_then(|lat| {
                let (r, n) = box_size(&lat);
                Lattice::symmetric(lat.dim(), 2.0 * r, n)
            });
            match scan {
                Ok(scan) => {
                    let fam = Family::analytic(move |t| F::scaled(1.0 + t, a.clone()), scan)
                        .with_richardson(true);
                    variation_rows(sink, "input_analytic", &fam, &ys, 1e-3);
                }
                Err(e) => sink.at_most("input_analytic", Err(e), 1e-3),
            }
        }
        let fam = (|| {
            let path = scaling_path(&g, &[0.4, 0.5, 0.6])?;
            let nodes = if g.dim() == 1 { 161 } else { 61 };
            Ok(Family::grid(path, covering(g.dim(), &ys, nodes)?))
        })();
        match fam {
            Ok(fam) => variation_rows(sink, "input_grid", &fam, &ys, 1e-2),
            Err(e) => sink.at_most("input_grid", Err(e), 1e-2),
        }
    }

    pub(super) fn ginf(sink: &mut Sink, f: &ConvexFunction) {
        let g = match grid_of(f) {
            Ok(g) => g,
            Err(e) => return sink.at_most("input.self_halving", Err(e), 1e-2),
        };
        let lat = g.lattice().clone();
        let h = involution_dual(&lat).and_then(|d| ginf_dual(&g, &g, &d));
        let half = h
            .as_ref()
            .map_err(Clone::clone)
            .map(|h| central_gap(&h.output, &lat, |k| g.value_at(k).value() / 2.0));
        sink.at_most("input.self_halving", half, 1e-2);
        if g.dim() == 1 {
            let gap = h.and_then(|h| {
                let direct = ginf_direct_1d_grid(&g, &g, &lat)?.output;
                Ok(central_gap(&h.output, &lat, |k| direct.value_at(k).value()))
            });
            sink.at_most("input.route_gap", gap, 1e-2);
        }
    }

    pub(super) fn pde(sink: &mut Sink, f: &ConvexFunction) {
        let setup = grid_of(f).and_then(|g| {
            let pairs = probes_with_gradients(&ConvexFunction::Grid(g.clone()), g.lattice(), 0.5)?;
            let xs: Vec<Vec<f64>> = pairs.into_iter().map(|p| p.0).collect();
            let dual = involution_dual(g.lattice())?;
            Ok((g, xs, dual))
        });
        let (g, xs, dual) = match setup {
            Ok(v) => v,
            Err(e) => return sink.at_most("input.pde", Err(e), 5e-2),
        };
        let hj = (|| {
            let ham = GridFunction::sample(&F::scaled(0.5, F::squared_norm(g.dim())), &dual)?;
            let sol = solve_polar_hj(&g, &ham, &times(1.0, 11), &SolveOptions::new(dual.clone()))?;
            hj_max_residual(&sol, 0.5, &xs)
        })();
        sink.at_most("input.hj_residual", hj, 5e-2);
        let ma = g.scaled(4.0).and_then(|u1| {
            solve_ma_dirichlet(&g, &u1, 1.0, &times(1.0, 11), &SolveOptions::new(dual))
        });
        let dev = ma.as_ref().map_err(Clone::clone).map(|path| {
            let scale = g.max_finite().max(1.0);
            path.times()
                .iter()
                .zip(path.frames())
                .map(|(t, fr)| {
                    central_gap(fr, g.lattice(), |k| {
                        g.value_at(k).value() / (1.0 - 0.75 * t)
                    }) / scale
                })
                .fold(0.0, f64::max)
        });
        sink.at_most("input.ma_dirichlet_relative_deviation", dev, 2e-2);
        let r = ma.and_then(|p| ma_max_residual(&p, 0.5, &xs));
        sink.at_most("input.ma_residual", r, 5e-2);
    }
}
