//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any criterion fails.
//!
//! Pass criterion ids (`C1` .. `C12`) as arguments to run a subset.

use std::process::{Command, ExitCode};
use std::time::Instant;

use polarity::calculus::{
    hessian_of_polar, hessian_of_polar_grid, legendre_first_variation_residual,
    polar_first_variation_residual, polar_gradient, polar_gradient_of_sum,
    polar_subdifferential_1d, second_variation_residuals, Family, PolarGradientResult,
};
use polarity::ginfconv::{ginf_direct_1d_grid, ginf_dual};
use polarity::pde::{
    hj_residual, initial_velocity_residual, ma_residual, solve_ma_cauchy, solve_ma_cauchy_partial,
    solve_ma_dirichlet, solve_polar_hj, HjSolution, Provenance, SolveOptions, TimePath,
};
use polarity::transforms::{
    geometric_envelope_with, j_transform_composition, j_transform_fmap, polar, polar_analytic,
};
use polarity::verify::involution_dual;
use polarity::{AnalyticConvexFunction as F, ConvexFunction, GridFunction, Lattice, Result};

struct Verdict {
    pass: bool,
    detail: String,
}

/// Accumulates bound checks of one criterion.
struct Checks {
    pass: bool,
    parts: Vec<String>,
}

impl Checks {
    fn new() -> Self {
        Checks {
            pass: true,
            parts: Vec::new(),
        }
    }

    fn at_most(&mut self, name: &str, v: f64, tol: f64) {
        let ok = v <= tol;
        self.pass &= ok;
        self.parts.push(format!(
            "{name} {v:.3e} <= {tol:.0e}{}",
            if ok { "" } else { " !" }
        ));
    }

    fn at_least(&mut self, name: &str, v: f64, tol: f64) {
        let ok = v >= tol;
        self.pass &= ok;
        self.parts.push(format!(
            "{name} {v:.3} >= {tol}{}",
            if ok { "" } else { " !" }
        ));
    }

    fn holds(&mut self, name: &str, ok: bool) {
        self.pass &= ok;
        self.parts
            .push(format!("{name} {}", if ok { "yes" } else { "no !" }));
    }

    fn done(self) -> Verdict {
        Verdict {
            pass: self.pass,
            detail: self.parts.join("; "),
        }
    }
}

fn line(r: f64, n: usize) -> Result<Lattice> {
    Lattice::symmetric(1, r, n)
}

fn times(t_end: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| t_end * k as f64 / (n - 1) as f64).collect()
}

/// Golden-ratio points in `[-r, r]^dim` with Euclidean norm at least `min_norm`.
fn spread_points(dim: usize, count: usize, r: f64, min_norm: f64) -> Vec<Vec<f64>> {
    let alphas = [
        0.618_033_988_749_895,
        0.754_877_666_246_693,
        0.569_840_290_998_053,
    ];
    let mut out = Vec::new();
    let mut k = 1usize;
    while out.len() < count {
        let x: Vec<f64> = (0..dim)
            .map(|a| r * (2.0 * (k as f64 * alphas[a]).fract() - 1.0))
            .collect();
        if x.iter().map(|c| c * c).sum::<f64>().sqrt() >= min_norm {
            out.push(x);
        }
        k += 1;
    }
    out
}

/// Largest `|g − exact|` over nodes with every coordinate in the central half of the box.
fn central_gap(g: &GridFunction, exact: impl Fn(&[f64]) -> f64) -> f64 {
    let lat = g.lattice();
    (0..lat.len())
        .map(|k| lat.point_vec(k))
        .filter(|x| {
            x.iter()
                .enumerate()
                .all(|(a, c)| c.abs() <= lat.radius(a) / 2.0 + 1e-12)
        })
        .map(|x| (g.evaluate(&x).map(|v| v.value()).unwrap_or(f64::NAN) - exact(&x)).abs())
        .fold(0.0, |m, d| {
            if d.is_nan() || m.is_nan() {
                f64::NAN
            } else {
                m.max(d)
            }
        })
}

fn c1_involution() -> Result<Verdict> {
    let started = Instant::now();
    let mut c = Checks::new();
    let cases = [
        ("x^2", F::squared_norm(1), 3.0, 257),
        ("l1^2", F::power(2, 1.0, 2.0, 1.0), 2.0, 129),
        (
            "quad2d",
            F::quadratic(vec![vec![2.0, 0.5], vec![0.5, 1.0]]),
            2.0,
            129,
        ),
    ];
    for (name, f, r, n) in cases {
        let err = |n: usize| -> Result<f64> {
            let lat = Lattice::symmetric(f.dim(), r, n)?;
            let g = GridFunction::sample(&f, &lat)?;
            let env = geometric_envelope_with(&g, &involution_dual(&lat)?)?;
            Ok(central_gap(&env, |x| f.evaluate(x).value()))
        };
        let coarse = err(n)?;
        let fine = err(2 * n - 1)?;
        c.at_most(&format!("{name} err"), coarse, 5e-2);
        c.at_least(&format!("{name} shrink"), coarse / fine, 1.5);
    }
    let secs = started.elapsed().as_secs_f64();
    c.at_most("seconds", secs, 10.0);
    Ok(c.done())
}

fn c2_dual_norms() -> Result<Verdict> {
    let mut c = Checks::new();
    let dual = Lattice::symmetric(2, 2.0, 41)?;
    let g = GridFunction::sample(&F::norm(2, 1.0), &Lattice::symmetric(2, 128.0, 129)?)?;
    let pf = polar(&g, &dual)?.output;
    let gap = (0..dual.len())
        .filter(|&j| !dual.is_boundary(j))
        .map(|j| {
            let y = dual.point_vec(j);
            (pf.value_at(j).value() - y[0].abs().max(y[1].abs())).abs()
        })
        .fold(0.0, f64::max);
    c.at_most("grid", gap, 1e-2);
    c.holds(
        "analytic is max norm",
        polar_analytic(&F::norm(2, 1.0))? == F::norm(2, f64::INFINITY),
    );
    Ok(c.done())
}

fn c3_j_identity() -> Result<Verdict> {
    let mut c = Checks::new();
    let xs: Vec<f64> = (0..20)
        .map(|k| {
            let m = 0.75 + 0.05 * (k / 2) as f64;
            if k % 2 == 0 {
                m
            } else {
                -m
            }
        })
        .collect();
    for p in [2i32, 3, 4] {
        let f = |x: f64| x.abs().powi(p);
        let g = GridFunction::sample(&F::power(1, 2.0, p as f64, 1.0), &line(3.0, 601)?)?;
        let out = line(3.0, 241)?;
        let a = j_transform_fmap(&g, &out)?;
        let b = j_transform_composition(&g, &line(12.0, 2401)?, &out)?;
        let (mut ra, mut rb, mut gap) = (0.0f64, 0.0f64, 0.0f64);
        for &x in &xs {
            let s = [x / f(x)];
            let (ja, jb) = (a.evaluate(&s)?.value(), b.evaluate(&s)?.value());
            ra = ra.max((f(x) * ja - 1.0).abs());
            rb = rb.max((f(x) * jb - 1.0).abs());
            gap = gap.max((ja - jb).abs());
        }
        c.at_most(&format!("t^{p} fmap"), ra, 1e-3);
        c.at_most(&format!("t^{p} L∘P"), rb, 1e-3);
        c.at_most(&format!("t^{p} routes"), gap, 2e-3);
    }
    Ok(c.done())
}

fn c4_hessian_determinant() -> Result<Verdict> {
    let mut c = Checks::new();
    let quads = [
        ("1d", F::quadratic(vec![vec![1.5]])),
        ("2d", F::quadratic(vec![vec![2.0, 0.5], vec![0.5, 1.0]])),
    ];
    for (name, f) in &quads {
        let n = f.dim() as i32;
        let mut worst = 0.0f64;
        for x in spread_points(f.dim(), 20, 2.0, 0.25) {
            let h = hessian_of_polar(f, &x)?;
            let prod = h.hess_f.determinant()
                * h.hess_polar.determinant()
                * (h.f_value * h.polar_value).powi(n + 2);
            worst = worst.max((prod - 1.0).abs());
        }
        c.at_most(&format!("analytic {name}"), worst, 1e-8);
    }
    let grid = |f: &F, lat: Lattice, xs: &[Vec<f64>]| -> Result<f64> {
        let g = GridFunction::sample(f, &lat)?;
        let pf = polar(&g, &Lattice::symmetric(lat.dim(), 4.0, 21)?)?.output;
        let mut worst = 0.0f64;
        for x in xs {
            worst = worst.max(hessian_of_polar_grid(&g, &pf, x)?.det_residual);
        }
        Ok(worst)
    };
    let xs1: Vec<Vec<f64>> = [0.8, 1.0, 1.5, -1.2].iter().map(|x| vec![*x]).collect();
    c.at_most(
        "grid 1d",
        grid(&F::squared_norm(1), line(3.0, 2401)?, &xs1)?,
        1e-3,
    );
    let xs2 = vec![
        vec![1.0, 0.0],
        vec![0.0, 1.0],
        vec![0.7, 0.7],
        vec![-0.8, 0.6],
        vec![0.5, -1.0],
    ];
    c.at_most(
        "grid 2d",
        grid(&quads[1].1, Lattice::symmetric(2, 2.0, 769)?, &xs2)?,
        1e-3,
    );
    Ok(c.done())
}

fn c5_polar_gradient() -> Result<Verdict> {
    let mut c = Checks::new();
    let sq = ConvexFunction::Analytic(F::squared_norm(1));
    let (y, pv) = polar_gradient(&sq, &[1.0])?.into_point(&[1.0])?;
    c.at_most("|y-2|+|Pf-1|", (y[0] - 2.0).abs() + (pv - 1.0).abs(), 1e-12);
    let dual = line(4.0, 81)?;
    let cell = dual.step()[0];
    let g = GridFunction::sample(&F::squared_norm(1), &line(3.0, 601)?)?;
    match polar_subdifferential_1d(&g, 1.0, &dual)? {
        Some([lo, hi]) => c.at_most(
            "scan offset",
            (lo - y[0]).abs().max((hi - y[0]).abs()),
            cell,
        ),
        None => c.holds("scan nonempty", false),
    }
    let norm = polar_gradient(&ConvexFunction::Analytic(F::norm(1, 2.0)), &[1.0])?;
    c.holds(
        "norm empty",
        matches!(norm, PolarGradientResult::Empty { .. }),
    );
    Ok(c.done())
}

fn c6_ginf() -> Result<Verdict> {
    let mut c = Checks::new();
    let f = GridFunction::sample(&F::squared_norm(1), &line(3.0, 401)?)?;
    let dual = ginf_dual(&f, &f, &line(12.0, 801)?)?.output;
    let direct = ginf_direct_1d_grid(&f, &f, f.lattice())?.output;
    c.at_most(
        "x^2 routes",
        central_gap(&dual, |x| direct.evaluate(x).unwrap().value()),
        1e-2,
    );
    c.at_most(
        "x^2 halving",
        central_gap(&dual, |x| x[0] * x[0] / 2.0),
        1e-2,
    );
    let l1 = GridFunction::sample(&F::norm(1, 1.0), &line(4.0, 161)?)?;
    let h = ginf_dual(&l1, &l1, &line(2000.0, 4001)?)?.output;
    c.at_most("l1 halving", central_gap(&h, |x| x[0].abs() / 2.0), 1e-3);
    Ok(c.done())
}

fn hj_solve(n: usize, m: usize, nt: usize) -> Result<HjSolution> {
    let dual = line(12.0, m)?;
    let f = GridFunction::sample(&F::squared_norm(1), &line(3.0, n)?)?;
    let g = GridFunction::sample(&F::scaled(0.5, F::squared_norm(1)), &dual)?;
    solve_polar_hj(&f, &g, &times(1.0, nt), &SolveOptions::new(dual))
}

fn c7_hj() -> Result<Verdict> {
    let mut c = Checks::new();
    let sol = hj_solve(257, 1025, 101)?;
    for t in [0.25, 0.5, 1.0] {
        let fr = sol.path.frame(sol.path.index_of(t)?)?;
        c.at_most(
            &format!("t={t}"),
            central_gap(fr, |x| x[0] * x[0] / (1.0 + 2.0 * t)),
            2e-2,
        );
    }
    let residual = |s: &HjSolution| -> Result<f64> {
        let mut worst = 0.0f64;
        for x in [0.5, 1.0, 1.5] {
            worst = worst.max(hj_residual(s, 0.5, &[x])?);
        }
        Ok(worst)
    };
    let coarse = residual(&hj_solve(129, 513, 21)?)?;
    let fine = residual(&hj_solve(257, 1025, 41)?)?;
    c.at_most("residual", fine, 5e-2);
    c.at_least("slope", (coarse / fine).log2(), 0.8);
    Ok(c.done())
}

fn dirichlet_solve(n: usize, m: usize, nt: usize) -> Result<TimePath> {
    let lat = line(3.0, n)?;
    let u0 = GridFunction::sample(&F::squared_norm(1), &lat)?;
    let u1 = GridFunction::sample(&F::scaled(4.0, F::squared_norm(1)), &lat)?;
    solve_ma_dirichlet(
        &u0,
        &u1,
        1.0,
        &times(1.0, nt),
        &SolveOptions::new(line(24.0, m)?),
    )
}

fn c8_dirichlet() -> Result<Verdict> {
    let mut c = Checks::new();
    let residual = |p: &TimePath| -> Result<f64> {
        let mut worst = 0.0f64;
        for x in [0.5, 1.0, 1.5] {
            worst = worst.max(ma_residual(p, 0.5, &[x])?);
        }
        Ok(worst)
    };
    let path = dirichlet_solve(257, 1025, 101)?;
    let mut dev = 0.0f64;
    for (t, fr) in path.times().iter().zip(path.frames()) {
        // (1-t)·y²/4 + t·y²/16 in the dual.
        dev = dev.max(central_gap(fr, |x| x[0] * x[0] / (1.0 - 0.75 * t)));
    }
    c.at_most("closed form", dev, 2e-2);
    c.at_most("residual n=257", residual(&path)?, 5e-2);
    c.at_most(
        "residual n=513",
        residual(&dirichlet_solve(513, 2049, 201)?)?,
        5e-2,
    );
    Ok(c.done())
}

fn c9_cauchy() -> Result<Verdict> {
    let mut c = Checks::new();
    let u0 = GridFunction::sample(&F::squared_norm(1), &line(3.0, 257)?)?;
    let du0: Vec<f64> = u0.values().iter().map(|v| v.value()).collect();
    let opts = SolveOptions::new(line(12.0, 513)?);
    let sol = solve_ma_cauchy_partial(&u0, &du0, &times(2.0, 41), &opts)?;
    c.at_least("T_est", sol.t_est, 0.95);
    c.at_most("T_est", sol.t_est, 1.0);
    c.holds("later frames refused", !sol.refused.is_empty());
    let early = solve_ma_cauchy(&u0, &du0, &[0.0, 0.01, 0.02], &opts)?;
    let mut worst = 0.0f64;
    for x in [0.5, 1.0, -1.2] {
        worst = worst.max(initial_velocity_residual(&early.path, &[x], x * x)?);
    }
    c.at_most("initial velocity", worst, 5e-2);
    Ok(c.done())
}

fn variation_max(fam: &Family, ys: &[f64]) -> Result<[f64; 6]> {
    let mut m = [0.0f64; 6];
    for &y in ys {
        let s = second_variation_residuals(fam, 0.5, &[y])?;
        let row = [
            legendre_first_variation_residual(fam, 0.5, &[y])?,
            polar_first_variation_residual(fam, 0.5, &[y])?,
            s.legendre,
            s.polar,
            s.matrix_form,
            s.symmetric_form,
        ];
        for (a, b) in m.iter_mut().zip(row) {
            *a = a.max(b);
        }
    }
    Ok(m)
}

fn c10_variation() -> Result<Verdict> {
    let mut c = Checks::new();
    let names = ["L1", "P1", "L2", "P2", "bordered", "symmetric"];
    let fam = Family::analytic(|t| F::scaled(1.0 + t, F::squared_norm(1)), line(6.0, 241)?)
        .with_richardson(true);
    for (n, v) in names.iter().zip(variation_max(&fam, &[0.7, 1.5, -2.0])?) {
        c.at_most(&format!("analytic {n}"), v, 1e-3);
    }
    let f = GridFunction::sample(&F::squared_norm(1), &line(3.0, 601)?)?;
    let ts = [0.4, 0.5, 0.6];
    let frames = ts
        .iter()
        .map(|t| f.scaled(1.0 + t))
        .collect::<Result<Vec<_>>>()?;
    let path = TimePath::new(
        ts.to_vec(),
        frames,
        Provenance::Custom {
            label: "scaling".into(),
        },
    )?;
    let fam = Family::grid(path, line(4.0, 161)?);
    for (n, v) in names.iter().zip(variation_max(&fam, &[1.0, 2.0])?) {
        c.at_most(&format!("grid {n}"), v, 1e-2);
    }
    Ok(c.done())
}

fn c11_gradient_of_sum() -> Result<Verdict> {
    let mut c = Checks::new();
    let f = ConvexFunction::Analytic(F::squared_norm(1));
    let g = ConvexFunction::Analytic(F::power(1, 2.0, 4.0, 1.0));
    let sum =
        ConvexFunction::Analytic(F::sum(vec![F::squared_norm(1), F::power(1, 2.0, 4.0, 1.0)]));
    let (mut gap, mut oracle) = (0.0f64, 0.0f64);
    for x in spread_points(1, 20, 2.0, 0.2) {
        let a = polar_gradient_of_sum(&f, &g, &x)?[0];
        let (b, _) = polar_gradient(&sum, &x)?.into_point(&x)?;
        gap = gap.max((a - b[0]).abs());
        // Stationarity of (xy − 1)/h(x) with h = x² + x⁴: y = h'/(x h' − h).
        let (h, dh) = (x[0].powi(2) + x[0].powi(4), 2.0 * x[0] + 4.0 * x[0].powi(3));
        oracle = oracle.max((a - dh / (x[0] * dh - h)).abs());
    }
    c.at_most("combination vs direct", gap, 1e-6);
    c.at_most("combination vs stationarity", oracle, 1e-6);
    Ok(c.done())
}

fn c12_verify_all() -> Result<Verdict> {
    let mut c = Checks::new();
    let started = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_polarity"))
        .args([
            "verify",
            "--suite",
            "all",
            "--catalog",
            "builtin",
            "--no-timestamp",
        ])
        .output()
        .expect("polarity binary runs");
    let secs = started.elapsed().as_secs_f64();
    c.holds("exit 0", out.status.code() == Some(0));
    c.at_most("seconds", secs, 120.0);
    if !out.status.success() {
        c.parts.push(
            String::from_utf8_lossy(&out.stderr)
                .trim()
                .replace('\n', " | "),
        );
    }
    Ok(c.done())
}

fn main() -> ExitCode {
    type Criterion = fn() -> Result<Verdict>;
    let criteria: [(&str, &str, Criterion); 12] = [
        ("C1", "involution", c1_involution),
        ("C2", "dual norms", c2_dual_norms),
        ("C3", "J identity", c3_j_identity),
        ("C4", "Hessian determinant", c4_hessian_determinant),
        ("C5", "polar gradient", c5_polar_gradient),
        ("C6", "geometric inf-convolution", c6_ginf),
        ("C7", "polar HJ", c7_hj),
        ("C8", "polar MA Dirichlet", c8_dirichlet),
        ("C9", "polar MA Cauchy", c9_cauchy),
        ("C10", "variation identities", c10_variation),
        ("C11", "polar gradient of sum", c11_gradient_of_sum),
        ("C12", "verify --suite all", c12_verify_all),
    ];
    let wanted: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| w.eq_ignore_ascii_case(id)) {
            continue;
        }
        let started = Instant::now();
        let verdict = run().unwrap_or_else(|e| Verdict {
            pass: false,
            detail: format!("error: {e}"),
        });
        let took = started.elapsed().as_secs_f64();
        let tag = if verdict.pass { "PASS" } else { "FAIL" };
        println!("{tag} {id} {name} ({took:.1}s): {}", verdict.detail);
        if !verdict.pass {
            failed += 1;
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
