//! Closed-form solvers: every frame is a polar of a combination of dual data.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::extreal::ExtReal;
use crate::funcspace::{classify, GridFunction, SampleSpec};
use crate::ginfconv::ginf_dual;
use crate::lattice::Lattice;
use crate::pde::path::{Provenance, TimePath};
use crate::transforms::{geometric_envelope_with, polar, TransformResult};

/// What to do when an input fails a structural hypothesis check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AdvisoryPolicy {
    #[default]
    Warn,
    Fail,
    Waive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Lattice carrying the dual data `Pu`.
    pub dual: Lattice,
    pub policy: AdvisoryPolicy,
    pub sample: SampleSpec,
}

impl SolveOptions {
    pub fn new(dual: Lattice) -> Self {
        SolveOptions {
            dual,
            policy: AdvisoryPolicy::default(),
            sample: SampleSpec {
                n_points: 60,
                ..SampleSpec::default()
            },
        }
    }

    pub fn with_policy(mut self, policy: AdvisoryPolicy) -> Self {
        self.policy = policy;
        self
    }
}

/// Hypothesis a solver input is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Hypothesis {
    /// `S₂` and nonlinear at infinity.
    Strong,
    /// Geometric convex only.
    Cvx0,
}

fn advise(
    name: &str,
    f: &GridFunction,
    need: Hypothesis,
    opts: &SolveOptions,
    out: &mut Vec<String>,
) -> Result<()> {
    if opts.policy == AdvisoryPolicy::Waive {
        return Ok(());
    }
    let r = classify(&f.clone().into(), &opts.sample);
    let mut failed = Vec::new();
    if !r.in_cvx0 {
        failed.push("not geometric convex");
    }
    if need == Hypothesis::Strong {
        if !r.in_s2 {
            failed.push("not in S2");
        }
        if !r.nonlinear_at_infinity {
            failed.push("linear at infinity");
        }
    }
    if failed.is_empty() {
        return Ok(());
    }
    let msg = format!("{name}: {}", failed.join(", "));
    if opts.policy == AdvisoryPolicy::Fail {
        return Err(Error::AdvisoryFailure(msg));
    }
    log::warn!("{msg}");
    out.push(msg);
    Ok(())
}

/// Samples of `g` at the nodes of `lat`, interpolating when the lattices differ.
fn on_lattice(g: &GridFunction, lat: &Lattice) -> Result<GridFunction> {
    if g.lattice().same_nodes(lat) {
        return Ok(g.clone());
    }
    let n = lat.dim();
    let values = (0..lat.len())
        .map(|k| g.evaluate(&lat.point(k)[..n]))
        .collect::<Result<Vec<_>>>()?;
    GridFunction::new(lat.clone(), values)
}

/// `a·p + b·q` nodewise, skipping a term whose weight is zero.
fn combine(a: f64, p: &GridFunction, b: f64, q: &GridFunction) -> Result<GridFunction> {
    match (a > 0.0, b > 0.0) {
        (true, true) => p.scaled(a)?.add(&q.scaled(b)?),
        (true, false) => p.scaled(a),
        (false, true) => q.scaled(b),
        (false, false) => Err(Error::InvalidFunction("both weights vanish".into())),
    }
}

fn assemble(
    times: Vec<f64>,
    results: Vec<TransformResult>,
    provenance: Provenance,
    advisories: Vec<String>,
) -> Result<TimePath> {
    let fractions: Vec<f64> = results
        .iter()
        .map(|r| r.boundary_attainment_fraction)
        .collect();
    let frames = results.into_iter().map(|r| r.output).collect();
    let mut path = TimePath::new(times, frames, provenance)?.with_boundary_fractions(&fractions);
    path.advisories = advisories;
    Ok(path)
}

/// Polar HJ path `u(t) = P(Pf + t g)` on the lattice of `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct HjSolution {
    pub path: TimePath,
    /// `g` on the dual lattice.
    pub hamiltonian: GridFunction,
    pub dual: Lattice,
}

pub fn solve_polar_hj(
    f: &GridFunction,
    g: &GridFunction,
    times: &[f64],
    opts: &SolveOptions,
) -> Result<HjSolution> {
    let mut advisories = Vec::new();
    advise("f", f, Hypothesis::Strong, opts, &mut advisories)?;
    advise("g", g, Hypothesis::Cvx0, opts, &mut advisories)?;
    let g = on_lattice(g, &opts.dual)?;
    let pf = polar(f, &opts.dual)?.output;
    let results = times
        .iter()
        .map(|&t| {
            let dual = if t > 0.0 {
                pf.add(&g.scaled(t)?)?
            } else {
                pf.clone()
            };
            polar(&dual, f.lattice())
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = Provenance::Hj {
        f: "f".into(),
        g: "g".into(),
    };
    let path = assemble(times.to_vec(), results, provenance, advisories)?;
    Ok(HjSolution {
        path,
        hamiltonian: g,
        dual: opts.dual.clone(),
    })
}

fn check_times(times: &[f64], t_end: f64) -> Result<()> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::InvalidFunction(format!(
            "final time must be positive, got {t_end}"
        )));
    }
    match times.iter().find(|t| !(**t >= 0.0 && **t <= t_end)) {
        Some(&time) => Err(Error::TimesOutOfRange { time, t_end }),
        None => Ok(()),
    }
}

/// Interpolation `u(t) = P((1 − t/T) Pu₀ + (t/T) Pu₁)` on the lattice of `u0`.
pub fn solve_ma_dirichlet(
    u0: &GridFunction,
    u1: &GridFunction,
    t_end: f64,
    times: &[f64],
    opts: &SolveOptions,
) -> Result<TimePath> {
    check_times(times, t_end)?;
    let mut advisories = Vec::new();
    advise("u0", u0, Hypothesis::Strong, opts, &mut advisories)?;
    advise("u1", u1, Hypothesis::Strong, opts, &mut advisories)?;
    let p0 = polar(u0, &opts.dual)?.output;
    let p1 = polar(u1, &opts.dual)?.output;
    let results = times
        .iter()
        .map(|&t| {
            let s = t / t_end;
            polar(&combine(1.0 - s, &p0, s, &p1)?, u0.lattice())
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = Provenance::MaDirichlet {
        u0: "u0".into(),
        u1: "u1".into(),
        t_end,
    };
    assemble(times.to_vec(), results, provenance, advisories)
}

/// The same interpolation as `(T u₀/(T − t)) ⊡ (T u₁/t)`.
pub fn solve_ma_dirichlet_ginf(
    u0: &GridFunction,
    u1: &GridFunction,
    t_end: f64,
    times: &[f64],
    opts: &SolveOptions,
) -> Result<TimePath> {
    check_times(times, t_end)?;
    let frames = times
        .iter()
        .map(|&t| {
            if t == 0.0 {
                geometric_envelope_with(u0, &opts.dual)
            } else if t == t_end {
                let e = geometric_envelope_with(u1, &opts.dual)?;
                on_lattice(&e, u0.lattice())
            } else {
                let a = u0.scaled(t_end / (t_end - t))?;
                let b = u1.scaled(t_end / t)?;
                Ok(ginf_dual(&a, &b, &opts.dual)?.output)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = Provenance::MaDirichlet {
        u0: "u0".into(),
        u1: "u1".into(),
        t_end,
    };
    TimePath::new(times.to_vec(), frames, provenance)
}

/// Dual data of the Cauchy problem.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchyData {
    /// `Pu₀` on the dual lattice.
    pub w0: GridFunction,
    /// Signed `v(y) = u̇₀(x)/u₀(x)` at the maximizer `x` of `Pu₀(y)`, per dual node;
    /// zero at the origin and where no maximizer with `u₀(x) > 0` exists.
    pub v: Vec<f64>,
}

impl CauchyData {
    /// `du0` holds signed samples of the initial velocity on the lattice of `u0`.
    pub fn new(u0: &GridFunction, du0: &[f64], dual: &Lattice) -> Result<Self> {
        if du0.len() != u0.lattice().len() {
            return Err(Error::DimensionMismatch {
                expected: u0.lattice().len(),
                got: du0.len(),
            });
        }
        let w = polar(u0, dual)?;
        let eps = u0.eps_zero();
        let origin = dual.origin_flat();
        let v = w
            .argmax()
            .iter()
            .enumerate()
            .map(|(j, a)| match *a {
                Some(k) if j != origin && u0.value_at(k).value() > eps => {
                    du0[k] / u0.value_at(k).value()
                }
                _ => 0.0,
            })
            .collect();
        Ok(CauchyData { w0: w.output, v })
    }

    /// `Pu₀ · (1 − t v)`, or `None` when it turns negative or loses midpoint convexity.
    pub fn dual_frame(&self, t: f64) -> Option<GridFunction> {
        let tol = self.w0.eps_zero();
        let mut values = Vec::with_capacity(self.v.len());
        for (w, v) in self.w0.values().iter().zip(&self.v) {
            let factor = 1.0 - t * v;
            match w.finite() {
                None if factor > 0.0 => values.push(ExtReal::INFINITY),
                None => return None,
                Some(w) => {
                    let d = w * factor;
                    if d < -tol {
                        return None;
                    }
                    values.push(ExtReal::new(d.max(0.0)));
                }
            }
        }
        let frame = GridFunction::new(self.w0.lattice().clone(), values).ok()?;
        frame
            .is_midpoint_convex(frame.tol_convex())
            .then_some(frame)
    }
}

/// Frames of the Cauchy problem up to the estimated maximal time.
#[derive(Debug, Clone, PartialEq)]
pub struct CauchySolution {
    pub path: TimePath,
    pub data: CauchyData,
    /// Largest requested time such that it and every earlier requested time are
    /// admissible; `0` when none is.
    pub t_est: f64,
    /// Requested times past `t_est`, for which no frame was produced.
    pub refused: Vec<f64>,
}

/// `u(t) = P(Pu₀ · (1 − t v))` at the admissible requested times.
pub fn solve_ma_cauchy_partial(
    u0: &GridFunction,
    du0: &[f64],
    times: &[f64],
    opts: &SolveOptions,
) -> Result<CauchySolution> {
    let mut advisories = Vec::new();
    advise("u0", u0, Hypothesis::Strong, opts, &mut advisories)?;
    let o = u0.lattice().origin_flat();
    let du_scale = du0.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if du0[o].abs() > crate::tolerances::eps_zero(du_scale) {
        let msg = format!("du0(0) = {} is not zero", du0[o]);
        if opts.policy == AdvisoryPolicy::Fail {
            return Err(Error::AdvisoryFailure(msg));
        }
        advisories.push(msg);
    }
    let data = CauchyData::new(u0, du0, &opts.dual)?;
    let mut accepted = Vec::new();
    let mut results = Vec::new();
    let mut refused = Vec::new();
    for &t in times {
        if refused.is_empty() {
            if let Some(d) = data.dual_frame(t) {
                results.push(polar(&d, u0.lattice())?);
                accepted.push(t);
                continue;
            }
        }
        refused.push(t);
    }
    let t_est = accepted.last().copied().unwrap_or(0.0);
    let provenance = Provenance::MaCauchy {
        u0: "u0".into(),
        du0: "du0".into(),
        t_est,
    };
    let path = assemble(accepted, results, provenance, advisories)?;
    Ok(CauchySolution {
        path,
        data,
        t_est,
        refused,
    })
}

/// Like [`solve_ma_cauchy_partial`], refusing with [`Error::BeyondMaximalTime`]
/// when any requested time lies past the estimate.
pub fn solve_ma_cauchy(
    u0: &GridFunction,
    du0: &[f64],
    times: &[f64],
    opts: &SolveOptions,
) -> Result<CauchySolution> {
    let sol = solve_ma_cauchy_partial(u0, du0, times, opts)?;
    match sol.refused.first() {
        Some(&time) => Err(Error::BeyondMaximalTime {
            time,
            t_est: sol.t_est,
        }),
        None => Ok(sol),
    }
}
