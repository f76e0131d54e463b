//! Randomized invariants of the transforms, inf-convolution and path solvers.

use polarity::calculus::hessian_of_polar;
use polarity::ginfconv::ginf_dual;
use polarity::pde::{solve_ma_dirichlet, solve_polar_hj, SolveOptions};
use polarity::transforms::{geometric_envelope_with, polar};
use polarity::{
    AnalyticConvexFunction as F, ConvexFunction, ExtReal, FunctionDescriptor, GridFunction, Lattice,
};
use proptest::prelude::*;

fn line(r: f64, n: usize) -> Lattice {
    Lattice::symmetric(1, r, n).unwrap()
}

/// `a x² + b |x|³ + c x⁴`, convex and vanishing only at the origin.
fn poly(a: f64, b: f64, c: f64) -> impl Fn(f64) -> f64 {
    move |x: f64| a * x * x + b * x.abs().powi(3) + c * x.powi(4)
}

fn tab1(lat: &Lattice, f: impl Fn(f64) -> f64) -> GridFunction {
    GridFunction::tabulate(lat, |x| ExtReal::new(f(x[0]))).unwrap()
}

fn coeffs() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.5f64..2.0, 0.0f64..1.0, 0.0f64..0.5)
}

/// Symmetric positive definite 2×2 matrix from a rotation angle and two eigenvalues.
fn spd() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (0.0f64..std::f64::consts::PI, 0.5f64..3.0, 0.5f64..3.0).prop_map(|(th, l1, l2)| {
        let (c, s) = (th.cos(), th.sin());
        vec![
            vec![l1 * c * c + l2 * s * s, (l1 - l2) * c * s],
            vec![(l1 - l2) * c * s, l1 * s * s + l2 * c * c],
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn polar_reverses_pointwise_order((a, b, c) in coeffs(), extra in 0.1f64..1.0) {
        let lat = line(3.0, 201);
        let f = tab1(&lat, poly(a, b, c));
        let g = tab1(&lat, poly(a + extra, b, c));
        let dual = line(6.0, 121);
        let pf = polar(&f, &dual).unwrap().output;
        let pg = polar(&g, &dual).unwrap().output;
        for j in 0..dual.len() {
            prop_assert!(pg.value_at(j).value() <= pf.value_at(j).value() + 1e-12);
        }
    }

    #[test]
    fn double_polar_recovers_convex_input((a, b, c) in coeffs()) {
        let lat = line(2.0, 401);
        let f = tab1(&lat, poly(a, b, c));
        let env = geometric_envelope_with(&f, &line(12.0, 1201)).unwrap();
        for k in 0..lat.len() {
            let x = lat.coord(0, k);
            if (0.25..=1.0).contains(&x.abs()) {
                let d = (env.value_at(k).value() - f.value_at(k).value()).abs();
                prop_assert!(d <= 5e-3, "x={} d={}", x, d);
            }
        }
    }

    #[test]
    fn envelope_is_idempotent(seed in proptest::collection::vec(0.0f64..1.0, 61)) {
        let lat = line(3.0, 61);
        let f = GridFunction::tabulate(&lat, |x| {
            let k = lat.nearest(x);
            ExtReal::new(x[0] * x[0] * (0.5 + seed[k]))
        })
        .unwrap();
        let dual = line(20.0, 401);
        let once = geometric_envelope_with(&f, &dual).unwrap();
        let twice = geometric_envelope_with(&once, &dual).unwrap();
        for k in 0..lat.len() {
            prop_assert!(once.value_at(k).value() <= f.value_at(k).value() + 1e-12);
            let d = (once.value_at(k).value() - twice.value_at(k).value()).abs();
            prop_assert!(d <= 1e-9 * (1.0 + once.value_at(k).value()), "k={} d={}", k, d);
        }
    }

    #[test]
    fn ginf_is_commutative((a, b, c) in coeffs(), (d, e, g) in coeffs()) {
        let lat = line(2.0, 101);
        let f = tab1(&lat, poly(a, b, c));
        let h = tab1(&lat, poly(d, e, g));
        let dual = line(8.0, 201);
        let fh = ginf_dual(&f, &h, &dual).unwrap().output;
        let hf = ginf_dual(&h, &f, &dual).unwrap().output;
        prop_assert_eq!(fh.values(), hf.values());
    }

    #[test]
    fn ginf_lies_below_both_inputs((a, b, c) in coeffs(), (d, e, g) in coeffs()) {
        let lat = line(2.0, 101);
        let f = tab1(&lat, poly(a, b, c));
        let h = tab1(&lat, poly(d, e, g));
        let out = ginf_dual(&f, &h, &line(8.0, 201)).unwrap().output;
        for k in 0..lat.len() {
            let m = f.value_at(k).value().min(h.value_at(k).value());
            prop_assert!(out.value_at(k).value() <= m + 1e-3);
        }
    }

    #[test]
    fn hj_frames_compose_as_a_semigroup((a, b, c) in coeffs(), t1 in 0.1f64..0.6, t2 in 0.1f64..0.6) {
        let lat = line(3.0, 257);
        let dual = line(12.0, 1025);
        let f = tab1(&lat, poly(a, b, c));
        let g = tab1(&dual, |y| 0.5 * y * y);
        let opts = SolveOptions::new(dual.clone());
        let direct = solve_polar_hj(&f, &g, &[0.0, t1 + t2], &opts).unwrap();
        let first = solve_polar_hj(&f, &g, &[0.0, t1], &opts).unwrap();
        let mid = first.path.frame(1).unwrap().clone();
        let second = solve_polar_hj(&mid, &g, &[0.0, t2], &opts).unwrap();
        let (u, v) = (direct.path.frame(1).unwrap(), second.path.frame(1).unwrap());
        for k in 0..lat.len() {
            if lat.coord(0, k).abs() <= 1.5 {
                let d = (u.value_at(k).value() - v.value_at(k).value()).abs();
                prop_assert!(d <= 2e-2, "k={} d={}", k, d);
            }
        }
    }

    #[test]
    fn dirichlet_time_rescaling_is_exact(t_end in 0.5f64..4.0, frac in 0.05f64..0.95) {
        let lat = line(2.0, 101);
        let u0 = tab1(&lat, |x| x * x);
        let u1 = tab1(&lat, |x| 3.0 * x * x + x.powi(4));
        let opts = SolveOptions::new(line(8.0, 201));
        let scaled = solve_ma_dirichlet(&u0, &u1, t_end, &[frac * t_end], &opts).unwrap();
        let unit = solve_ma_dirichlet(&u0, &u1, 1.0, &[frac], &opts).unwrap();
        let (a, b) = (scaled.frame(0).unwrap(), unit.frame(0).unwrap());
        for k in 0..lat.len() {
            let d = (a.value_at(k).value() - b.value_at(k).value()).abs();
            prop_assert!(d <= 1e-12 * (1.0 + b.value_at(k).value()));
        }
    }

    #[test]
    fn hessian_identity_on_random_quadratics(a in spd(), x0 in -1.0f64..1.0, x1 in -1.0f64..1.0) {
        prop_assume!(x0.hypot(x1) > 0.1);
        let h = hessian_of_polar(&F::quadratic(a), &[x0, x1]).unwrap();
        prop_assert!(h.det_residual <= 1e-8, "{}", h.det_residual);
        prop_assert!(h.transfer_residual <= 1e-8, "{}", h.transfer_residual);
    }

    #[test]
    fn grid_descriptor_round_trips(
        values in proptest::collection::vec(prop_oneof![4 => 0.0f64..10.0, 1 => Just(f64::INFINITY)], 9),
    ) {
        let lat = Lattice::symmetric(2, 1.0, 3).unwrap();
        let mut values: Vec<ExtReal> = values.into_iter().map(ExtReal::new).collect();
        values[lat.origin_flat()] = ExtReal::ZERO;
        let g = GridFunction::new(lat, values).unwrap();
        let cf = ConvexFunction::Grid(g);
        let json = FunctionDescriptor::from_function(&cf).to_json().unwrap();
        let back = FunctionDescriptor::from_json(&json).unwrap().to_function().unwrap();
        prop_assert_eq!(&back, &cf);
        prop_assert_eq!(FunctionDescriptor::from_function(&back).to_json().unwrap(), json);
    }

    #[test]
    fn analytic_descriptor_round_trips(a in spd(), t in 0.1f64..5.0, p in 1.0f64..6.0) {
        let f = F::sum(vec![
            F::scaled(t, F::quadratic(a)),
            F::norm(2, p),
            F::norm(2, f64::INFINITY),
        ]);
        let cf = ConvexFunction::Analytic(f);
        let json = FunctionDescriptor::from_function(&cf).to_json().unwrap();
        let back = FunctionDescriptor::from_json(&json).unwrap().to_function().unwrap();
        prop_assert_eq!(back, cf);
    }
}
