use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

const ENV_KEYS: &[&str] = &[
    "POLARITY_CONFIG",
    "POLARITY_DUAL_BOX",
    "POLARITY_DUAL_SHAPE",
    "POLARITY_STRICT",
    "POLARITY_STEPS",
    "POLARITY_T_END",
    "POLARITY_FORMAT",
    "POLARITY_NO_TIMESTAMP",
    "POLARITY_CHECK",
];

fn polarity(dir: &Path, args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_polarity"));
    cmd.current_dir(dir).args(args);
    for k in ENV_KEYS {
        cmd.env_remove(k);
    }
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, v: &Value) {
    std::fs::write(dir.join(name), serde_json::to_string(v).unwrap()).unwrap();
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn analytic(expr: Value) -> Value {
    json!({"kind": "analytic", "expr": expr})
}

fn square() -> Value {
    analytic(json!({"type": "quadratic", "a": [[2.0]]}))
}

/// Grid descriptor of `f` on `[-r, r]^dim` with `n` nodes per axis.
fn grid(dim: usize, r: f64, n: usize, f: impl Fn(&[f64]) -> f64) -> Value {
    let coord = |k: usize| -r + 2.0 * r * k as f64 / (n - 1) as f64;
    let mut values = Vec::new();
    if dim == 1 {
        for i in 0..n {
            values.push(f(&[coord(i)]));
        }
    } else {
        for i in 0..n {
            for j in 0..n {
                values.push(f(&[coord(i), coord(j)]));
            }
        }
    }
    json!({
        "kind": "grid",
        "dim": dim,
        "box": vec![[-r, r]; dim],
        "shape": vec![n; dim],
        "values": values,
    })
}

/// `(point, value)` pairs of a grid descriptor, rebuilt from box and shape.
fn nodes(desc: &Value) -> Vec<(Vec<f64>, f64)> {
    let dim = desc["dim"].as_u64().unwrap() as usize;
    let b: Vec<[f64; 2]> = serde_json::from_value(desc["box"].clone()).unwrap();
    let shape: Vec<usize> = serde_json::from_value(desc["shape"].clone()).unwrap();
    let vals: Vec<f64> = desc["values"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap_or(f64::INFINITY))
        .collect();
    let coord =
        |a: usize, k: usize| b[a][0] + (b[a][1] - b[a][0]) * k as f64 / (shape[a] - 1) as f64;
    (0..vals.len())
        .map(|flat| {
            let x = if dim == 1 {
                vec![coord(0, flat)]
            } else {
                vec![coord(0, flat / shape[1]), coord(1, flat % shape[1])]
            };
            (x, vals[flat])
        })
        .collect()
}

#[test]
fn polar_of_l1_grid_is_the_max_norm() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "l1norm.json",
        &grid(2, 128.0, 129, |x| x[0].abs() + x[1].abs()),
    );
    let o = polarity(
        dir.path(),
        &[
            "transform",
            "--op",
            "polar",
            "--in",
            "l1norm.json",
            "--dual-box",
            "2",
            "--dual-shape",
            "41",
            "--out",
            "p.json",
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = read(&dir.path().join("p.json"));
    for (y, v) in nodes(&out) {
        if y.iter().all(|c| c.abs() < 2.0 - 1e-9) {
            let want = y[0].abs().max(y[1].abs());
            assert!((v - want).abs() <= 1e-2, "y={y:?}: {v} vs {want}");
        }
    }
    let diag = read(&dir.path().join("p.diag.json"));
    assert_eq!(diag["op"], "polar");
    assert!(diag["boundary_fraction"].as_f64().is_some());
}

#[test]
fn envelope_is_idempotent_and_below_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let f = |x: &[f64]| (x[0] * x[0]).min(0.5 + (x[0].abs() - 2.0).powi(2));
    write(dir.path(), "nonconvex.json", &grid(1, 3.0, 301, f));
    for (src, dst) in [("nonconvex.json", "e1.json"), ("e1.json", "e2.json")] {
        let o = polarity(
            dir.path(),
            &["transform", "--op", "envelope", "--in", src, "--out", dst],
            &[],
        );
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let e1 = nodes(&read(&dir.path().join("e1.json")));
    let e2 = nodes(&read(&dir.path().join("e2.json")));
    for ((x, a), (_, b)) in e1.iter().zip(&e2) {
        assert!(*a <= f(x) + 1e-12, "x={x:?}");
        assert!((a - b).abs() <= 1e-9 * (1.0 + a), "x={x:?}: {a} vs {b}");
    }
}

#[test]
fn j_of_square_is_square() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tsq.json", &grid(1, 3.0, 601, |x| x[0] * x[0]));
    let o = polarity(
        dir.path(),
        &[
            "transform",
            "--op",
            "j",
            "--in",
            "tsq.json",
            "--out",
            "j.json",
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for (s, v) in nodes(&read(&dir.path().join("j.json"))) {
        // The preimage 1/s of s lies in the box for |s| >= 1/3.
        if (0.5..=2.5).contains(&s[0].abs()) {
            assert!(
                (v - s[0] * s[0]).abs() <= 1e-2 * (1.0 + v),
                "s={}: {v}",
                s[0]
            );
        }
    }
}

#[test]
fn interpolate_writes_frames_then_manifest() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", &square());
    write(
        dir.path(),
        "b.json",
        &analytic(json!({"type": "quadratic", "a": [[8.0]]})),
    );
    let o = polarity(
        dir.path(),
        &[
            "interpolate",
            "--u0",
            "a.json",
            "--u1",
            "b.json",
            "--T",
            "1",
            "--steps",
            "11",
            "--out",
            "path",
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = read(&dir.path().join("path/manifest.json"));
    assert_eq!(m["schema"], 1);
    assert_eq!(m["frames"].as_array().unwrap().len(), 11);
    assert_eq!(m["times"].as_array().unwrap().len(), 11);
    assert!(m["created_unix"].as_u64().is_some());
    // Dual combination of y²/4 and y²/16 gives x²/(1 - 3t/4).
    for (k, t) in [(0usize, 0.0), (5, 0.5), (10, 1.0)] {
        let frame = read(&dir.path().join(format!("path/frame_{k:04}.json")));
        for (x, v) in nodes(&frame) {
            if (0.5..=1.5).contains(&x[0].abs()) {
                let want = x[0] * x[0] / (1.0 - 0.75 * t);
                assert!((v - want).abs() <= 2e-2, "t={t} x={x:?}: {v} vs {want}");
            }
        }
    }
    let names: Vec<String> = std::fs::read_dir(dir.path().join("path"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    assert_eq!(names.len(), 12, "{names:?}");
}

#[test]
fn hj_check_writes_passing_residuals() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "xsq.json", &square());
    let absnorm =
        analytic(json!({"type": "power_of_p_norm", "dim": 1, "p": 2.0, "q": 1.0, "scale": 1.0}));
    write(dir.path(), "absnorm.json", &absnorm);
    let o = polarity(
        dir.path(),
        &[
            "hj",
            "--f",
            "xsq.json",
            "--g",
            "absnorm.json",
            "--t-end",
            "1",
            "--steps",
            "21",
            "--check",
            "--format",
            "csv",
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("polarity-hj");
    let residuals = std::fs::read_to_string(out.join("residuals.csv")).unwrap();
    let mut lines = residuals.lines();
    assert_eq!(lines.next(), Some("t,x0,residual,tolerance,pass,note"));
    assert!(lines.clone().count() > 0);
    assert!(lines.all(|l| l.split(',').nth(4) == Some("true")));
    let frames = std::fs::read_to_string(out.join("frames.csv")).unwrap();
    assert_eq!(frames.lines().next(), Some("t,x0,u"));
    assert_eq!(frames.lines().count(), 1 + 21 * 257);
    let m = read(&out.join("manifest.json"));
    assert_eq!(m["csv"], "frames.csv");
    assert_eq!(m["residuals"], "residuals.csv");
}

#[test]
fn cauchy_refuses_past_blow_up_after_writing_frames() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "xsq.json", &square());
    let o = polarity(
        dir.path(),
        &[
            "cauchy", "--u0", "xsq.json", "--du0", "xsq.json", "--t-end", "2", "--steps", "41",
        ],
        &[],
    );
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("beyond the estimated maximal time"));
    let m = read(&dir.path().join("polarity-cauchy/manifest.json"));
    let t_est = m["t_est"].as_f64().unwrap();
    assert!((0.95..=1.0).contains(&t_est), "{t_est}");
    let refused = m["refused"].as_array().unwrap();
    assert_eq!(refused.last().unwrap().as_f64(), Some(2.0));
    assert_eq!(m["frames"].as_array().unwrap().len() + refused.len(), 41);
}

#[test]
fn negative_velocity_grid_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "u0.json", &grid(1, 3.0, 129, |x| x[0] * x[0]));
    write(dir.path(), "du0.json", &grid(1, 3.0, 129, |x| -x[0] * x[0]));
    let o = polarity(
        dir.path(),
        &[
            "cauchy", "--u0", "u0.json", "--du0", "du0.json", "--t-end", "1", "--steps", "5",
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // v = -1 gives x²/(1 + t).
    let last = read(&dir.path().join("polarity-cauchy/frame_0004.json"));
    for (x, v) in nodes(&last) {
        if (0.5..=1.5).contains(&x[0].abs()) {
            assert!((v - x[0] * x[0] / 2.0).abs() <= 2e-2, "x={x:?}: {v}");
        }
    }
}

#[test]
fn verify_on_inputs_passes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "xsq.json", &square());
    write(
        dir.path(),
        "quad2d.json",
        &analytic(json!({"type": "quadratic", "a": [[2.0, 0.5], [0.5, 1.0]]})),
    );
    let o = polarity(
        dir.path(),
        &["verify", "--suite", "involution", "--in", "xsq.json"],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["suite"], "involution");

    let o = polarity(
        dir.path(),
        &[
            "verify",
            "--suite",
            "hessian",
            "--in",
            "quad2d.json",
            "--format",
            "csv",
        ],
        &[],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let row = text
        .lines()
        .find(|l| l.contains("grid_det"))
        .expect("grid_det row");
    let measured: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!(measured <= 1e-3, "{measured}");
}

#[test]
fn failing_verification_exits_3_with_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let f = |x: &[f64]| (x[0] * x[0]).min(0.5 + (x[0].abs() - 2.0).powi(2));
    write(dir.path(), "nonconvex.json", &grid(1, 3.0, 257, f));
    let o = polarity(
        dir.path(),
        &[
            "verify",
            "--suite",
            "involution",
            "--in",
            "nonconvex.json",
            "--out",
            "r.json",
        ],
        &[],
    );
    assert_eq!(code(&o), 3);
    assert!(
        stderr(&o).contains("FAIL involution/input.error"),
        "{}",
        stderr(&o)
    );
    assert_eq!(read(&dir.path().join("r.json"))["passed"], false);
}

#[test]
fn usage_and_parse_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "xsq.json", &square());
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    let cases: &[&[&str]] = &[
        &["transform", "--op", "polar", "--in", "xsq.json", "--bogus"],
        &["transform", "--op", "nope", "--in", "xsq.json"],
        &["transform", "--op", "polar", "--in", "missing.json"],
        &["transform", "--op", "polar", "--in", "bad.json"],
        &["verify", "--suite", "everything"],
        &[
            "transform",
            "--op",
            "legendre",
            "--in",
            "xsq.json",
            "--dual-shape",
            "20",
        ],
        &[],
    ];
    for args in cases {
        let o = polarity(dir.path(), args, &[]);
        assert_eq!(code(&o), 1, "{args:?}: {}", stderr(&o));
    }
    let o = polarity(
        dir.path(),
        &["transform", "--op", "polar", "--in", "xsq.json"],
        &[("POLARITY_STEPS", "many")],
    );
    assert_eq!(code(&o), 1);
    assert_eq!(code(&polarity(dir.path(), &["--help"], &[])), 0);
}

#[test]
fn strict_truncation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tsq.json", &grid(1, 3.0, 121, |x| x[0] * x[0]));
    let args = [
        "transform",
        "--op",
        "polar",
        "--in",
        "tsq.json",
        "--dual-box",
        "4",
        "--dual-shape",
        "41",
    ];
    assert_eq!(code(&polarity(dir.path(), &args, &[])), 0);
    let mut strict = args.to_vec();
    strict.push("--strict");
    let o = polarity(dir.path(), &strict, &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("boundary"));
    assert_eq!(
        code(&polarity(dir.path(), &args, &[("POLARITY_STRICT", "true")])),
        2
    );
}

#[test]
fn identical_invocations_give_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", &square());
    write(
        dir.path(),
        "b.json",
        &analytic(json!({"type": "quadratic", "a": [[8.0]]})),
    );
    for out in ["r1", "r2"] {
        let args = [
            "interpolate",
            "--u0",
            "a.json",
            "--u1",
            "b.json",
            "--steps",
            "5",
            "--format",
            "csv",
            "--no-timestamp",
            "--out",
            out,
        ];
        assert_eq!(code(&polarity(dir.path(), &args, &[])), 0);
        let args = [
            "transform",
            "--op",
            "envelope",
            "--in",
            "a.json",
            "--no-timestamp",
            "--out",
        ];
        let mut args = args.to_vec();
        let name = format!("{out}.json");
        args.push(&name);
        assert_eq!(code(&polarity(dir.path(), &args, &[])), 0);
    }
    for name in [
        "manifest.json",
        "frames.csv",
        "frame_0000.json",
        "frame_0004.json",
    ] {
        let a = std::fs::read(dir.path().join("r1").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("r2").join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    for ext in ["json", "diag.json"] {
        let a = std::fs::read(dir.path().join(format!("r1.{ext}"))).unwrap();
        let b = std::fs::read(dir.path().join(format!("r2.{ext}"))).unwrap();
        assert_eq!(a, b, "{ext}");
    }
    assert!(read(&dir.path().join("r1/manifest.json"))
        .get("created_unix")
        .is_none());
}

#[test]
fn settings_follow_flag_env_file_precedence() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.json", &square());
    std::fs::write(dir.path().join("cfg.toml"), "steps = 3\nt_end = 2.0\n").unwrap();
    let frames = |out: &str| {
        let m = read(&dir.path().join(out).join("manifest.json"));
        let times: Vec<f64> = serde_json::from_value(m["times"].clone()).unwrap();
        times
    };
    let base = [
        "interpolate",
        "--u0",
        "a.json",
        "--u1",
        "a.json",
        "--config",
        "cfg.toml",
        "--out",
    ];
    let run = |out: &str, extra: &[&str], env: &[(&str, &str)]| {
        let mut args = base.to_vec();
        args.push(out);
        args.extend_from_slice(extra);
        let o = polarity(dir.path(), &args, env);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    run("file", &[], &[]);
    assert_eq!(frames("file"), vec![0.0, 1.0, 2.0]);
    run("env", &[], &[("POLARITY_STEPS", "5")]);
    assert_eq!(frames("env"), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    run(
        "flag",
        &["--steps", "2", "--t-end", "4"],
        &[("POLARITY_STEPS", "5")],
    );
    assert_eq!(frames("flag"), vec![0.0, 4.0]);
}

#[test]
fn info_reports_grid_summary() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "tsq.json", &grid(1, 3.0, 61, |x| x[0] * x[0]));
    let o = polarity(dir.path(), &["info", "--in", "tsq.json"], &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(s["kind"], "grid");
    assert_eq!(s["nodes"], 61);
    assert_eq!(s["class"]["in_cvx0"], true);
}
