"""Smoke test for the Python bindings. Run after `pip install ./crates/python`."""

import math

import polarity as pl


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    sq = pl.Function.squared_norm(1)
    close(sq([1.5]), 2.25, 1e-15)

    # ‖·‖₁ and ‖·‖∞ are polar to each other, in closed form and on a grid.
    l1 = pl.Function.norm(2, 1.0)
    assert pl.polar(l1) == pl.Function.norm(2, math.inf)
    dual = pl.Lattice.symmetric(2, 2.0, 41)
    grid = pl.polar(l1.sample(pl.Lattice.symmetric(2, 128.0, 129)), dual)
    for y, v in zip(dual.points(), grid.values):
        if max(abs(c) for c in y) < 2.0:
            close(v, max(abs(c) for c in y), 1e-2)

    # Polar of a quadratic is the inverse quadratic; the gradient of x² at 1 is 2.
    y, pv = pl.polar_gradient(sq, [1.0])
    close(y[0], 2.0, 1e-12)
    close(pv, 1.0, 1e-12)
    assert pl.polar_gradient(pl.Function.norm(1, 2.0), [1.0]) is None

    h = pl.hessian_of_polar(pl.Function.quadratic([[2.0, 0.5], [0.5, 1.0]]), [0.6, -0.4])
    assert h.det_residual < 1e-8, h.det_residual

    # Envelope of x² recovers it; ginf of x² with itself halves it.
    f = sq.sample(pl.Lattice.symmetric(1, 3.0, 257))
    env = pl.envelope(f)
    half = pl.ginf(f, f, pl.Lattice.symmetric(1, 12.0, 801))
    for (x,), e, g in zip(f.lattice.points(), env.values, half.values):
        if abs(x) <= 1.5:
            close(e, x * x, 2e-2)
            close(g, x * x / 2, 1e-2)

    # HJ with Hamiltonian y²/2 maps x² to x²/(1+2t).
    path = pl.solve_hj(f, 0.5 * sq, [0.0, 0.5, 1.0], pl.Lattice.symmetric(1, 12.0, 1025))
    frame = path.frame_at(1.0)
    close(frame([1.0]), 1.0 / 3.0, 2e-2)

    # Cauchy data u0 = x², du0 = x² blows up at t = 1.
    path, t_est, refused = pl.solve_ma_cauchy(
        f, f.values, [0.0, 0.5, 1.0, 1.5], pl.Lattice.symmetric(1, 12.0, 513)
    )
    assert 0.95 <= t_est <= 1.0 and refused == [1.5], (t_est, refused)

    assert pl.Function.from_json(f.to_json()) == f
    try:
        pl.Lattice.symmetric(1, 1.0, 4)
    except pl.PolarityError:
        pass
    else:
        raise AssertionError("even node count accepted")

    rows = pl.run_verify("hessian")
    assert rows and all(r.passed for r in rows), rows
    print(f"ok: {len(rows)} hessian checks, t_est={t_est}")


if __name__ == "__main__":
    main()
