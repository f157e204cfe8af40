"""Smoke test for the curvereg extension module.

Build and install it first, e.g. `maturin develop -m crates/py/Cargo.toml`
or `maturin build -m crates/py/Cargo.toml` followed by `pip install` of the wheel.
"""

import math

import curvereg


def grid(n):
    return [i / (n - 1) for i in range(n)]


def main():
    t = grid(257)
    line = curvereg.Curve(t, t)
    parabola = curvereg.Curve(t, [s * s for s in t])
    assert len(line) == 257

    # d(t, t^2) = ||1 - sqrt(2t)|| = sqrt(2 - 4 sqrt(2) / 3) in closed form.
    d = curvereg.fr_distance(line, parabola)
    assert abs(d - math.sqrt(2.0 - 4.0 * math.sqrt(2.0) / 3.0)) < 1e-2, d

    q = curvereg.srvf(parabola)
    assert abs(q.eval(0.5) - 1.0) < 1e-3

    w = curvereg.Warp.family("one_param", [1.5])
    back = w.compose(w.invert())
    for s in t[::16]:
        assert abs(back.eval(s) - s) < 1e-9
    assert w.is_valid()

    curves, warps = curvereg.two_bump_panel(n=6, points=257, seed=3)
    pair = curvereg.elastic_align(curves[0], curves[1], grid_size=65)
    assert pair["warp"].is_valid()
    assert pair["distance"] >= 0.0

    res = curvereg.align(curves, method="karcher", grid_size=65, max_iter=5)
    ratio = res["variance_after"] / res["variance_before"]
    assert ratio < 0.1, ratio
    trace = res["objective_trace"]
    assert all(b <= a for a, b in zip(trace, trace[1:]))

    try:
        curvereg.Curve([0.0, 0.5, 0.4], [1.0, 2.0, 3.0])
    except ValueError:
        pass
    else:
        raise AssertionError("non-monotone grid accepted")

    print(f"ok: fr={d:.4f} karcher ratio={ratio:.4f} iterations={res['iterations']}")


if __name__ == "__main__":
    main()
