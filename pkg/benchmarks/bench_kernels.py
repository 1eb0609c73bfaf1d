"""Compare the numba and numpy truncated-product kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat 200]

Prints one line per jet shape (variables, order) with the time per product
for each path, their ratio and the largest difference between the results.
A full curvature evaluation is timed the same way at the end.
"""
import argparse
import time

import numpy as np

from crweyl import _kernels
from crweyl.backend import get_backend
from crweyl.jet import JetSpace

SHAPES = [(4, 4), (6, 4), (6, 6), (8, 5)]


def _time(fn, repeat):
    fn()  # warm-up (and numba compilation)
    t = time.perf_counter()
    for _ in range(repeat):
        out = fn()
    return (time.perf_counter() - t) / repeat, out


def bench_product(nvar, order, repeat, rng):
    sp = JetSpace.get(nvar, order)
    m = sp.size(order)
    ia, ib, it, starts, npairs = sp.pairs()
    a = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    b = rng.standard_normal(m) + 1j * rng.standard_normal(m)
    args = (a, b, ia, ib, it, starts, npairs[order], m)
    prev = _kernels.set_numba(True)
    try:
        t_nb, r_nb = _time(lambda: _kernels.truncated_product(*args), repeat)
    finally:
        _kernels.set_numba(prev)
    t_np, r_np = _time(lambda: _kernels.product_numpy(*args), repeat)
    return m, npairs[order], t_nb, t_np, float(np.max(np.abs(r_nb - r_np)))


def bench_curvature(repeat):
    from crweyl import pseudohermitian as ph
    from crweyl.catalog import build_surface, parse_point
    from crweyl.frame import context_build
    be = get_backend("float", 53)
    s, _, _ = build_surface("ellipsoid-rev:a=1/2")
    pt = parse_point("sqrt(1/2), 0, 1i", be)
    rows = []
    for flag in (True, False):
        prev = _kernels.set_numba(flag)
        try:
            t, _ = _time(lambda: ph.curvature_general(context_build(s, pt, be)), repeat)
        finally:
            _kernels.set_numba(prev)
        rows.append(t)
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba is not importable; only the numpy path exists")
        return
    rng = np.random.default_rng(0)
    print(f"{'vars':>4} {'order':>5} {'coeffs':>7} {'pairs':>8} {'numba us':>10} {'numpy us':>10} {'ratio':>6} {'max diff':>9}")
    for nvar, order in SHAPES:
        m, npairs, t_nb, t_np, diff = bench_product(nvar, order, args.repeat, rng)
        print(f"{nvar:4d} {order:5d} {m:7d} {npairs:8d} {t_nb * 1e6:10.1f} {t_np * 1e6:10.1f} "
              f"{t_np / t_nb:6.2f} {diff:9.1e}")
    t_nb, t_np = bench_curvature(max(1, args.repeat // 50))
    print(f"curvature on E(1/2) at p0, 53-bit: numba {t_nb * 1e3:.1f} ms, numpy {t_np * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
