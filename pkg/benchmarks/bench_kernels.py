"""Time the numba kernels against their numpy fallbacks.

    python benchmarks/bench_kernels.py [--repeat 3] [--quick]

Each kernel runs once untimed (to compile), then ``--repeat`` times on each
path.  Results from both paths must agree or the script exits 1.
"""
import argparse
import sys
import time

import numpy as np

from affine_top import _kernels
from affine_top.certify import _Encoded, default_dictionary
from affine_top.core import Params
from affine_top.topcurve import float_maps


def best_of(fn, repeat):
    fn()
    times = []
    out = None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t)
    return min(times), out


def cases(quick):
    p = Params("9/20", "3/5")
    maps = float_maps(p)
    k, depth = (8, 14) if quick else (10, 18)
    yield ("cover", f"2^{k} grid, depth {depth}",
           lambda nb: _kernels.cover(maps, 1 << k, depth, 0.0, use_numba=nb, line_stop=True),
           lambda a, b: np.array_equal(a[0], b[0]) and a[1] == b[1])

    rng = np.random.default_rng(0)
    n = 20_000 if quick else 200_000
    xs = np.linspace(0.0, 1.0, n)
    ys = np.cumsum(rng.random(n)) / n
    yield ("dp_simplify", f"{n} vertices, vertical",
           lambda nb: _kernels.dp_simplify(xs, ys, 1e-5, use_numba=nb),
           np.array_equal)

    enc = _Encoded(default_dictionary())
    pts = rng.random((50 if quick else 400, 2))
    pts = [(0.5 * a, 0.5 + 0.5 * b) for a, b in pts]

    def margins(nb):
        return np.stack([_kernels.word_margins(lam, mu, enc.sym, enc.plen, enc.vlen, use_numba=nb)
                         for lam, mu in pts])

    yield ("word_margins", f"{len(enc.words)} words x {len(pts)} points", margins,
           lambda a, b: np.allclose(a, b, rtol=0, atol=1e-12, equal_nan=True))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--quick", action="store_true")
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 0
    print(f"{'kernel':<14}{'case':<32}{'numba s':>10}{'numpy s':>10}{'speedup':>9}  agree")
    bad = 0
    for name, label, fn, same in cases(args.quick):
        t_nb, r_nb = best_of(lambda: fn(True), args.repeat)
        t_np, r_np = best_of(lambda: fn(False), args.repeat)
        ok = bool(same(r_nb, r_np))
        bad += not ok
        print(f"{name:<14}{label:<32}{t_nb:>10.4f}{t_np:>10.4f}{t_np / t_nb:>8.1f}x  {ok}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
