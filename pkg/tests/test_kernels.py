import os
import subprocess
import sys
from fractions import Fraction as F

import numpy as np
import pytest

from affine_top import _kernels
from affine_top.certify import _Encoded, default_dictionary, point_check
from affine_top.core import Params
from affine_top.topcurve import (FloatCurve, MonotoneCurve, curve_arrays, simplify_float,
                                 upper_envelope)

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


def _flag(env_value):
    env = dict(os.environ)
    if env_value is None:
        env.pop("AFFINE_TOP_NUMBA", None)
    else:
        env["AFFINE_TOP_NUMBA"] = env_value
    res = subprocess.run([sys.executable, "-c", "from affine_top import _kernels; print(_kernels.USE_NUMBA)"],
                         capture_output=True, text=True, env=env, timeout=120)
    return res.stdout.strip()


def test_env_switch():
    assert _flag("0") == "False"
    assert _flag(None) == str(_kernels.HAVE_NUMBA)


@needs_numba
def test_dp_paths_agree():
    rng = np.random.default_rng(1)
    for n in (2, 3, 50, 5000):
        xs = np.sort(rng.random(n))
        xs[0], xs[-1] = 0.0, 1.0
        ys = np.cumsum(rng.random(n))
        for euclid in (False, True):
            a = _kernels.dp_simplify(xs, ys, 1e-3, euclid=euclid, use_numba=True)
            b = _kernels.dp_simplify(xs, ys, 1e-3, euclid=euclid, use_numba=False)
            assert np.array_equal(a, b)
            assert a[0] and a[-1]


def test_vertical_simplification_bound():
    rng = np.random.default_rng(2)
    xs = np.linspace(0, 1, 4000)
    ys = np.cumsum(rng.random(4000)) / 4000
    c = FloatCurve(xs, ys)
    s, dev = simplify_float(c, 1e-4)
    assert len(s) < len(c) and dev <= 1e-4
    assert np.abs(s(xs) - ys).max() == dev


@needs_numba
def test_word_margins_paths_agree():
    enc = _Encoded(default_dictionary(1, 5))
    for lam, mu in ((0.4, 0.9), (0.45, 0.6), (0.3, 0.95)):
        a = _kernels.word_margins(lam, mu, enc.sym, enc.plen, enc.vlen, use_numba=True)
        b = _kernels.word_margins(lam, mu, enc.sym, enc.plen, enc.vlen, use_numba=False)
        assert np.allclose(a, b, rtol=0, atol=1e-12, equal_nan=True)


def test_word_margins_sign_matches_exact():
    words = default_dictionary(1, 5)
    enc = _Encoded(words)
    for lam, mu in (("2/5", "9/10"), ("1/3", "4/5"), ("3/5", "7/10")):
        p = Params(lam, mu)
        m = _kernels.word_margins(float(p.lam), float(p.mu), enc.sym, enc.plen, enc.vlen)
        for w, v in zip(words, m):
            if abs(v) > 1e-9:
                assert (v > 0) == point_check(p, w), (lam, mu, str(w), v)


def test_float_envelope_matches_exact():
    c1 = MonotoneCurve([F(0), F(1, 3), F(1)], [F(0), F(1, 2), F(3, 5)])
    c2 = MonotoneCurve([F(1, 5), F(1, 2), F(1)], [F(1, 10), F(3, 10), F(9, 10)])
    ex = upper_envelope(c1, c2)
    xs, ys, jump = _kernels.envelope_np(*curve_arrays(c1), *curve_arrays(c2))
    assert jump <= 1e-12
    grid = np.linspace(0, 1, 1001)
    exx, exy = curve_arrays(ex)
    assert np.abs(np.interp(grid, xs, ys) - np.interp(grid, exx, exy)).max() < 1e-12
