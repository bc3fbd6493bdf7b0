import bisect
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from affine_top import _kernels
from affine_top.bcurve import b_enclosure
from affine_top.core import IDENTITY, Params, map_for_symbol
from affine_top.topcurve import (DIAGONAL, ContinuityViolation, MonotoneCurve, apply_map_to_curve,
                                 attractor_cover, box_dim_estimate, float_maps, hausdorff,
                                 iterate_top, iterate_top_float, mirror_curve, r_step, segment,
                                 simplify, upper_envelope, vertical_gap,
                                 within_box)

from .conftest import params


def value_at(c: MonotoneCurve, x):
    """Independent evaluation by bisection on the vertex list."""
    i = bisect.bisect_left(c.xs, x)
    if c.xs[i] == x:
        return c.ys[i]
    x0, x1, y0, y1 = c.xs[i - 1], c.xs[i], c.ys[i - 1], c.ys[i]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


def test_apply_map_examples(worked):
    assert apply_map_to_curve(map_for_symbol(worked, "0"), DIAGONAL) == segment(0, 0, F(2, 5), F(9, 10))
    assert apply_map_to_curve(map_for_symbol(worked, "1"), DIAGONAL) == segment(F(1, 10), F(3, 5), 1, 1)
    assert apply_map_to_curve(IDENTITY, DIAGONAL) == DIAGONAL


def test_envelope_examples():
    c2 = segment(0, F(1, 4), 1, F(3, 4))
    env = upper_envelope(DIAGONAL, c2)
    assert env == MonotoneCurve([F(0), F(1, 2), F(1)], [F(1, 4), F(1, 2), F(1)])
    assert upper_envelope(c2, c2) == c2
    with pytest.raises(ValueError):
        upper_envelope(segment(0, 0, F(1, 3), F(1, 3)), segment(F(1, 2), F(1, 2), 1, 1))


def test_envelope_of_b_images_against_grid(worked):
    up = b_enclosure(worked, 10).upper
    c0 = apply_map_to_curve(map_for_symbol(worked, "0"), up)
    c1 = apply_map_to_curve(map_for_symbol(worked, "1"), up)
    env = upper_envelope(c0, c1)
    assert env.domain == (0, 1)
    (a0, b0), (a1, b1) = c0.domain, c1.domain
    crossings = []
    prev = None
    for i in range(10_001):
        x = F(i, 10_000)
        vals = [value_at(c, x) for c, (a, b) in ((c0, (a0, b0)), (c1, (a1, b1))) if a <= x <= b]
        assert value_at(env, x) == max(vals)
        if len(vals) == 2:
            side = vals[0] > vals[1]
            if prev is not None and side != prev:
                crossings.append((x, vals[0]))
            prev = side
    # the images swap order only within one small region on x + y = 1
    assert crossings
    xs = [x for x, _ in crossings]
    assert max(xs) - min(xs) < F(1, 100)
    assert all(abs(x + y - 1) < F(1, 100) for x, y in crossings)


def test_r_step_of_diagonal_jumps(worked):
    # T1 of the diagonal starts at (1/10, 3/5), above T0 of it, so the
    # top of the union is discontinuous there
    with pytest.raises(ContinuityViolation) as exc:
        r_step(worked, DIAGONAL)
    assert exc.value.x == F(1, 10)
    assert (exc.value.left, exc.value.right) == (F(9, 40), F(3, 5))


def test_r_step_grows_from_lower_enclosure(worked):
    c = b_enclosure(worked, 10).lower
    r = r_step(worked, c)
    # the enclosure ends at (1, 1 - lam^10); T1 moves that to (1, 1 - lam^11)
    assert (r.xs[0], r.ys[0], r.xs[-1], r.ys[-1]) == (0, 0, 1, 1 - worked.lam ** 11)
    for x in set(c.xs) | set(r.xs):
        assert value_at(r, x) >= value_at(c, x)


def test_r_step_drop_below_enclosure_is_bounded(worked):
    # growth holds for B itself; a lower enclosure L <= B <= L + w only
    # gives R(L) >= R(B) - mu w >= L - mu w, and level 8 does dip
    enc = b_enclosure(worked, 8)
    dmin, x, _ = vertical_gap(enc.lower, r_step(worked, enc.lower))
    assert dmin < 0 and F(1, 10) < x < F(1, 8)
    assert -dmin <= worked.mu * enc.width


def test_iterate_top_exact(worked):
    it0 = iterate_top(worked, n=0, b_level=6)
    assert it0.level == 0 and it0.curve == b_enclosure(worked, 6).lower
    it = iterate_top(worked, n=4, b_level=6)
    assert it.ok and it.level == 4
    # later steps may dip within the slack left by simplification
    assert it.drops[0] == 0
    assert it.simplification_error <= 4 * F(1, 2 ** 16)


def test_iterate_top_float_geometric(worked):
    it = iterate_top_float(worked, n=20)
    assert it.ok and it.level == 20
    inc = np.array(it.increments)
    ratios = inc[5:] / inc[4:-1]
    # contraction by mu on the dominant branch
    assert np.all(ratios < 1) and abs(np.median(ratios) - 0.9) < 0.01


def test_exact_and_float_iterates_agree(worked):
    ex = iterate_top(worked, n=3, b_level=6)
    fl = iterate_top_float(worked, n=3, b_level=6, budget=None)
    xs = np.linspace(0, 1, 2001)
    ex_y = np.array([float(value_at(ex.curve, F(x))) for x in xs])
    assert np.abs(ex_y - fl.curve(xs)).max() < 3 * float(ex.simplification_error) + 1e-12


def test_cover_examples(worked):
    cov = attractor_cover(worked, 4, depth=0)
    assert cov.count() == 16 * 16
    with pytest.raises(MemoryError):
        attractor_cover(worked, 4, depth=40)
    cov = attractor_cover(worked, 8, depth=14)
    assert np.array_equal(cov.cells, cov.cells | cov.mirrored())


def test_cover_mirror_symmetry():
    for p in (Params("2/5", "9/10"), Params("9/20", "3/5")):
        cov = attractor_cover(p, 9, eps=2.0 ** -13, line_stop=True)
        assert np.array_equal(cov.cells, cov.mirrored())


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")
def test_cover_numba_matches_numpy(worked):
    maps = float_maps(worked)
    for stop in (False, True):
        a = _kernels.cover(maps, 256, 12, 0.0, use_numba=True, line_stop=stop)
        b = _kernels.cover(maps, 256, 12, 0.0, use_numba=False, line_stop=stop)
        assert np.array_equal(a[0], b[0]) and a[1] == b[1]


def test_box_dimension_estimates():
    est = box_dim_estimate(Params("9/20", "3/5"), 6, 11)
    assert 0.98 <= est.slope <= 1.18
    est = box_dim_estimate(Params("2/5", "9/10"), 6, 11)
    assert est.slope >= 1.2
    # maps with attractor the diagonal segment
    diag = np.array([[0.5, 0.0, 0.5, 0.0], [0.5, 0.5, 0.5, 0.5]])
    est = box_dim_estimate(Params("2/5", "9/10"), 6, 11, maps=diag)
    assert 0.95 <= est.slope <= 1.05
    with pytest.raises(ValueError):
        box_dim_estimate(Params("2/5", "9/10"), 6, 7)


def test_final_iterate_properties(worked):
    c = iterate_top_float(worked, n=20).curve
    cov = attractor_cover(worked, 10, depth=18, line_stop=True)
    n = cov.n
    stair = cov.top_staircase()
    lo = np.arange(n) / n
    d = 1 / n
    # below the cover and reaching its topmost cell, both up to one cell
    assert np.all(c(np.clip(lo + 1 / n - d, 0, 1)) - d <= stair)
    assert np.all(stair - 1 / n <= c(np.clip(lo + d, 0, 1)) + d)
    dist, err = hausdorff(c, mirror_curve(c))
    assert dist + err <= 1 / 1024
    # strictly increasing across every dyadic interval of width 2^-8
    grid = np.linspace(0, 1, 257)
    assert np.all(np.diff(c(grid)) > 0)


# --------------------------------------------------------------------------
# properties


@st.composite
def monotone_curves(draw, x0=None, x1=None, pinned=False):
    k = draw(st.integers(0, 6))
    inner = sorted(set(draw(st.lists(st.fractions(0, 1, max_denominator=64), min_size=k, max_size=k))))
    a = F(0) if x0 is None else x0
    b = F(1) if x1 is None else x1
    xs = [a] + [a + (b - a) * t for t in inner if 0 < t < 1] + [b]
    steps = draw(st.lists(st.fractions(0, 1, max_denominator=32), min_size=len(xs), max_size=len(xs)))
    ys = [sum(steps[:i + 1]) for i in range(len(xs))]
    if pinned:
        top = ys[-1] - ys[0]
        assume(top > 0)
        ys = [(y - ys[0]) / top for y in ys]
    return MonotoneCurve(xs, ys)


@settings(max_examples=30)
@given(monotone_curves(), monotone_curves(), st.randoms(use_true_random=False))
def test_envelope_is_pointwise_max(c1, c2, rnd):
    env = upper_envelope(c1, c2)
    for _ in range(1000):
        x = F(rnd.randint(0, 10 ** 6), 10 ** 6)
        assert value_at(env, x) == max(value_at(c1, x), value_at(c2, x))


@given(params(max_den=30), monotone_curves(pinned=True))
def test_r_step_endpoints(p, c):
    try:
        r = r_step(p, c)
    except ContinuityViolation:
        return
    assert (r.xs[0], r.ys[0], r.xs[-1], r.ys[-1]) == (0, 0, 1, 1)
    assert all(a <= b for a, b in zip(r.ys, r.ys[1:]))


@settings(max_examples=20)
@given(params(max_den=30), st.integers(4, 8))
def test_simplify_stays_within_budget(p, n):
    c = b_enclosure(p, n).lower
    s, dev = simplify(c, F(1, 2 ** 12))
    assert len(s) <= len(c)
    assert dev == 0 or within_box(c, s, dev)
    assert (s.xs[0], s.ys[0], s.xs[-1], s.ys[-1]) == (c.xs[0], c.ys[0], c.xs[-1], c.ys[-1])


def test_value_at_oracle_agrees_with_walker():
    rng = random.Random(3)
    c = b_enclosure(Params("2/5", "9/10"), 6).upper
    env = upper_envelope(c, c)
    for _ in range(200):
        x = F(rng.randint(0, 999), 999)
        assert value_at(env, x) == value_at(c, x)
