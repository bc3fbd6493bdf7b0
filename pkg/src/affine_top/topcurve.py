"""The operator R(c) = top boundary of T0(c) u T1(c) on monotone curves,
its iteration towards the top boundary of A, attractor covers and a
box-counting dimension estimate.

Curves are exact (Fraction vertices).  Covers and the dimension estimate
are floating point and live on the kernels in :mod:`affine_top._kernels`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from . import _kernels
from .bcurve import MonotoneCurve, b_enclosure
from .core import DiagAffineMap, Params, map_for_symbol

DEFAULT_BUDGET = Fraction(1, 2 ** 16)
SNAP_BITS = 64
MAX_COVER_DEPTH = 26


class ContinuityViolation(ValueError):
    """The envelope of two curve images jumps at ``x``."""

    def __init__(self, x, left, right):
        super().__init__(f"envelope jumps at x={float(x):.9g}: {float(left):.9g} -> {float(right):.9g}")
        self.x, self.left, self.right = x, left, right


class MonotonicityViolation(ValueError):
    def __init__(self, step, x, drop):
        super().__init__(f"iterate {step} drops by {float(drop):.3g} at x={float(x):.9g}")
        self.step, self.x, self.drop = step, x, drop


def apply_map_to_curve(m: DiagAffineMap, c: MonotoneCurve) -> MonotoneCurve:
    if not (m.ax > 0 and m.dy > 0):
        raise ValueError("map must preserve orientation on both axes")
    return MonotoneCurve([m.ax * x + m.ex for x in c.xs], [m.dy * y + m.fy for y in c.ys])


def segment(x0, y0, x1, y1) -> MonotoneCurve:
    return MonotoneCurve([Fraction(x0), Fraction(x1)], [Fraction(y0), Fraction(y1)])


DIAGONAL = segment(0, 0, 1, 1)


class _Walker:
    """Sequential evaluation of a curve at nondecreasing x."""

    def __init__(self, c: MonotoneCurve):
        self.c, self.i = c, 0

    def __call__(self, x):
        xs, ys = self.c.xs, self.c.ys
        while self.i + 1 < len(xs) and xs[self.i + 1] < x:
            self.i += 1
        i = self.i
        if xs[i] == x:
            return ys[i]
        if i + 1 < len(xs) and xs[i + 1] == x:
            return ys[i + 1]
        x0, x1 = xs[i], xs[i + 1]
        return ys[i] + (ys[i + 1] - ys[i]) * (x - x0) / (x1 - x0)


def _merge_xs(a, b):
    out = []
    i = j = 0
    while i < len(a) or j < len(b):
        if j >= len(b) or (i < len(a) and a[i] < b[j]):
            v = a[i]
            i += 1
        elif i >= len(a) or b[j] < a[i]:
            v = b[j]
            j += 1
        else:
            v = a[i]
            i += 1
            j += 1
        out.append(v)
    return out


def _drop_collinear(xs, ys):
    ox, oy = [xs[0]], [ys[0]]
    for k in range(1, len(xs) - 1):
        x0, y0 = ox[-1], oy[-1]
        if (ys[k] - y0) * (xs[k + 1] - x0) == (ys[k + 1] - y0) * (xs[k] - x0):
            continue
        ox.append(xs[k])
        oy.append(ys[k])
    if len(xs) > 1:
        ox.append(xs[-1])
        oy.append(ys[-1])
    return ox, oy


def upper_envelope(c1: MonotoneCurve, c2: MonotoneCurve) -> MonotoneCurve:
    """Pointwise maximum over the union of the two domains, with exact crossings."""
    (a1, b1), (a2, b2) = c1.domain, c2.domain
    olo, ohi = max(a1, a2), min(b1, b2)
    if olo > ohi:
        raise ValueError("curve domains do not form an interval")
    xs = _merge_xs(c1.xs, c2.xs)
    w1, w2 = _Walker(c1), _Walker(c2)
    vals = []
    for x in xs:
        v1 = w1(x) if a1 <= x <= b1 else None
        v2 = w2(x) if a2 <= x <= b2 else None
        vals.append((v1, v2))

    # a curve entering (or leaving) above the other makes a jump
    for edge in (olo, ohi):
        i = xs.index(edge)
        v1, v2 = vals[i]
        if edge == olo and a1 != a2:
            outer, inner = (v1, v2) if a1 < a2 else (v2, v1)
            if inner > outer:
                raise ContinuityViolation(edge, outer, inner)
        if edge == ohi and b1 != b2:
            outer, inner = (v1, v2) if b1 > b2 else (v2, v1)
            if inner > outer:
                raise ContinuityViolation(edge, inner, outer)

    rx, ry = [], []
    prev = None
    for x, (v1, v2) in zip(xs, vals):
        if v1 is not None and v2 is not None:
            d = v1 - v2
            if prev is not None and prev[2] * d < 0:
                px, pv1, pd = prev
                t = pd / (pd - d)
                cx = px + t * (x - px)
                rx.append(cx)
                ry.append(pv1 + t * (v1 - pv1))
            prev = (x, v1, d)
        else:
            prev = None
        rx.append(x)
        ry.append(v1 if v2 is None else v2 if v1 is None else max(v1, v2))
    rx, ry = _drop_collinear(rx, ry)
    return MonotoneCurve(rx, ry)


def r_step(p: Params, c: MonotoneCurve) -> MonotoneCurve:
    """R(c): top of T0(c) u T1(c).  Raises :class:`ContinuityViolation`."""
    return upper_envelope(apply_map_to_curve(map_for_symbol(p, "0"), c),
                          apply_map_to_curve(map_for_symbol(p, "1"), c))


def vertical_gap(lower: MonotoneCurve, upper: MonotoneCurve):
    """(min, argmin x, max) of upper - lower over the common domain, exact."""
    lo = max(lower.domain[0], upper.domain[0])
    hi = min(lower.domain[1], upper.domain[1])
    wl, wu = _Walker(lower), _Walker(upper)
    best_min = best_max = None
    arg = None
    for x in _merge_xs(lower.xs, upper.xs):
        if x < lo or x > hi:
            continue
        d = wu(x) - wl(x)
        if best_min is None or d < best_min:
            best_min, arg = d, x
        if best_max is None or d > best_max:
            best_max = d
    return best_min, arg, best_max


def _snap(q: Fraction, bits: int, up: bool) -> Fraction:
    scale = 1 << bits
    num = q.numerator * scale
    k = -((-num) // q.denominator) if up else num // q.denominator
    return Fraction(k, scale)


def shifted(c: MonotoneCurve, dx, dy) -> MonotoneCurve:
    """x -> c(clamp(x + dx)) + dy on the domain of ``c``."""
    a, b = c.domain
    pts = {a: None, b: None}
    for x in c.xs:
        if a < x - dx < b:
            pts[x - dx] = None
    xs = sorted(pts)
    w = _Walker(c)
    ys = [w(min(max(x + dx, a), b)) + dy for x in xs]
    return MonotoneCurve(xs, ys)


def within_box(c: MonotoneCurve, s: MonotoneCurve, delta) -> bool:
    """Exact test that the graphs of c and s are within Hausdorff distance
    ``delta`` in the max-norm (both curves continuous, monotone, same domain).

    For such graphs this is equivalent to
    c(x - delta) - delta <= s(x) <= c(x + delta) + delta and the same with
    c and s exchanged.
    """
    for f, g in ((c, s), (s, c)):
        if vertical_gap(shifted(f, -delta, -delta), g)[0] < 0:
            return False
        if vertical_gap(g, shifted(f, delta, delta))[0] < 0:
            return False
    return True


def simplify(c: MonotoneCurve, budget: Fraction = DEFAULT_BUDGET,
             bits: int = SNAP_BITS) -> tuple[MonotoneCurve, Fraction]:
    """Drop vertices (Douglas-Peucker on floats) and snap to a dyadic grid.

    Returns the new curve and the deviation bound ``budget``, verified
    exactly with :func:`within_box`.  If a candidate misses the bound the
    selection tolerance is tightened and the candidate rebuilt.
    """
    if len(c) <= 2:
        return c, Fraction(0)
    fx = np.array([float(x) for x in c.xs])
    fy = np.array([float(y) for y in c.ys])
    tol = float(budget) / 2
    while True:
        keep = _kernels.dp_simplify(fx, fy, tol, euclid=True)
        xs, ys = [], []
        for i in np.flatnonzero(keep):
            x, y = c.xs[i], c.ys[i]
            if 0 < i < len(c) - 1:
                x, y = _snap(x, bits, False), _snap(y, bits, False)
            if xs and x <= xs[-1]:
                continue
            if ys and y < ys[-1]:
                y = ys[-1]
            xs.append(x)
            ys.append(y)
        if xs[-1] != c.xs[-1]:
            xs[-1], ys[-1] = c.xs[-1], c.ys[-1]
        out = MonotoneCurve(xs, ys)
        if within_box(c, out, budget):
            return out, budget
        if tol < 1e-18:
            return c, Fraction(0)
        tol /= 4


@dataclass
class CurveIterate:
    level: int
    curve: MonotoneCurve
    params: Params
    start: str = "b-lower"
    increments: list = field(default_factory=list)
    simplification_error: Fraction = Fraction(0)
    drops: list = field(default_factory=list)
    diagnostic: Optional[Exception] = None

    @property
    def ok(self) -> bool:
        return self.diagnostic is None


def iterate_top(p: Params, start: Optional[MonotoneCurve] = None, n: int = 20,
                budget: Optional[Fraction] = DEFAULT_BUDGET, b_level: int = 10,
                start_name: Optional[str] = None) -> CurveIterate:
    """n-fold R from ``start`` (default: lower enclosure of B at ``b_level``).

    Each exact step is checked for R(c) >= c; the increments are the sup of
    R(c) - c.  With ``budget`` set, every iterate is simplified and the
    deviation (max-norm Hausdorff, verified exactly) accumulates in
    ``simplification_error``.  Perturbing c by d moves R(c) by at most mu*d,
    so after simplifications d_1, d_2, ... the iterate can sit below its image
    by at most v with v <- mu*v + (1 + mu)*d_k; the monotonicity check
    tolerates exactly that, in the box sense.
    """
    if start is None:
        start = b_enclosure(p, b_level).lower
        start_name = start_name or f"b-lower@{b_level}"
    res = CurveIterate(0, start, p, start_name or "custom")
    c = start
    slack = Fraction(0)
    for k in range(1, n + 1):
        try:
            nxt = r_step(p, c)
        except ContinuityViolation as exc:
            res.diagnostic = exc
            return res
        dmin, xarg, dmax = vertical_gap(c, nxt)
        res.drops.append(max(-dmin, Fraction(0)))
        if dmin < 0 and (slack == 0 or vertical_gap(shifted(c, -slack, -slack), nxt)[0] < 0):
            res.diagnostic = MonotonicityViolation(k, xarg, -dmin)
            return res
        res.increments.append(dmax)
        dev = Fraction(0)
        if budget is not None:
            nxt, dev = simplify(nxt, budget)
            res.simplification_error += dev
        slack = p.mu * slack + (1 + p.mu) * dev
        c = nxt
        res.level = k
        res.curve = c
    return res


# --------------------------------------------------------------------------
# float64 iteration
#
# Exact curves roughly double in size per step while keeping a vertical
# error budget, because the top boundary is Hoelder (not Lipschitz) at the
# origin.  Long iterations therefore run on float64 arrays with vertical
# Douglas-Peucker; rounding is tracked by a fixed per-step allowance.

VERTICAL_BUDGET = 2.0 ** -20
ROUNDING_ALLOWANCE = 2.0 ** -40


@dataclass
class FloatCurve:
    xs: np.ndarray
    ys: np.ndarray

    @classmethod
    def from_exact(cls, c: MonotoneCurve) -> "FloatCurve":
        return cls(*curve_arrays(c))

    def __len__(self):
        return len(self.xs)

    def __call__(self, x):
        return np.interp(x, self.xs, self.ys)

    @property
    def domain(self):
        return float(self.xs[0]), float(self.xs[-1])

    def to_exact(self) -> MonotoneCurve:
        return MonotoneCurve([Fraction(float(x)) for x in self.xs],
                             [Fraction(float(y)) for y in self.ys])


def r_step_float(p: Params, c: FloatCurve, jump_tol: float = 1e-9) -> FloatCurve:
    lam, mu = float(p.lam), float(p.mu)
    x0, y0 = lam * c.xs, mu * c.ys
    x1, y1 = mu * c.xs + (1 - mu), lam * c.ys + (1 - lam)
    xs, ys, jump = _kernels.envelope_np(x0, y0, x1, y1)
    if jump > jump_tol:
        x = lam if y0[-1] > np.interp(lam, x1, y1) + jump_tol else 1 - mu
        raise ContinuityViolation(x, float(np.interp(x, x0, y0)), float(np.interp(x, x1, y1)))
    return FloatCurve(xs, ys)


def simplify_float(c: FloatCurve, budget: float = VERTICAL_BUDGET) -> tuple[FloatCurve, float]:
    """Vertical Douglas-Peucker; returns the curve and its measured deviation."""
    keep = _kernels.dp_simplify(c.xs, c.ys, budget * 0.99)
    out = FloatCurve(c.xs[keep], c.ys[keep])
    dev = float(np.abs(out(c.xs) - c.ys).max())
    return out, dev


def iterate_top_float(p: Params, start=None, n: int = 20,
                      budget: Optional[float] = VERTICAL_BUDGET, b_level: int = 10,
                      start_name: Optional[str] = None) -> CurveIterate:
    """Float64 counterpart of :func:`iterate_top` with a vertical budget.

    A drop of R(c) below c is tolerated up to the propagated simplification
    error (see :func:`iterate_top`) plus the rounding allowance.  ``simplification_error`` is the
    sum of measured deviations and allowances.
    """
    if start is None:
        start = b_enclosure(p, b_level).lower
        start_name = start_name or f"b-lower@{b_level}"
    c = start if isinstance(start, FloatCurve) else FloatCurve.from_exact(start)
    res = CurveIterate(0, c, p, start_name or "custom", simplification_error=0.0)
    mu = float(p.mu)
    slack = 0.0
    for k in range(1, n + 1):
        try:
            nxt = r_step_float(p, c)
        except ContinuityViolation as exc:
            res.diagnostic = exc
            return res
        dmin, xarg, dmax = _kernels.vertical_gap_np(c.xs, c.ys, nxt.xs, nxt.ys)
        res.drops.append(max(-dmin, 0.0))
        if dmin < -(slack + ROUNDING_ALLOWANCE):
            res.diagnostic = MonotonicityViolation(k, xarg, -dmin)
            return res
        res.increments.append(dmax)
        dev = 0.0
        if budget is not None:
            nxt, dev = simplify_float(nxt, budget)
        res.simplification_error += dev + ROUNDING_ALLOWANCE
        slack = mu * slack + (1 + mu) * (dev + ROUNDING_ALLOWANCE)
        c = nxt
        res.level = k
        res.curve = c
    return res


# --------------------------------------------------------------------------
# float geometry on curves


def curve_arrays(c) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(c, FloatCurve):
        return c.xs, c.ys
    return (np.array([float(x) for x in c.xs]), np.array([float(y) for y in c.ys]))


def mirror_curve(c):
    """Image of the graph under (x, y) -> (1 - y, 1 - x), as a graph where possible.

    For a :class:`FloatCurve` the image is returned as a polyline whose x
    may repeat (flat pieces become vertical ones); fine for :func:`hausdorff`.
    """
    if isinstance(c, FloatCurve):
        return FloatCurve(1 - c.ys[::-1], 1 - c.xs[::-1])
    xs = [1 - y for y in reversed(c.ys)]
    ys = [1 - x for x in reversed(c.xs)]
    ox, oy = [xs[0]], [ys[0]]
    for x, y in zip(xs[1:], ys[1:]):
        if x == ox[-1]:
            oy[-1] = max(oy[-1], y)  # flat pieces of c become vertical jumps
            continue
        ox.append(x)
        oy.append(y)
    return MonotoneCurve(ox, oy)


def _densify(x, y, step):
    seg = np.hypot(np.diff(x), np.diff(y))
    counts = np.maximum(1, np.ceil(seg / step).astype(int))
    px, py = [], []
    for i, k in enumerate(counts):
        t = np.arange(k) / k
        px.append(x[i] + t * (x[i + 1] - x[i]))
        py.append(y[i] + t * (y[i + 1] - y[i]))
    px.append(x[-1:])
    py.append(y[-1:])
    return np.concatenate(px), np.concatenate(py)


def hausdorff(c1: MonotoneCurve, c2: MonotoneCurve, step: float = 2.0 ** -14) -> tuple[float, float]:
    """Hausdorff distance between two polyline graphs (float).

    Both polylines are sampled with spacing ``step``; returns
    ``(distance, error_bound)`` with the true value within the bound.
    """
    from scipy.spatial import cKDTree

    a = np.column_stack(_densify(*curve_arrays(c1), step))
    b = np.column_stack(_densify(*curve_arrays(c2), step))
    d1 = cKDTree(b).query(a)[0].max()
    d2 = cKDTree(a).query(b)[0].max()
    return float(max(d1, d2)), step


# --------------------------------------------------------------------------
# attractor covers


@dataclass
class BoxCover:
    k: int
    cells: np.ndarray  # bool, indexed [column, row]
    depth: Optional[int] = None
    eps: Optional[float] = None
    leaves: int = 0

    @property
    def n(self) -> int:
        return self.cells.shape[0]

    def count(self) -> int:
        return int(self.cells.sum())

    def coarsen(self, k: int) -> "BoxCover":
        if k > self.k:
            raise ValueError("can only coarsen")
        f = 1 << (self.k - k)
        m = self.n // f
        cells = self.cells.reshape(m, f, m, f).any(axis=(1, 3))
        return BoxCover(k, cells, self.depth, self.eps, self.leaves)

    def top_staircase(self) -> np.ndarray:
        """Per column, the upper edge of the topmost occupied cell (nan if empty)."""
        n = self.n
        occ = self.cells
        rows = np.where(occ.any(axis=1), n - 1 - np.argmax(occ[:, ::-1], axis=1), -1)
        out = (rows + 1) / n
        return np.where(rows >= 0, out, np.nan)

    def mirrored(self) -> np.ndarray:
        """Cells under (x, y) -> (1 - y, 1 - x): cell (i, j) -> (n-1-j, n-1-i)."""
        return self.cells[::-1, ::-1].T

    def to_pgm(self) -> bytes:
        img = np.where(self.cells.T[::-1], 0, 255).astype(np.uint8)
        return f"P5\n{self.n} {self.n}\n255\n".encode() + img.tobytes()

    def to_ppm(self, color=(20, 60, 160)) -> bytes:
        img = np.full((self.n, self.n, 3), 255, dtype=np.uint8)
        img[self.cells.T[::-1]] = color
        return f"P6\n{self.n} {self.n}\n255\n".encode() + img.tobytes()

    def to_csv(self) -> str:
        ii, jj = np.nonzero(self.cells)
        return "col,row\n" + "".join(f"{i},{j}\n" for i, j in zip(ii, jj))


def float_maps(p: Params) -> np.ndarray:
    lam, mu = float(p.lam), float(p.mu)
    return np.array([[lam, 0.0, mu, 0.0], [mu, 1 - mu, lam, 1 - lam]])


def attractor_cover(p: Params, k: int, depth: Optional[int] = None,
                    eps: Optional[float] = None, maps: Optional[np.ndarray] = None,
                    use_numba: Optional[bool] = None, line_stop: bool = False) -> BoxCover:
    """Cells of the 2^k grid met by the images of [0,1]^2 under words.

    Words stop at length ``depth`` or once their image rectangle has
    diameter below ``eps`` (whichever applies first).  ``line_stop`` also
    stops at rectangles lying in one grid row or column.  That is exact when
    both coordinate projections of the attractor are all of [0, 1] (true for
    every admissible pair, since lam + mu > 1): the image of the attractor
    then meets every cell of such a rectangle.
    """
    if depth is None and eps is None:
        raise ValueError("give depth or eps")
    if depth is not None and depth > MAX_COVER_DEPTH:
        raise MemoryError(f"depth {depth} exceeds the cap {MAX_COVER_DEPTH}")
    m = float_maps(p) if maps is None else maps
    grid, leaves = _kernels.cover(m, 1 << k, -1 if depth is None else depth,
                                  0.0 if eps is None else eps, use_numba=use_numba,
                                  line_stop=line_stop)
    if leaves < 0:
        raise MemoryError("cover exceeded the leaf cap")
    return BoxCover(k, grid, depth, eps, leaves)


@dataclass
class BoxDimEstimate:
    slope: float
    intercept: float
    stderr: float
    ks: list
    counts: list

    @property
    def band(self) -> tuple[float, float]:
        return self.slope - 2 * self.stderr, self.slope + 2 * self.stderr


def fit_box_dimension(ks, counts) -> BoxDimEstimate:
    ks = np.asarray(ks, dtype=float)
    logs = np.log2(np.asarray(counts, dtype=float))
    if len(ks) < 3:
        raise ValueError("need at least 3 scales")
    A = np.column_stack((ks, np.ones_like(ks)))
    coef, res, *_ = np.linalg.lstsq(A, logs, rcond=None)
    resid = logs - A @ coef
    dof = len(ks) - 2
    s2 = float(resid @ resid) / dof if dof else 0.0
    stderr = math.sqrt(s2 / float(((ks - ks.mean()) ** 2).sum()))
    return BoxDimEstimate(float(coef[0]), float(coef[1]), stderr, [int(k) for k in ks],
                          [int(c) for c in counts])


def box_dim_estimate(p: Params, kmin: int = 6, kmax: int = 11, maps=None,
                     use_numba: Optional[bool] = None) -> BoxDimEstimate:
    """Least-squares slope of log2 N(2^-k) against k.

    One cover is computed at the finest scale (see ``line_stop`` in
    :func:`attractor_cover`) and coarsened for the other scales.
    """
    if kmax - kmin + 1 < 3:
        raise ValueError("need at least 3 scales")
    if kmax > 12:
        raise ValueError("kmax above the cap 12")
    fine = attractor_cover(p, kmax, eps=2.0 ** -kmax / 16, maps=maps, use_numba=use_numba,
                           line_stop=True)
    ks = list(range(kmin, kmax + 1))
    counts = [fine.coarsen(k).count() for k in ks]
    return fit_box_dimension(ks, counts)
