"""Polygon towers Y_n built from the truncated maps S0, S1, and monotone
enclosures of the maximal attractor B.

S0 acts as T0 on the half-plane lam*x + mu*y <= 1 and S1 as T1 on
mu*x + lam*y >= lam + mu - 1; off those half-planes they collapse to the
corners (0, 0) and (1, 1).  All geometry is exact.
"""
from __future__ import annotations

import csv
import io
import os
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

from .core import Params, Point, map_for_symbol, fmt_fraction

ZERO, ONE = Fraction(0), Fraction(1)
ORIGIN = Point(ZERO, ZERO)
TOP_RIGHT = Point(ONE, ONE)
UNIT_SQUARE = (Point(ZERO, ZERO), Point(ONE, ZERO), Point(ONE, ONE), Point(ZERO, ONE))

DEFAULT_MAX_LEVEL = 16


def max_level() -> int:
    return int(os.environ.get("AFFINE_TOP_MAX_DEPTH", DEFAULT_MAX_LEVEL))


@dataclass(frozen=True)
class HalfPlane:
    """alpha*x + beta*y <= gamma, or >= gamma when ``geq`` is set."""

    alpha: Fraction
    beta: Fraction
    gamma: Fraction
    geq: bool = False

    def __post_init__(self):
        if self.alpha == 0 and self.beta == 0:
            raise ValueError("degenerate half-plane")

    def slack(self, q: Point) -> Fraction:
        """Nonnegative exactly on the allowed side."""
        v = self.alpha * q.x + self.beta * q.y - self.gamma
        return v if self.geq else -v


def s_halfplane(p: Params, s: str) -> HalfPlane:
    if s == "0":
        return HalfPlane(p.lam, p.mu, ONE)
    return HalfPlane(p.mu, p.lam, p.lam + p.mu - 1, geq=True)


# --------------------------------------------------------------------------
# convex polygons: tuples of Points, counterclockwise, possibly 1 or 2 vertices

Polygon = tuple


def _cross(o: Point, a: Point, b: Point) -> Fraction:
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)


def normalize(vertices: Sequence[Point]) -> Polygon:
    """Drop repeated and collinear vertices of a convex ring."""
    pts = []
    for q in vertices:
        if not pts or pts[-1] != q:
            pts.append(q)
    while len(pts) > 1 and pts[0] == pts[-1]:
        pts.pop()
    changed = True
    while changed and len(pts) > 2:
        changed = False
        for i in range(len(pts)):
            if _cross(pts[i - 1], pts[i], pts[(i + 1) % len(pts)]) == 0:
                del pts[i]
                changed = True
                break
    if len(pts) == 2 and pts[0] == pts[1]:
        pts.pop()
    return tuple(pts)


def clip(poly: Polygon, h: HalfPlane) -> Polygon:
    """Exact intersection of a convex polygon with a closed half-plane.

    Returns ``()`` when empty.  Vertices on the boundary line are kept.
    """
    if not poly:
        return ()
    if len(poly) == 1:
        return poly if h.slack(poly[0]) >= 0 else ()
    out = []
    n = len(poly)
    ring = poly if n > 2 else (poly[0], poly[1])
    m = len(ring)
    for i in range(m):
        cur, nxt = ring[i], ring[(i + 1) % m]
        sc, sn = h.slack(cur), h.slack(nxt)
        if sc >= 0:
            out.append(cur)
        if (sc > 0 > sn) or (sc < 0 < sn):
            t = sc / (sc - sn)
            out.append(Point(cur.x + t * (nxt.x - cur.x), cur.y + t * (nxt.y - cur.y)))
    return normalize(out)


def s_image(p: Params, s: str, poly: Polygon) -> Polygon:
    """Image of a convex piece under S_s: clip, then apply T_s (or collapse)."""
    s = str(s)
    kept = clip(poly, s_halfplane(p, s))
    if not kept:
        return (ORIGIN,) if s == "0" else (TOP_RIGHT,)
    m = map_for_symbol(p, s)
    return normalize([m(q.x, q.y) for q in kept])


def area2(poly: Polygon) -> Fraction:
    """Twice the signed area."""
    if len(poly) < 3:
        return ZERO
    return sum((poly[i - 1].x * poly[i].y - poly[i].x * poly[i - 1].y for i in range(len(poly))), ZERO)


def bbox(poly: Polygon) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    xs = [q.x for q in poly]
    ys = [q.y for q in poly]
    return min(xs), max(xs), min(ys), max(ys)


def upper_right(poly: Polygon) -> Point:
    """The upper-right corner of a piece: its highest vertex, rightmost among ties.

    Pieces of Y_n are ordered by this corner, compared as (y, x).  The
    bounding-box corner is not a vertex in general and does not order them.
    """
    return max(poly, key=lambda q: (q.y, q.x))


def corner_key(poly: Polygon) -> tuple:
    q = upper_right(poly)
    return (q.y, q.x)


def is_degenerate(poly: Polygon) -> bool:
    return len(poly) < 3


def contains_point(poly: Polygon, q: Point) -> bool:
    if len(poly) == 1:
        return poly[0] == q
    if len(poly) == 2:
        a, b = poly
        return _cross(a, b, q) == 0 and min(a.x, b.x) <= q.x <= max(a.x, b.x) \
            and min(a.y, b.y) <= q.y <= max(a.y, b.y)
    return all(_cross(poly[i - 1], poly[i], q) >= 0 for i in range(len(poly)))


def contains(outer: Polygon, inner: Polygon) -> bool:
    return all(contains_point(outer, q) for q in inner)


def interiors_disjoint(a: Polygon, b: Polygon) -> bool:
    """True when the open interiors do not meet (separating-axis test)."""
    if is_degenerate(a) or is_degenerate(b):
        return True
    for poly, other in ((a, b), (b, a)):
        for i in range(len(poly)):
            o, e = poly[i - 1], poly[i]
            # other entirely on the closed outer side of edge o->e
            if all(_cross(o, e, q) <= 0 for q in other):
                return True
    return False


# --------------------------------------------------------------------------
# the tower


@dataclass
class YLevel:
    level: int
    params: Params
    words: list[str]
    pieces: list[Polygon]

    def __len__(self):
        return len(self.pieces)

    def piece(self, w: str) -> Polygon:
        return self.pieces[_word_index(w)]

    def vertex_histogram(self) -> Counter:
        return Counter(len(q) for q in self.pieces)

    def to_csv(self) -> str:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["word", "vertices"])
        for w, poly in zip(self.words, self.pieces):
            wr.writerow([w or "-", " ".join(f"{fmt_fraction(q.x)},{fmt_fraction(q.y)}" for q in poly)])
        return buf.getvalue()

    def to_svg(self, size: int = 600) -> str:
        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
               f'viewBox="0 0 {size} {size}">',
               f'<rect x="0" y="0" width="{size}" height="{size}" fill="white" stroke="black"/>']
        for poly in self.pieces:
            if is_degenerate(poly):
                continue
            pts = " ".join(f"{float(q.x) * size:.3f},{(1 - float(q.y)) * size:.3f}" for q in poly)
            out.append(f'<polygon points="{pts}" fill="#4a7bd0" fill-opacity="0.6" '
                       f'stroke="black" stroke-width="0.3"/>')
        out.append("</svg>")
        return "\n".join(out) + "\n"


def _word_index(w: str) -> int:
    return int(w, 2) if w else 0


def build_y(p: Params, n: int, cap: Optional[int] = None) -> YLevel:
    """All 2^n pieces S_{i1}...S_{in}([0,1]^2), indexed by words in lexicographic order."""
    cap = max_level() if cap is None else cap
    if n < 0:
        raise ValueError("level must be nonnegative")
    if n > cap:
        raise MemoryError(f"level {n} exceeds the cap {cap} (set AFFINE_TOP_MAX_DEPTH to raise it)")
    words, pieces = [""], [UNIT_SQUARE]
    for _ in range(n):
        nw, npc = [], []
        for s in "01":
            for w, poly in zip(words, pieces):
                nw.append(s + w)
                npc.append(s_image(p, s, poly))
        words, pieces = nw, npc
    return YLevel(n, p, words, pieces)


# --------------------------------------------------------------------------
# monotone curves


@dataclass
class MonotoneCurve:
    """Piecewise-linear graph: x strictly increasing, y nondecreasing."""

    xs: list
    ys: list
    strict: bool = field(default=False)

    def __post_init__(self):
        if len(self.xs) != len(self.ys) or not self.xs:
            raise ValueError("curve needs matching, nonempty vertex lists")
        for i in range(1, len(self.xs)):
            if not self.xs[i - 1] < self.xs[i]:
                raise ValueError(f"x not strictly increasing at vertex {i}")
            if self.ys[i - 1] > self.ys[i]:
                raise ValueError(f"y decreasing at vertex {i}")
        self.strict = all(self.ys[i - 1] < self.ys[i] for i in range(1, len(self.ys)))

    def __len__(self):
        return len(self.xs)

    @property
    def domain(self):
        return self.xs[0], self.xs[-1]

    def __call__(self, x):
        return evaluate(self, x)

    def to_csv(self) -> str:
        lines = ["x,y"] + [f"{fmt_fraction(x)},{fmt_fraction(y)}" for x, y in zip(self.xs, self.ys)]
        return "\n".join(lines) + "\n"


def evaluate(c: MonotoneCurve, x):
    from bisect import bisect_left

    xs = c.xs
    if x < xs[0] or x > xs[-1]:
        raise ValueError(f"x={x} outside curve domain [{xs[0]}, {xs[-1]}]")
    i = bisect_left(xs, x)
    if xs[i] == x:
        return c.ys[i]
    x0, x1, y0, y1 = xs[i - 1], xs[i], c.ys[i - 1], c.ys[i]
    return y0 + (y1 - y0) * (x - x0) / (x1 - x0)


@dataclass
class BEnclosure:
    lower: MonotoneCurve
    upper: MonotoneCurve
    width: Fraction
    level: int


def _steps(intervals, mode):
    """Step function from (x0, x1, value) boxes: min or max over covering boxes.

    Returns breakpoints ``bs`` (sorted) and the value on each open gap
    (bs[i], bs[i+1]) together with values at the breakpoints themselves.
    """
    bs = sorted({b for x0, x1, _ in intervals for b in (x0, x1)})
    pick = min if mode == "min" else max
    gap = [None] * (len(bs) - 1)
    at = [None] * len(bs)
    index = {b: i for i, b in enumerate(bs)}
    for x0, x1, v in intervals:
        i0, i1 = index[x0], index[x1]
        for i in range(i0, i1 + 1):
            at[i] = v if at[i] is None else pick(at[i], v)
        for i in range(i0, i1):
            gap[i] = v if gap[i] is None else pick(gap[i], v)
    if any(g is None for g in gap) or any(a is None for a in at):
        raise AssertionError("Y_n leaves part of [0, 1] uncovered")
    return bs, gap, at


def b_enclosure(p: Params, n: int, tower: Optional[YLevel] = None) -> BEnclosure:
    """Continuous monotone curves ``lower <= B <= upper`` from the pieces of Y_n.

    Each piece P bounds B over its x-range by [min y of P, max y of P].  Since
    B is an increasing graph, the lower step function is replaced by its
    running maximum and the upper by its reverse running minimum, then each
    staircase is traded for a continuous curve on the correct side of it.
    """
    if n < 1:
        raise ValueError("enclosure needs level >= 1")
    y = tower if tower is not None else build_y(p, n)
    boxes_lo, boxes_hi = [], []
    for poly in y.pieces:
        x0, x1, y0, y1 = bbox(poly)
        boxes_lo.append((x0, x1, y0))
        boxes_hi.append((x0, x1, y1))
    bs, gap_lo, at_lo = _steps(boxes_lo, "min")
    _, gap_hi, at_hi = _steps(boxes_hi, "max")

    # monotone lower step: running max (value at b_i uses the point value too)
    run = ZERO
    low_at, low_gap = [], []
    for i in range(len(bs)):
        run = max(run, at_lo[i])
        low_at.append(run)
        if i < len(gap_lo):
            run = max(run, gap_lo[i])
            low_gap.append(run)
    run = ONE
    up_at, up_gap = [None] * len(bs), [None] * len(gap_hi)
    for i in range(len(bs) - 1, -1, -1):
        run = min(run, at_hi[i])
        up_at[i] = run
        if i > 0:
            run = min(run, gap_hi[i - 1])
            up_gap[i - 1] = run

    # continuous curves: the lower curve on gap i climbs from the value
    # left of b_i to low_gap[i]; the upper one descends into up_gap[i]
    lx, ly = [bs[0]], [low_at[0]]
    for i in range(len(low_gap)):
        lx.append(bs[i + 1])
        ly.append(min(low_gap[i], low_at[i + 1]))
    ux, uy = [], []
    for i in range(len(up_gap)):
        ux.append(bs[i])
        uy.append(max(up_gap[i], up_at[i]))
    ux.append(bs[-1])
    uy.append(up_at[-1])
    lower = MonotoneCurve(lx, ly)
    upper = MonotoneCurve(ux, uy)
    width = max(max(up_gap[i] - low_gap[i] for i in range(len(up_gap))),
                max(up_at[i] - low_at[i] for i in range(len(bs))))
    return BEnclosure(lower, upper, width, n)
