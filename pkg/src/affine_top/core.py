"""Exact arithmetic, the maps T0/T1, binary words and their limit points.

Everything here is exact: scalars are :class:`fractions.Fraction`, and
parameter rectangles use :class:`Interval` with rational endpoints.  The
map helpers are written against plain arithmetic operators so they accept
Fractions, Intervals or :class:`Dual` numbers alike.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, NamedTuple, Union

__all__ = [
    "Interval", "Dual", "Params", "ParamRect", "DiagAffineMap", "EPWord", "Point",
    "IDENTITY", "to_fraction", "fmt_fraction", "map_for_symbol", "compose",
    "word_map", "fixed_point", "pt_of_word", "mirror", "mirror_word",
    "mirror_point", "enclose", "enclose_many", "prove_positive", "count_symbols",
]


def to_fraction(value) -> Fraction:
    """Parse ``"2/5"``, ``"0.4"``, ints or Fractions into an exact Fraction.

    Floats are rejected; they would silently smuggle binary rounding into
    certified quantities.
    """
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact scalars; pass a string like '2/5'")
    if isinstance(value, str):
        return Fraction(value.strip())
    return Fraction(value)


def fmt_fraction(q: Fraction) -> str:
    q = Fraction(q)
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


class Interval:
    """Closed interval ``[lo, hi]`` with exact rational endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo, hi=None):
        lo = Fraction(lo)
        hi = lo if hi is None else Fraction(hi)
        if lo > hi:
            raise ValueError(f"empty interval [{lo}, {hi}]")
        self.lo = lo
        self.hi = hi

    @classmethod
    def _mk(cls, lo: Fraction, hi: Fraction) -> "Interval":
        # trusted constructor for arithmetic results (already ordered Fractions)
        out = object.__new__(cls)
        out.lo = lo
        out.hi = hi
        return out

    @staticmethod
    def _wrap(other) -> "Interval":
        if isinstance(other, Interval):
            return other
        if isinstance(other, (int, Fraction)):
            return Interval(other)
        return NotImplemented

    def __add__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        return Interval._mk(self.lo + o.lo, self.hi + o.hi)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        return Interval._mk(self.lo - o.hi, self.hi - o.lo)

    def __rsub__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Interval._mk(-self.hi, -self.lo)

    def __mul__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        if self.lo >= 0 and o.lo >= 0:
            return Interval._mk(self.lo * o.lo, self.hi * o.hi)
        p = (self.lo * o.lo, self.lo * o.hi, self.hi * o.lo, self.hi * o.hi)
        return Interval._mk(min(p), max(p))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        if o.lo <= 0 <= o.hi:
            raise ZeroDivisionError(f"division by an interval containing zero: {o}")
        return self * Interval._mk(1 / o.hi, 1 / o.lo)

    def __rtruediv__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        return o / self

    def __eq__(self, other):
        if isinstance(other, Interval):
            return self.lo == other.lo and self.hi == other.hi
        return NotImplemented

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __contains__(self, q) -> bool:
        if isinstance(q, Interval):
            return self.lo <= q.lo and q.hi <= self.hi
        return self.lo <= q <= self.hi

    def __repr__(self):
        return f"Interval({fmt_fraction(self.lo)}, {fmt_fraction(self.hi)})"

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def mid(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def is_point(self) -> bool:
        return self.lo == self.hi

    def hull(self, other: "Interval") -> "Interval":
        return Interval._mk(min(self.lo, other.lo), max(self.hi, other.hi))

    def intersect(self, other: "Interval") -> "Interval":
        return Interval(max(self.lo, other.lo), min(self.hi, other.hi))

    def sign(self) -> int:
        """+1 / -1 if the whole interval is >= 0 / <= 0, else 0."""
        if self.lo >= 0:
            return 1
        if self.hi <= 0:
            return -1
        return 0


class Dual:
    """First-order forward-mode number in two variables (lambda, mu).

    Used over :class:`Interval` values to bound partial derivatives on a
    parameter rectangle, which powers the monotonicity test in :func:`enclose`.
    """

    __slots__ = ("v", "dl", "dm")

    def __init__(self, v, dl=0, dm=0):
        self.v, self.dl, self.dm = v, dl, dm

    @staticmethod
    def _wrap(other):
        if isinstance(other, Dual):
            return other
        if isinstance(other, (int, Fraction, Interval)):
            return Dual(other)
        return NotImplemented

    def __add__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        return Dual(self.v + o.v, self.dl + o.dl, self.dm + o.dm)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        return Dual(self.v - o.v, self.dl - o.dl, self.dm - o.dm)

    def __rsub__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        return o - self

    def __neg__(self):
        return Dual(-self.v, -self.dl, -self.dm)

    def __mul__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        return Dual(self.v * o.v, self.v * o.dl + self.dl * o.v, self.v * o.dm + self.dm * o.v)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        q = self.v / o.v
        return Dual(q, (self.dl - q * o.dl) / o.v, (self.dm - q * o.dm) / o.v)

    def __rtruediv__(self, other):
        o = self._wrap(other)
        if o is NotImplemented:
            return NotImplemented
        return o / self


# --------------------------------------------------------------------------
# parameters


@dataclass(frozen=True)
class Params:
    """An exact parameter pair with 0 < lam < mu < 1 and lam + mu > 1."""

    lam: Fraction
    mu: Fraction

    def __post_init__(self):
        lam, mu = to_fraction(self.lam), to_fraction(self.mu)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)
        if not (0 < lam < mu < 1 and lam + mu > 1):
            raise ValueError(f"need 0 < lambda < mu < 1 and lambda + mu > 1, got ({lam}, {mu})")

    def as_rect(self) -> "ParamRect":
        return ParamRect(Interval(self.lam), Interval(self.mu))

    def __str__(self):
        return f"({fmt_fraction(self.lam)}, {fmt_fraction(self.mu)})"


@dataclass(frozen=True)
class ParamRect:
    """A closed rectangle of parameters lying inside the admissible region."""

    lam: Interval
    mu: Interval

    def __post_init__(self):
        lam, mu = self.lam, self.mu
        if not (lam.lo > 0 and mu.hi < 1 and lam.hi < mu.lo and lam.lo + mu.lo > 1):
            raise ValueError(f"rectangle {self} leaves the region 0<lambda<mu<1, lambda+mu>1")

    @classmethod
    def from_bounds(cls, lam_lo, lam_hi, mu_lo, mu_hi) -> "ParamRect":
        return cls(Interval(to_fraction(lam_lo), to_fraction(lam_hi)),
                   Interval(to_fraction(mu_lo), to_fraction(mu_hi)))

    @staticmethod
    def admissible(lam_lo, lam_hi, mu_lo, mu_hi) -> bool:
        return lam_lo > 0 and mu_hi < 1 and lam_hi < mu_lo and lam_lo + mu_lo > 1

    def bounds(self) -> tuple[Fraction, Fraction, Fraction, Fraction]:
        return (self.lam.lo, self.lam.hi, self.mu.lo, self.mu.hi)

    def center(self) -> Params:
        return Params(self.lam.mid, self.mu.mid)

    def is_point(self) -> bool:
        return self.lam.is_point() and self.mu.is_point()

    def split(self) -> list["ParamRect"]:
        """Four quadrants, ordered (lam low/high) x (mu low/high)."""
        lm, mm = self.lam.mid, self.mu.mid
        out = []
        for li in (Interval(self.lam.lo, lm), Interval(lm, self.lam.hi)):
            for mi in (Interval(self.mu.lo, mm), Interval(mm, self.mu.hi)):
                out.append(ParamRect(li, mi))
        return out

    def area(self) -> Fraction:
        return self.lam.width * self.mu.width

    def __str__(self):
        return "[{}, {}] x [{}, {}]".format(*map(fmt_fraction, self.bounds()))


ParamLike = Union[Params, ParamRect]


def _lm(p: ParamLike):
    return p.lam, p.mu


# --------------------------------------------------------------------------
# maps and words


@dataclass(frozen=True)
class DiagAffineMap:
    """(x, y) -> (ax*x + ex, dy*y + fy)."""

    ax: object
    ex: object
    dy: object
    fy: object

    def __call__(self, x, y):
        return Point(self.ax * x + self.ex, self.dy * y + self.fy)

    def __matmul__(self, inner: "DiagAffineMap") -> "DiagAffineMap":
        return compose(self, inner)


IDENTITY = DiagAffineMap(Fraction(1), Fraction(0), Fraction(1), Fraction(0))


class Point(NamedTuple):
    x: object
    y: object


def _symbol_map(lam, mu, s: str) -> DiagAffineMap:
    if s == "0":
        return DiagAffineMap(lam, 0 * lam, mu, 0 * mu)
    if s == "1":
        return DiagAffineMap(mu, 1 - mu, lam, 1 - lam)
    raise ValueError(f"not a binary symbol: {s!r}")


def map_for_symbol(p: ParamLike, s) -> DiagAffineMap:
    return _symbol_map(*_lm(p), str(s))


def compose(outer: DiagAffineMap, inner: DiagAffineMap) -> DiagAffineMap:
    """``outer o inner``: inner is applied first."""
    return DiagAffineMap(outer.ax * inner.ax, outer.ax * inner.ex + outer.ex,
                         outer.dy * inner.dy, outer.dy * inner.fy + outer.fy)


def _word_map(lam, mu, w: str) -> DiagAffineMap:
    m = _symbol_map(lam, mu, w[-1])
    for s in reversed(w[:-1]):
        m = compose(_symbol_map(lam, mu, s), m)
    return m


def word_map(p: ParamLike, w: str) -> DiagAffineMap:
    """T_{w1} o T_{w2} o ... o T_{wn} (the last symbol acts first)."""
    if not w:
        raise ValueError("word_map needs a nonempty word")
    return _word_map(*_lm(p), w)


def fixed_point(m: DiagAffineMap) -> Point:
    if m.ax == 1 or m.dy == 1:
        raise ValueError("map is not a contraction on both axes")
    return Point(m.ex / (1 - m.ax), m.fy / (1 - m.dy))


def count_symbols(w: str) -> tuple[int, int]:
    """(#0, #1)."""
    return w.count("0"), w.count("1")


_EPWORD_RE = re.compile(r"^([01]*)\(([01]+)\)$")


@dataclass(frozen=True)
class EPWord:
    """Eventually periodic word ``prefix . period^infinity``."""

    prefix: str
    period: str

    def __post_init__(self):
        if not self.period:
            raise ValueError("period must be nonempty")
        if set(self.prefix + self.period) - {"0", "1"}:
            raise ValueError(f"non-binary symbols in {self.prefix!r}({self.period!r})")

    @classmethod
    def parse(cls, text: str) -> "EPWord":
        m = _EPWORD_RE.match(text.strip())
        if not m:
            raise ValueError(f"cannot parse eventually periodic word {text!r}; expected 'u(v)'")
        return cls(m.group(1), m.group(2))

    def __str__(self):
        return f"{self.prefix}({self.period})"

    def __len__(self):
        return len(self.prefix) + len(self.period)

    def symbol(self, i: int) -> str:
        """The i-th symbol, 0-based."""
        if i < len(self.prefix):
            return self.prefix[i]
        return self.period[(i - len(self.prefix)) % len(self.period)]

    def shift(self, k: int = 1) -> "EPWord":
        if k <= len(self.prefix):
            return EPWord(self.prefix[k:], self.period)
        r = (k - len(self.prefix)) % len(self.period)
        return EPWord("", self.period[r:] + self.period[:r])

    def tails(self) -> list["EPWord"]:
        """The shifts sigma^j a for j = 0 .. |u|+|v|-1 (every distinct tail appears)."""
        return [self.shift(j) for j in range(len(self))]


def _pt(lam, mu, a: EPWord) -> Point:
    q = fixed_point(_word_map(lam, mu, a.period))
    if a.prefix:
        q = _word_map(lam, mu, a.prefix)(*q)
    return q


def pt_of_word(p: ParamLike, a: EPWord, max_split: int = 0) -> Point:
    """Limit point of T_{a1} o T_{a2} o ...; an enclosure when ``p`` is a rectangle."""
    if isinstance(p, Params):
        return _pt(p.lam, p.mu, a)
    return Point(enclose(lambda l, m: _pt(l, m, a).x, p, max_split),
                 enclose(lambda l, m: _pt(l, m, a).y, p, max_split))


def mirror_word(w: str) -> str:
    return w.translate(str.maketrans("01", "10"))


def mirror(a: EPWord) -> EPWord:
    return EPWord(mirror_word(a.prefix), mirror_word(a.period))


def mirror_point(q: Point) -> Point:
    """(x, y) -> (1 - y, 1 - x); swaps T0 and T1 by conjugation."""
    return Point(1 - q.y, 1 - q.x)


# --------------------------------------------------------------------------
# rigorous range bounds over parameter rectangles

Fn = Callable[[object, object], object]


def _iv(x) -> Interval:
    return x if isinstance(x, Interval) else Interval(x)


def enclose(f: Fn, rect: ParamRect, max_split: int = 0) -> Interval:
    """Interval containing ``f(lam, mu)`` for every parameter in ``rect``.

    ``f`` is evaluated on Dual(Interval) arguments to bound its partial
    derivatives.  Where a partial has a constant sign the bound is taken
    at the matching edge exactly; otherwise the naive and mean-value
    enclosures are intersected.  ``max_split`` bisects the rectangle that
    many times (four ways) and returns the hull.
    """
    return enclose_many(lambda l, m: (f(l, m),), rect, max_split)[0]


def enclose_many(f, rect: ParamRect, max_split: int = 0) -> list[Interval]:
    """:func:`enclose` for a function returning a tuple of values.

    Every evaluation of ``f`` is shared by all components, so a family of
    inequalities built on the same maps costs one pass.
    """
    if max_split > 0 and not rect.is_point():
        parts = [enclose_many(f, r, max_split - 1) for r in _split_any(rect)]
        out = parts[0]
        for other in parts[1:]:
            out = [a.hull(b) for a, b in zip(out, other)]
        return out
    lam, mu = rect.lam, rect.mu
    pts: dict = {}
    edges: dict = {}

    def at(l, m):
        key = (l, m)
        if key not in pts:
            pts[key] = tuple(f(l, m))
        return pts[key]

    def edge(axis, val):
        # derivative along the free variable with the other one fixed at val
        key = (axis, val)
        if key not in edges:
            if axis == "l":
                edges[key] = tuple(f(Dual(Interval(val), 0, 0), Dual(mu, 0, 1)))
            else:
                edges[key] = tuple(f(Dual(lam, 1, 0), Dual(Interval(val), 0, 0)))
        return edges[key]

    def one_d(axis, val, k):
        free = mu if axis == "l" else lam
        pt = (lambda t: at(val, t)) if axis == "l" else (lambda t: at(t, val))
        if free.is_point():
            return Interval(pt(free.lo)[k])
        d = edge(axis, val)[k]
        if not isinstance(d, Dual):
            return _iv(d)
        dd = d.dm if axis == "l" else d.dl
        s = _iv(dd).sign()
        if s:
            a, b = pt(free.lo)[k], pt(free.hi)[k]
            return Interval(a, b) if s > 0 else Interval(b, a)
        c = free.mid
        return _iv(d.v).intersect(_iv(pt(c)[k] + dd * (free - c)))

    if lam.is_point() and mu.is_point():
        return [Interval(v) for v in at(lam.lo, mu.lo)]
    if lam.is_point():
        return [one_d("l", lam.lo, k) for k in range(len(edge("l", lam.lo)))]
    if mu.is_point():
        return [one_d("m", mu.lo, k) for k in range(len(edge("m", mu.lo)))]
    out = []
    for k, d in enumerate(f(Dual(lam, 1, 0), Dual(mu, 0, 1))):
        if not isinstance(d, Dual):
            out.append(_iv(d))
            continue
        sl, sm = _iv(d.dl).sign(), _iv(d.dm).sign()
        if sl and sm:
            lo = at(lam.lo if sl > 0 else lam.hi, mu.lo if sm > 0 else mu.hi)[k]
            hi = at(lam.hi if sl > 0 else lam.lo, mu.hi if sm > 0 else mu.lo)[k]
            out.append(Interval(lo, hi))
        elif sl:
            lo = one_d("l", lam.lo if sl > 0 else lam.hi, k).lo
            hi = one_d("l", lam.hi if sl > 0 else lam.lo, k).hi
            out.append(Interval(lo, hi))
        elif sm:
            lo = one_d("m", mu.lo if sm > 0 else mu.hi, k).lo
            hi = one_d("m", mu.hi if sm > 0 else mu.lo, k).hi
            out.append(Interval(lo, hi))
        else:
            cl, cm = lam.mid, mu.mid
            mv = at(cl, cm)[k] + d.dl * (lam - cl) + d.dm * (mu - cm)
            out.append(_iv(d.v).intersect(_iv(mv)))
    return out


def _split_any(rect: ParamRect) -> list[ParamRect]:
    # sub-rectangles of an admissible rectangle are admissible
    lams = [rect.lam] if rect.lam.is_point() else [
        Interval(rect.lam.lo, rect.lam.mid), Interval(rect.lam.mid, rect.lam.hi)]
    mus = [rect.mu] if rect.mu.is_point() else [
        Interval(rect.mu.lo, rect.mu.mid), Interval(rect.mu.mid, rect.mu.hi)]
    return [ParamRect(li, mi) for li in lams for mi in mus]


def prove_positive(f: Fn, rect: ParamRect, strict: bool = True,
                   max_split: int = 0) -> tuple[bool, Fraction]:
    """Try to show ``f > 0`` (or ``>= 0``) on ``rect``.

    Returns ``(proved, margin)`` where margin is the smallest lower bound
    seen over the leaves actually used.  Undecided leaves are bisected
    adaptively up to ``max_split`` times.
    """
    iv = enclose(f, rect)
    ok = iv.lo > 0 if strict else iv.lo >= 0
    if ok or max_split <= 0 or rect.is_point():
        return ok, iv.lo
    if (iv.hi <= 0 if strict else iv.hi < 0):
        return False, iv.lo
    margin = None
    for sub in _split_any(rect):
        sub_ok, m = prove_positive(f, sub, strict, max_split - 1)
        if not sub_ok:
            return False, m
        margin = m if margin is None else min(margin, m)
    return True, margin
