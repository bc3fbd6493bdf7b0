"""Box-dimension lower bounds from sub-IFS word families.

A family of words w_1..w_n gives the sub-IFS {T_w1, ..., T_wn}.  When the
images of the fixed-point bounding box X are pairwise disjoint, the
x-projection of the sub-attractor is the whole x-range of X and two of the
projected images overlap in an interval, the sub-attractor has box
dimension s > 1 with

    sum_i a_i * b_i^(s - 1) = 1,

where a_i >= b_i are the x and y contractions of T_wi.  The sub-attractor
sits inside A, so s bounds dim A from below.

Rectangle verdicts follow a combinatorial witness read off at the centre
(which fixed points are extreme, which side each pair of boxes is on, a
covering chain and an overlapping pair); each inequality of the witness is
then proved over the whole rectangle by :func:`core.enclose`.
"""
from __future__ import annotations

import datetime as _dt
import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence, Union

from mpmath import iv

from .certify import (Status, Undecided, _combine, _iv_json, _iv_load, _status, dyadic_sweep,
                      REGION_AREA)
from .core import (Interval, ParamRect, Params, _word_map, count_symbols, enclose, enclose_many,
                   fixed_point, fmt_fraction, mirror_word)

CHECKER_VERSION = "affine_top.dimension/1"
MAX_DIM_SWEEP_DEPTH = 10
DEFAULT_TOL = 1e-9

Words = Sequence[str]


def axis_scales(p: Params, w: str) -> tuple[Fraction, Fraction]:
    """(a, b) = (lam^#0 mu^#1, mu^#0 lam^#1): the x and y contractions of T_w."""
    if not w:
        raise ValueError("empty word")
    n0, n1 = count_symbols(w)
    return p.lam ** n0 * p.mu ** n1, p.mu ** n0 * p.lam ** n1


def check_word_balance(ws: Words, axis: str = "x") -> None:
    """Every word has #1 >= #0 (for axis "y": #0 >= #1), at least one strictly."""
    diffs = [w.count("1") - w.count("0") for w in ws]
    if axis == "y":
        diffs = [-d for d in diffs]
    if any(d < 0 for d in diffs) or not any(d > 0 for d in diffs):
        raise ValueError(f"family {list(ws)} violates the symbol balance for axis {axis}")


# --------------------------------------------------------------------------
# geometry as functions of (lam, mu)


def family_box(p: Params, ws: Words) -> tuple[Fraction, Fraction, Fraction, Fraction]:
    """Bounding box (xmin, xmax, ymin, ymax) of the fixed points of the T_w.

    Containment T_w(X) in X holds because each T_w contracts X towards its
    own fixed point; it is checked anyway.
    """
    if len(ws) < 2:
        raise ValueError("a family needs at least two words")
    fx = [fixed_point(_word_map(p.lam, p.mu, w)) for w in ws]
    X = (min(f.x for f in fx), max(f.x for f in fx), min(f.y for f in fx), max(f.y for f in fx))
    if X[0] == X[1] or X[2] == X[3]:
        raise ValueError(f"degenerate box {X} for family {list(ws)}")
    for w in ws:
        img = _image(p.lam, p.mu, w, X)
        if not (X[0] <= img[0] and img[1] <= X[1] and X[2] <= img[2] and img[3] <= X[3]):
            raise AssertionError(f"T_{w}(X) leaves X")
    return X




def _fix(l, m, w):
    return fixed_point(_word_map(l, m, w))


@dataclass(frozen=True)
class Witness:
    """Combinatorial shape of a ROSC configuration (indices into the family)."""

    xmin: int
    xmax: int
    ymin: int
    ymax: int
    separations: tuple  # (i, j, axis, first) with box ``first`` below/left of the other
    chain: tuple  # covering chain along the projection axis
    overlap: tuple  # (i, j)

    def to_json(self) -> dict:
        return {"xmin": self.xmin, "xmax": self.xmax, "ymin": self.ymin, "ymax": self.ymax,
                "separations": [list(s) for s in self.separations],
                "chain": list(self.chain), "overlap": list(self.overlap)}

    @classmethod
    def from_json(cls, d: dict) -> "Witness":
        return cls(d["xmin"], d["xmax"], d["ymin"], d["ymax"],
                   tuple(tuple(s) for s in d["separations"]), tuple(d["chain"]),
                   tuple(d["overlap"]))


def _image(l, m, w, X, T=None):
    T = _word_map(l, m, w) if T is None else T
    return T.ax * X[0] + T.ex, T.ax * X[1] + T.ex, T.dy * X[2] + T.fy, T.dy * X[3] + T.fy


def _proj(img, axis):
    return (img[0], img[1]) if axis == "x" else (img[2], img[3])


def _read_witness(lam, mu, ws: Words, axis: str, with_margin: bool = False):
    """Witness for the configuration at one parameter point (exact or float);
    None if there is none there.  ``with_margin`` also returns the smallest
    slack among its separation, chaining and overlap inequalities."""
    fx = [fixed_point(_word_map(lam, mu, w)) for w in ws]
    n = len(ws)
    idx = range(n)
    xmin = min(idx, key=lambda i: (fx[i].x, i))
    xmax = max(idx, key=lambda i: (fx[i].x, -i))
    ymin = min(idx, key=lambda i: (fx[i].y, i))
    ymax = max(idx, key=lambda i: (fx[i].y, -i))
    X = (fx[xmin].x, fx[xmax].x, fx[ymin].y, fx[ymax].y)
    if X[0] == X[1] or X[2] == X[3]:
        raise ValueError(f"degenerate box for family {list(ws)}")
    imgs = [_image(lam, mu, w, X) for w in ws]
    seps = []
    slack = []
    for i, j in itertools.combinations(idx, 2):
        a, b = imgs[i], imgs[j]
        options = [(b[0] - a[1], "x", i), (a[0] - b[1], "x", j),
                   (b[2] - a[3], "y", i), (a[2] - b[3], "y", j)]
        gap, ax, first = max(options, key=lambda t: t[0])
        if gap <= 0:
            return None
        seps.append((i, j, ax, first))
        slack.append(gap)
    proj = [_proj(im, axis) for im in imgs]
    lo_end, hi_end = (X[0], X[1]) if axis == "x" else (X[2], X[3])
    start = xmin if axis == "x" else ymin
    chain = [start]
    reach = proj[start][1]
    while reach < hi_end:
        nxt = max((k for k in idx if proj[k][0] <= reach), key=lambda k: (proj[k][1], -k))
        if proj[nxt][1] <= reach:
            return None
        slack.append(reach - proj[nxt][0])
        chain.append(nxt)
        reach = proj[nxt][1]
    best = None
    for i, j in itertools.combinations(idx, 2):
        ov = min(proj[i][1], proj[j][1]) - max(proj[i][0], proj[j][0])
        if ov > 0 and (best is None or ov > best[0]):
            best = (ov, i, j)
    if best is None:
        return None
    wit = Witness(xmin, xmax, ymin, ymax, tuple(seps), tuple(chain), (best[1], best[2]))
    return (wit, min(slack + [best[0]])) if with_margin else wit


# --------------------------------------------------------------------------
# ROSC evidence


@dataclass(frozen=True)
class Check:
    name: str
    margin: Interval
    strict: bool

    @property
    def status(self) -> Status:
        return _status(self.margin, self.strict)


@dataclass
class RoscEvidence:
    words: tuple
    axis: str
    witness: Optional[Witness]
    box: Optional[tuple] = None  # enclosures of (xmin, xmax, ymin, ymax)
    projections: list = field(default_factory=list)
    extremes: list = field(default_factory=list)
    disjoint: list = field(default_factory=list)
    cover: list = field(default_factory=list)
    overlap: list = field(default_factory=list)
    reason: str = ""

    def checks(self) -> list[Check]:
        return self.extremes + self.disjoint + self.cover + self.overlap

    @property
    def disjoint_status(self) -> Status:
        return _combine(c.status for c in self.extremes + self.disjoint) if self.witness else Status.FAIL

    @property
    def cover_status(self) -> Status:
        return _combine(c.status for c in self.cover) if self.witness else Status.FAIL

    @property
    def overlap_status(self) -> Status:
        return _combine(c.status for c in self.overlap) if self.witness else Status.FAIL

    @property
    def status(self) -> Status:
        if self.witness is None:
            return Status.FAIL
        return _combine(c.status for c in self.checks())


def _as_rect(pr) -> ParamRect:
    return pr.as_rect() if isinstance(pr, Params) else pr


def rosc_check(pr: Union[Params, ParamRect], ws: Words, axis: str = "x",
               witness: Optional[Witness] = None, max_split: int = 0) -> RoscEvidence:
    """Rectangular open set evidence for the family ``ws``.

    ``axis`` is the projection axis; "y" is the mirror image of the usual
    setting.  Without ``witness`` the configuration is read at the centre of
    ``pr``.  Ordering and covering inequalities are non-strict, separation
    and overlap strict.  All of them are enclosed in one shared pass.
    """
    ws = tuple(ws)
    if len(ws) < 2:
        raise ValueError("a family needs at least two words")
    rect = _as_rect(pr)
    if witness is None:
        c = rect.center()
        witness = _read_witness(c.lam, c.mu, ws, axis)
    ev = RoscEvidence(ws, axis, witness)
    if witness is None:
        ev.reason = "no disjoint/covering configuration at the centre"
        return ev
    wit = witness
    if wit.chain[0] != (wit.xmin if axis == "x" else wit.ymin):
        ev.reason = "covering chain does not start at the box edge"
        ev.witness = None
        return ev
    n = len(ws)
    lo_k, hi_k = (0, 1) if axis == "x" else (2, 3)
    # (bucket, name, strict, quantity as a function of (fixed points, box, images))
    specs = []
    for i, j, ax, first in wit.separations:
        other = j if first == i else i
        a_lo, a_hi = (0, 1) if ax == "x" else (2, 3)
        specs.append((ev.disjoint, f"box[{first}] {'left of' if ax == 'x' else 'below'} box[{other}]",
                      True, lambda fx, X, im, f=first, o=other, a_lo=a_lo, a_hi=a_hi:
                      im[o][a_lo] - im[f][a_hi]))
    for a, b in zip(wit.chain, wit.chain[1:]):
        specs.append((ev.cover, f"proj[{b}] starts inside proj[{a}]", False,
                      lambda fx, X, im, a=a, b=b: im[a][hi_k] - im[b][lo_k]))
    last = wit.chain[-1]
    if last != (wit.xmax if axis == "x" else wit.ymax):
        specs.append((ev.cover, f"proj[{last}] reaches the end", False,
                      lambda fx, X, im: im[last][hi_k] - X[hi_k]))
    i, j = wit.overlap
    for a, b in ((i, j), (j, i)):
        specs.append((ev.overlap, f"proj[{a}] ends after proj[{b}] starts", True,
                      lambda fx, X, im, a=a, b=b: im[a][hi_k] - im[b][lo_k]))
    # the chosen fixed points are extreme
    for k in range(n):
        for ci, (ext, sign) in enumerate(((wit.xmin, 1), (wit.xmax, -1), (wit.ymin, 1), (wit.ymax, -1))):
            if k == ext:
                continue
            c = ci // 2
            specs.append((ev.extremes, f"fix[{k}].{'xy'[c]} {'>=' if sign > 0 else '<='} fix[{ext}]",
                          False, lambda fx, X, im, k=k, ext=ext, c=c, sign=sign:
                          sign * (fx[k][c] - fx[ext][c])))

    def everything(l, m):
        Ts = [_word_map(l, m, w) for w in ws]
        fx = [fixed_point(T) for T in Ts]
        X = (fx[wit.xmin].x, fx[wit.xmax].x, fx[wit.ymin].y, fx[wit.ymax].y)
        im = [_image(l, m, w, X, T) for w, T in zip(ws, Ts)]
        vals = [q(fx, X, im) for _, _, _, q in specs]
        vals.extend(X)
        for k in range(n):
            vals.extend((im[k][lo_k], im[k][hi_k]))
        return vals

    out = enclose_many(everything, rect, max_split)
    for (bucket, name, strict, _), margin in zip(specs, out):
        bucket.append(Check(name, margin, strict))
    rest = out[len(specs):]
    ev.box = tuple(rest[:4])
    ev.projections = [(rest[4 + 2 * k], rest[5 + 2 * k]) for k in range(n)]
    return ev


# --------------------------------------------------------------------------
# the dimension equation


def _iv_q(q: Fraction):
    return iv.mpf(q.numerator) / iv.mpf(q.denominator)


def _raw_to_fraction(raw) -> Fraction:
    sign, man, exp, _ = raw
    v = Fraction(int(man)) * (Fraction(2) ** exp)
    return -v if sign else v


def _iv_to_interval(x) -> Interval:
    lo, hi = x._mpi_
    return Interval(_raw_to_fraction(lo), _raw_to_fraction(hi))


def equation_lhs(scales: Sequence[tuple[Fraction, Fraction]], s: Fraction, prec: int = 96) -> Interval:
    """Rigorous enclosure of sum a_i * b_i^(s - 1) for rational s."""
    old = iv.prec
    iv.prec = prec
    try:
        t = _iv_q(Fraction(s) - 1)
        total = iv.mpf(0)
        for a, b in scales:
            total += _iv_q(a) * iv.exp(t * iv.log(_iv_q(b)))
        return _iv_to_interval(total)
    finally:
        iv.prec = old


def _check_scales(scales) -> None:
    if any(a < b for a, b in scales) or not any(a > b for a, b in scales):
        raise ValueError("need a_i >= b_i for every map with at least one strict")
    if any(not (0 < b <= a < 1) for a, b in scales):
        raise ValueError("scales must lie in (0, 1)")


@dataclass
class Bracket:
    lo: Fraction
    hi: Fraction
    lhs_lo: Interval  # enclosure of the left side at lo (> 1 unless lo == hi == 1)
    lhs_hi: Interval  # enclosure at hi (< 1)
    steps: int = 0

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo


def solve_dimension(scales: Sequence[tuple[Fraction, Fraction]], tol: float = DEFAULT_TOL,
                    prec: int = 96) -> Bracket:
    """Bracket the root of sum a_i b_i^(s-1) = 1 in [1, 2] by bisection.

    The left side strictly decreases in s.  Every bisection step keeps a
    certified sign change; a midpoint whose sign cannot be decided at the
    working precision triggers a precision increase.
    """
    scales = [(Fraction(a), Fraction(b)) for a, b in scales]
    _check_scales(scales)
    at1 = sum(a for a, _ in scales)
    if at1 == 1:
        one = Interval(1)
        return Bracket(Fraction(1), Fraction(1), one, one)
    if at1 < 1:
        raise ValueError(f"sum of a_i is {at1} <= 1; no root above 1")
    lo, hi = Fraction(1), Fraction(2)
    f_lo, f_hi = Interval(at1), equation_lhs(scales, hi, prec)
    if not f_hi.hi < 1:
        raise ValueError("left side is not below 1 at s = 2")
    steps = 0
    while hi - lo > Fraction(tol):
        mid = (lo + hi) / 2
        f = equation_lhs(scales, mid, prec)
        while f.lo <= 1 <= f.hi:
            prec *= 2
            if prec > 4096:
                raise ArithmeticError("cannot decide the sign at the midpoint")
            f = equation_lhs(scales, mid, prec)
        if f.lo > 1:
            lo, f_lo = mid, f
        else:
            hi, f_hi = mid, f
        assert f_lo.lo > 1 and f_hi.hi < 1, "bracket lost its sign change"
        steps += 1
    return Bracket(lo, hi, f_lo, f_hi, steps)


@dataclass
class DimCertificate:
    params: Union[Params, ParamRect]
    words: tuple
    evidence: RoscEvidence
    sum_a: Interval  # enclosure of sum a_i - 1 over the parameters, > 0
    bracket: Optional[Bracket] = None
    timestamp: Optional[str] = None
    version: str = CHECKER_VERSION

    @property
    def s_lo(self) -> Optional[Fraction]:
        return self.bracket.lo if self.bracket else None

    @property
    def s_hi(self) -> Optional[Fraction]:
        return self.bracket.hi if self.bracket else None

    def margins(self) -> list[Interval]:
        return [c.margin for c in self.evidence.checks()] + [self.sum_a]

    def to_record(self, meta: bool = True) -> dict:
        rect = _as_rect(self.params)
        rec = {
            "kind": "dim",
            "rect": [fmt_fraction(q) for q in rect.bounds()],
            "words": list(self.words),
            "axis": self.evidence.axis,
            "witness": self.evidence.witness.to_json(),
            "margins": [_iv_json(m) for m in self.margins()],
            "version": self.version,
        }
        if self.bracket is not None:
            rec["s_bracket"] = [fmt_fraction(self.bracket.lo), fmt_fraction(self.bracket.hi)]
            rec["lhs_at_bracket"] = [_iv_json(self.bracket.lhs_lo), _iv_json(self.bracket.lhs_hi)]
        if meta and self.timestamp:
            rec["timestamp"] = self.timestamp
        return rec


def _sum_a(rect: ParamRect, ws: Words, axis: str) -> Interval:
    def f(l, m):
        total = 0
        for w in ws:
            T = _word_map(l, m, w)
            total = total + (T.ax if axis == "x" else T.dy)
        return total - 1
    return enclose(f, rect)


def certify_dim(pr: Union[Params, ParamRect], ws: Words, axis: str = "x",
                witness: Optional[Witness] = None, solve: Optional[bool] = None,
                tol: float = DEFAULT_TOL, stamp: bool = True) -> Union[DimCertificate, Undecided]:
    """ROSC evidence plus the sign of the dimension equation at s = 1.

    At a point the root is also bracketed (``solve`` defaults to True there).
    """
    ws = tuple(ws)
    try:
        check_word_balance(ws, axis)
    except ValueError as exc:
        return Undecided(_as_rect(pr), None, str(exc), Status.FAIL)
    rect = _as_rect(pr)
    try:
        ev = rosc_check(rect, ws, axis, witness)
    except ValueError as exc:
        return Undecided(rect, None, str(exc), Status.FAIL)
    if ev.status is not Status.PASS:
        return Undecided(rect, None, f"ROSC {ev.status.value} for {list(ws)}", ev.status)
    sa = _sum_a(rect, ws, axis)
    if not sa.lo > 0:
        return Undecided(rect, None, "sum of a_i not above 1", _status(sa, True))
    cert = DimCertificate(pr, ws, ev, sa)
    if solve if solve is not None else rect.is_point():
        p = Params(rect.lam.lo, rect.mu.lo)
        scales = [axis_scales(p, w) for w in ws]
        if axis == "y":
            scales = [(b, a) for a, b in scales]
        cert.bracket = solve_dimension(scales, tol)
    if stamp:
        cert.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return cert


def feng_wang_dim(p: Params, ws: Words, evidence: Optional[RoscEvidence] = None,
                  tol: float = DEFAULT_TOL) -> DimCertificate:
    """Certified bracket for the dimension of the sub-IFS of ``ws`` at ``p``."""
    ws = tuple(ws)
    check_word_balance(ws)
    if evidence is None:
        evidence = rosc_check(p, ws)
    if evidence.status is not Status.PASS:
        raise ValueError(f"ROSC evidence is {evidence.status.value} for {list(ws)}")
    scales = [axis_scales(p, w) for w in ws]
    bracket = solve_dimension(scales, tol)
    sa = Interval(sum(a for a, _ in scales) - 1)
    return DimCertificate(p, ws, evidence, sa, bracket)


def verify_dim_record(rec: dict) -> tuple[bool, str]:
    """Re-check a stored dimension record from its fields alone."""
    try:
        rect = ParamRect.from_bounds(*rec["rect"])
        ws = tuple(rec["words"])
        axis = rec.get("axis", "x")
        wit = Witness.from_json(rec["witness"])
        cert = certify_dim(rect, ws, axis, wit, solve=False, stamp=False)
    except (KeyError, ValueError, TypeError) as exc:
        return False, f"malformed record: {exc}"
    if not isinstance(cert, DimCertificate):
        return False, cert.reason
    stored = [_iv_load(m) for m in rec.get("margins", [])]
    if stored != cert.margins():
        return False, "stored margins differ from recomputed ones"
    if "s_bracket" in rec:
        if not rect.is_point():
            return False, "bracket stored for a non-point rectangle"
        lo, hi = (Fraction(q) for q in rec["s_bracket"])
        p = Params(rect.lam.lo, rect.mu.lo)
        scales = [axis_scales(p, w) for w in ws]
        if axis == "y":
            scales = [(b, a) for a, b in scales]
        if not (lo > 1 and equation_lhs(scales, lo).lo > 1 and equation_lhs(scales, hi).hi < 1):
            return False, "bracket does not enclose the root"
    return True, "ok"


# --------------------------------------------------------------------------
# family search


def family_one(m: int, n: int) -> tuple[str, ...]:
    """{T0 T1^m, T1^n}."""
    return ("0" + "1" * m, "1" * n)


def family_two(m: int, n: int) -> tuple[str, ...]:
    """{T0 T1^m, T1 T0, T1^2 T0, ..., T1^n T0}."""
    return ("0" + "1" * m,) + tuple("1" * k + "0" for k in range(1, n + 1))


def parametric_families(m_max: int = 8, n_max: int = 8):
    for m in range(1, m_max + 1):
        for n in range(1, n_max + 1):
            yield "family1", (m, n), family_one(m, n)
    for m in range(1, m_max + 1):
        for n in range(1, n_max + 1):
            fam = family_two(m, n)
            if len(set(fam)) == len(fam):
                yield "family2", (m, n), fam


def balanced_words(max_len: int) -> list[str]:
    """Words of length <= max_len with #1 >= #0, by length then lexicographically."""
    out = []
    for L in range(1, max_len + 1):
        for t in itertools.product("01", repeat=L):
            w = "".join(t)
            if w.count("1") >= w.count("0"):
                out.append(w)
    return out


def _general_subsets(p: Params, max_len: int, max_size: int, log):
    """Subsets of balanced words passing the necessary test sum a_i > 1,
    ordered by total length then lexicographically."""
    words = balanced_words(max_len)
    a = {w: axis_scales(p, w)[0] for w in words}
    by_a = sorted(words, key=lambda w: -a[w])
    kept = []
    total = 0

    def rec(start, chosen, acc):
        nonlocal total
        if len(chosen) >= 2:
            total += 1
            if acc > 1 and any(w.count("1") > w.count("0") for w in chosen):
                kept.append(tuple(sorted(chosen, key=lambda w: (len(w), w))))
        if len(chosen) == max_size:
            return
        rest = max_size - len(chosen)
        for k in range(start, len(by_a)):
            w = by_a[k]
            # remaining words have a <= a[w]; stop when even `rest` copies cannot push past 1
            if acc + rest * a[w] <= 1:
                break
            rec(k + 1, chosen + [w], acc + a[w])

    rec(0, [], Fraction(0))
    kept.sort(key=lambda f: (sum(len(w) for w in f), f))
    log({"stage": "general", "event": "enumerated", "words": len(words), "max_size": max_size,
         "subsets_with_sum_a_above_1": len(kept),
         "pruning": "subsets with sum a_i <= 1 cannot satisfy cover plus overlap"})
    return kept


@dataclass
class SearchResult:
    certificate: Optional[DimCertificate]
    tried: int
    log_path: Optional[str] = None

    @property
    def found(self) -> bool:
        return self.certificate is not None


def search_family(p: Params, m_max: int = 8, n_max: int = 8, general_len: Optional[int] = 10,
                  max_size: int = 3, log_path: Optional[str] = None,
                  tol: float = DEFAULT_TOL) -> SearchResult:
    """First certifying family in deterministic order, or none.

    The two parametric families come first; then, if ``general_len`` is
    set, subsets (size 2..max_size) of balanced words up to that length.
    Every trial is appended to the JSONL log at ``log_path``.
    """
    fh = open(log_path, "w") if log_path else None

    def log(entry):
        if fh:
            fh.write(json.dumps(entry, sort_keys=True) + "\n")

    log({"event": "start", "params": [fmt_fraction(p.lam), fmt_fraction(p.mu)],
         "m_max": m_max, "n_max": n_max, "general_len": general_len, "max_size": max_size,
         "version": CHECKER_VERSION})
    tried = 0

    def attempt(stage, label, fam):
        nonlocal tried
        tried += 1
        res = certify_dim(p, fam, solve=False, stamp=False)
        ok = isinstance(res, DimCertificate)
        log({"stage": stage, "label": label, "words": list(fam),
             "result": "PASS" if ok else res.reason})
        return res if ok else None

    try:
        found = None
        for stage, mn, fam in parametric_families(m_max, n_max):
            found = attempt(stage, list(mn), fam)
            if found:
                break
        if found is None and general_len:
            for fam in _general_subsets(p, general_len, max_size, log):
                found = attempt("general", None, fam)
                if found:
                    break
        if found is not None:
            found.bracket = solve_dimension([axis_scales(p, w) for w in found.words], tol)
        log({"event": "end", "tried": tried,
             "result": list(found.words) if found else "NONE"})
    finally:
        if fh:
            fh.close()
    return SearchResult(found, tried, log_path)


# --------------------------------------------------------------------------
# sweep


def _float_ok(lam: float, mu: float, ws) -> bool:
    """Cheap float screen: sum of x-scales > 1 and pairwise box separation."""
    total = 0.0
    maps = []
    for w in ws:
        ax, ex, dy, fy = 1.0, 0.0, 1.0, 0.0
        for s in reversed(w):
            if s == "0":
                ax, ex, dy, fy = lam * ax, lam * ex, mu * dy, mu * fy
            else:
                ax, ex, dy, fy = mu * ax, mu * ex + 1 - mu, lam * dy, lam * fy + 1 - lam
        maps.append((ax, ex, dy, fy))
        total += ax
    if total <= 1 - 1e-12:
        return False
    fx = [(ex / (1 - ax), fy / (1 - dy)) for ax, ex, dy, fy in maps]
    X = (min(f[0] for f in fx), max(f[0] for f in fx), min(f[1] for f in fx), max(f[1] for f in fx))
    imgs = [(ax * X[0] + ex, ax * X[1] + ex, dy * X[2] + fy, dy * X[3] + fy)
            for ax, ex, dy, fy in maps]
    for a, b in itertools.combinations(imgs, 2):
        if max(b[0] - a[1], a[0] - b[1], b[2] - a[3], a[2] - b[3]) < -1e-12:
            return False
    return True


def _float_slack(pts, fam) -> Optional[float]:
    worst = None
    for l, m in pts:
        try:
            got = _read_witness(l, m, fam, "x", with_margin=True)
        except (ValueError, ZeroDivisionError):
            return None
        if got is None:
            return None
        worst = got[1] if worst is None else min(worst, got[1])
    return worst


def _dim_job(rect: ParamRect, payload):
    """Families passing the float screens at the corners and centre are
    tried exactly, at most ``tries`` of them, largest float slack first."""
    families, stamp, tries = payload
    l0, l1, m0, m1 = (float(q) for q in rect.bounds())
    pts = ((l0, m0), (l0, m1), (l1, m0), (l1, m1), ((l0 + l1) / 2, (m0 + m1) / 2))
    ranked = []
    for k, fam in enumerate(families):
        if not all(_float_ok(l, m, fam) for l, m in pts):
            continue
        sl = _float_slack(pts, fam)
        if sl is not None:
            ranked.append((-sl, k))
    ranked.sort()
    for _, k in ranked[:tries]:
        res = certify_dim(rect, families[k], solve=False, stamp=stamp)
        if isinstance(res, DimCertificate):
            return res
    return Undecided(rect, None, "no family certifies")


@dataclass
class DimSweepReport:
    depth: int
    certified: list = field(default_factory=list)
    undecided: list = field(default_factory=list)

    @property
    def coverage(self) -> Fraction:
        return sum((_as_rect(c.params).area() for c in self.certified), Fraction(0)) / REGION_AREA

    def records(self, meta: bool = True) -> list[dict]:
        return [c.to_record(meta) for c in self.certified]

    def summary(self) -> dict:
        return {"depth": self.depth, "certified": len(self.certified),
                "undecided": len(self.undecided), "coverage": fmt_fraction(self.coverage),
                "coverage_float": float(self.coverage)}


def sweep_dim(depth: int, m_max: int = 8, n_max: int = 8, start_depth: int = 2,
              workers: int = 1, stamp: bool = True, tries: int = 3,
              cap: int = MAX_DIM_SWEEP_DEPTH) -> DimSweepReport:
    """Dyadic sweep certifying dim > 1 cell by cell with the parametric families."""
    families = [fam for _, _, fam in parametric_families(m_max, n_max)]
    cert, und = dyadic_sweep(depth, _dim_job, (families, stamp, tries), start_depth, workers, cap)
    return DimSweepReport(depth, cert, und)


def interior_free_flag(pr: Union[Params, ParamRect]) -> Optional[bool]:
    """True when lam*mu < 1/2 on all of ``pr`` (then dim A < 2, so A has no
    interior), False when lam*mu >= 1/2 throughout, None otherwise."""
    rect = _as_rect(pr)
    lo, hi = rect.lam.lo * rect.mu.lo, rect.lam.hi * rect.mu.hi
    if hi < Fraction(1, 2):
        return True
    if lo >= Fraction(1, 2):
        return False
    return None


def mirror_family(ws: Words) -> tuple[str, ...]:
    return tuple(mirror_word(w) for w in ws)


__all__ = [
    "axis_scales", "check_word_balance", "family_box", "Witness", "Check", "RoscEvidence", "rosc_check",
    "equation_lhs", "Bracket", "solve_dimension", "DimCertificate", "certify_dim",
    "feng_wang_dim", "verify_dim_record", "family_one", "family_two", "parametric_families",
    "balanced_words", "SearchResult", "search_family", "DimSweepReport", "sweep_dim",
    "interior_free_flag", "mirror_family",
]
