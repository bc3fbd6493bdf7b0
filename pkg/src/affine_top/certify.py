"""Membership certificates for the region G over parameter rectangles.

A pair (lam, mu) is in G when T1(0,0) and T0(1,1) lie strictly below the
maximal attractor B.  A witness is an eventually periodic word a whose
point pt_a provably lies on B (every truncated map along its orbit acts as
the untruncated one) and sits strictly left of and above T1(0,0).  The
mirrored word does the same for T0(1,1).

All claims come from interval enclosures with rational endpoints; floats
are used only to skip words that cannot work.
"""
from __future__ import annotations

import datetime as _dt
import enum
import itertools
import json
import os
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Union

import numpy as np

from . import _kernels
from .core import EPWord, Interval, ParamRect, Params, _pt, enclose, fmt_fraction, mirror

CHECKER_VERSION = "affine_top.certify/1"
MAX_SWEEP_DEPTH = 14
REGION_AREA = Fraction(1, 4)

TARGETS = ("T1(0,0)", "T0(1,1)")


class Status(enum.Enum):
    PASS = "PASS"
    FAIL = "FAIL"
    UNDECIDED = "UNDECIDED"


def _status(margin: Interval, strict: bool) -> Status:
    if (margin.lo > 0) if strict else (margin.lo >= 0):
        return Status.PASS
    if (margin.hi <= 0) if strict else (margin.hi < 0):
        return Status.FAIL
    return Status.UNDECIDED


def _combine(statuses: Iterable[Status]) -> Status:
    statuses = list(statuses)
    if all(s is Status.PASS for s in statuses):
        return Status.PASS
    if any(s is Status.FAIL for s in statuses):
        return Status.FAIL
    return Status.UNDECIDED


def _as_rect(pr: Union[Params, ParamRect]) -> ParamRect:
    return pr.as_rect() if isinstance(pr, Params) else pr


def _iv_json(iv: Interval) -> list[str]:
    return [fmt_fraction(iv.lo), fmt_fraction(iv.hi)]


def _iv_load(pair) -> Interval:
    return Interval(Fraction(pair[0]), Fraction(pair[1]))


# --------------------------------------------------------------------------
# orbit conditions


@dataclass(frozen=True)
class TailCondition:
    j: int
    tail: EPWord
    side: str  # "<=1" or ">=1"
    margin: Interval
    status: Status


@dataclass
class OrbitConditions:
    word: EPWord
    conditions: list[TailCondition]

    @property
    def status(self) -> Status:
        return _combine(c.status for c in self.conditions)


def _tail_sum(a: EPWord):
    return lambda l, m: sum(_pt(l, m, a))


def orbit_conditions(pr: Union[Params, ParamRect], a: EPWord, max_split: int = 0) -> OrbitConditions:
    """Side conditions along every tail of ``a``.

    The point p_j = pt(shift^j a) must have coordinate sum <= 1 when the
    next symbol is 0 and >= 1 when it is 1; then each truncated map acts
    as the plain map along the orbit and pt_a lies in every Y_n, hence
    in B.
    """
    rect = _as_rect(pr)
    out = []
    for j, tail in enumerate(a.tails()):
        s = enclose(_tail_sum(tail), rect, max_split)
        if a.symbol(j) == "0":
            margin, side = 1 - s, "<=1"
        else:
            margin, side = s - 1, ">=1"
        out.append(TailCondition(j, tail, side, margin, _status(margin, strict=False)))
    return OrbitConditions(a, out)


# --------------------------------------------------------------------------
# dominance


def _target(name: str):
    if name == "T1(0,0)":
        return lambda l, m: (1 - m, 1 - l)
    if name == "T0(1,1)":
        return lambda l, m: (l, m)
    raise ValueError(f"unknown target {name!r}; expected one of {TARGETS}")


@dataclass(frozen=True)
class Dominance:
    target: str
    x_margin: Interval  # target.x - pt.x, must be > 0
    y_margin: Interval  # pt.y - target.y, must be > 0

    @property
    def status(self) -> Status:
        return _combine((_status(self.x_margin, True), _status(self.y_margin, True)))


def below_b(pr: Union[Params, ParamRect], a: EPWord, target: str, max_split: int = 0) -> Dominance:
    """Strict dominance pt_a.x < target.x and pt_a.y > target.y over ``pr``.

    The differences are enclosed directly, which is never looser than
    comparing separate enclosures of the two sides.
    """
    rect = _as_rect(pr)
    t = _target(target)
    mx = enclose(lambda l, m: t(l, m)[0] - _pt(l, m, a).x, rect, max_split)
    my = enclose(lambda l, m: _pt(l, m, a).y - t(l, m)[1], rect, max_split)
    return Dominance(target, mx, my)


# --------------------------------------------------------------------------
# certificates


@dataclass
class GCertificate:
    rect: ParamRect
    word: EPWord
    mirror_word: EPWord
    orbit: OrbitConditions
    mirror_orbit: OrbitConditions
    dominance: Dominance
    mirror_dominance: Dominance
    max_split: int = 0
    timestamp: Optional[str] = None
    version: str = CHECKER_VERSION

    def margins(self) -> list[Interval]:
        return ([c.margin for c in self.orbit.conditions]
                + [c.margin for c in self.mirror_orbit.conditions]
                + [self.dominance.x_margin, self.dominance.y_margin,
                   self.mirror_dominance.x_margin, self.mirror_dominance.y_margin])

    def to_record(self, meta: bool = True) -> dict:
        rec = {
            "kind": "G",
            "rect": [fmt_fraction(q) for q in self.rect.bounds()],
            "word": str(self.word),
            "mirror_word": str(self.mirror_word),
            "max_split": self.max_split,
            "margins": [_iv_json(m) for m in self.margins()],
            "version": self.version,
        }
        if meta and self.timestamp:
            rec["timestamp"] = self.timestamp
        return rec


@dataclass(frozen=True)
class Undecided:
    rect: ParamRect
    word: Optional[EPWord]
    reason: str
    status: Status = Status.UNDECIDED


def certify_g(rect: Union[Params, ParamRect], a: EPWord, max_split: int = 0,
              stamp: bool = True) -> Union[GCertificate, Undecided]:
    """Certify rect in G with witness ``a`` for T1(0,0) and mirror(a) for T0(1,1)."""
    rect = _as_rect(rect)
    b = mirror(a)
    orbit = orbit_conditions(rect, a, max_split)
    if orbit.status is not Status.PASS:
        return Undecided(rect, a, f"orbit conditions of {a}: {orbit.status.value}", orbit.status)
    dom = below_b(rect, a, "T1(0,0)", max_split)
    if dom.status is not Status.PASS:
        return Undecided(rect, a, f"{a} vs T1(0,0): {dom.status.value}", dom.status)
    morbit = orbit_conditions(rect, b, max_split)
    if morbit.status is not Status.PASS:
        return Undecided(rect, a, f"orbit conditions of {b}: {morbit.status.value}", morbit.status)
    mdom = below_b(rect, b, "T0(1,1)", max_split)
    if mdom.status is not Status.PASS:
        return Undecided(rect, a, f"{b} vs T0(1,1): {mdom.status.value}", mdom.status)
    ts = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds") if stamp else None
    return GCertificate(rect, a, b, orbit, morbit, dom, mdom, max_split, ts)


def verify_g_record(rec: dict) -> tuple[bool, str]:
    """Re-check a stored G record from its fields alone.

    Recomputes every margin with core arithmetic, requires each to pass and
    to equal the stored value.
    """
    try:
        rect = ParamRect.from_bounds(*rec["rect"])
        a = EPWord.parse(rec["word"])
        if EPWord.parse(rec["mirror_word"]) != mirror(a):
            return False, "mirror_word is not the mirror of word"
        cert = certify_g(rect, a, int(rec.get("max_split", 0)), stamp=False)
    except (KeyError, ValueError, TypeError) as exc:
        return False, f"malformed record: {exc}"
    if not isinstance(cert, GCertificate):
        return False, cert.reason
    stored = [_iv_load(m) for m in rec.get("margins", [])]
    if stored != cert.margins():
        return False, "stored margins differ from recomputed ones"
    return True, "ok"


def point_check(p: Params, a: EPWord) -> bool:
    """Exact point-level version of :func:`certify_g` (no intervals)."""
    return isinstance(certify_g(p, a, stamp=False), GCertificate)


# --------------------------------------------------------------------------
# dictionary


def canonical(a: EPWord) -> EPWord:
    """Shortest spelling: primitive period, prefix not ending in the period's last symbol."""
    v = a.period
    for d in range(1, len(v) + 1):
        if len(v) % d == 0 and v[:d] * (len(v) // d) == v:
            v = v[:d]
            break
    u = a.prefix
    while u and u[-1] == v[-1]:
        u, v = u[:-1], v[-1] + v[:-1]
    return EPWord(u, v)


def word_key(a: EPWord) -> tuple:
    return (len(a), str(a))


def default_dictionary(max_prefix: int = 2, max_period: int = 8) -> list[EPWord]:
    """All u(v) with |u| <= max_prefix, |v| <= max_period, deduplicated by
    :func:`canonical`, ordered by total length then lexicographically."""
    seen = set()
    out = []
    for lu in range(max_prefix + 1):
        for lv in range(1, max_period + 1):
            for u in itertools.product("01", repeat=lu):
                for v in itertools.product("01", repeat=lv):
                    c = canonical(EPWord("".join(u), "".join(v)))
                    if c not in seen:
                        seen.add(c)
                        out.append(c)
    out.sort(key=word_key)
    return out


def load_dictionary(path: str) -> list[EPWord]:
    words = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                words.append(EPWord.parse(line))
    if not words:
        raise ValueError(f"dictionary {path} is empty")
    return words


class _Encoded:
    def __init__(self, words: list[EPWord]):
        self.words = words
        L = max(len(w) for w in words)
        self.sym = np.zeros((len(words), L), dtype=np.int8)
        self.plen = np.array([len(w.prefix) for w in words], dtype=np.int64)
        self.vlen = np.array([len(w.period) for w in words], dtype=np.int64)
        for i, w in enumerate(words):
            self.sym[i, :len(w)] = [int(c) for c in w.prefix + w.period]

    def candidates(self, rect: ParamRect, tol: float = 1e-9) -> list[int]:
        """Indices of words whose float margin is >= -tol at the corners and center."""
        l0, l1, m0, m1 = (float(q) for q in rect.bounds())
        ok = np.ones(len(self.words), dtype=bool)
        for lam, mu in ((l0, m0), (l0, m1), (l1, m0), (l1, m1), ((l0 + l1) / 2, (m0 + m1) / 2)):
            ok &= _kernels.word_margins(lam, mu, self.sym, self.plen, self.vlen) >= -tol
            if not ok.any():
                break
        return [int(i) for i in np.flatnonzero(ok)]


# --------------------------------------------------------------------------
# sweep


@dataclass
class SweepReport:
    depth: int
    certified: list = field(default_factory=list)  # GCertificate
    undecided: list = field(default_factory=list)  # Undecided

    @property
    def certified_area(self) -> Fraction:
        return sum((c.rect.area() for c in self.certified), Fraction(0))

    @property
    def coverage(self) -> Fraction:
        return self.certified_area / REGION_AREA

    def records(self, meta: bool = True) -> list[dict]:
        return [c.to_record(meta) for c in self.certified]

    def summary(self) -> dict:
        return {"depth": self.depth, "certified": len(self.certified),
                "undecided": len(self.undecided), "coverage": fmt_fraction(self.coverage),
                "coverage_float": float(self.coverage)}


def _cell_bounds(i: int, j: int, k: int):
    h = Fraction(1, 1 << k)
    return i * h, (i + 1) * h, j * h, (j + 1) * h


def _meets_region(l0, l1, m0, m1) -> bool:
    # open triangle 0 < lam < mu < 1, lam + mu > 1 meets the open cell
    return l1 > 0 and m0 < 1 and l0 < m1 and l1 + m1 > 1


def cell_grid(k: int) -> list[tuple[int, int, int]]:
    """Cells (k, i, j) of the 2^-k grid that meet the parameter region."""
    n = 1 << k
    return [(k, i, j) for i in range(n) for j in range(n) if _meets_region(*_cell_bounds(i, j, k))]


def _run_cell(args):
    cell, job, payload = args
    k, i, j = cell
    l0, l1, m0, m1 = _cell_bounds(i, j, k)
    if not ParamRect.admissible(l0, l1, m0, m1):
        return BoundaryCell(l0, l1, m0, m1, "cell touches the region boundary")
    return job(ParamRect.from_bounds(l0, l1, m0, m1), payload)


def dyadic_sweep(depth: int, job, payload, start_depth: int = 2, workers: int = 1,
                 cap: int = MAX_SWEEP_DEPTH) -> tuple[list, list]:
    """Adaptive dyadic subdivision of the parameter region.

    ``job(rect, payload)`` returns a certificate or an :class:`Undecided`.
    Cells are processed level by level; an uncertified cell is split into
    four until ``depth``, where it is reported as undecided.  Cells that are
    not admissible closed rectangles (they touch the region's boundary) are
    never certified.  Output order is by level, then cell index, so results
    do not depend on ``workers``.
    """
    if depth > cap:
        raise MemoryError(f"depth {depth} exceeds the cap {cap}")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    level = cell_grid(min(start_depth, depth))
    certified, undecided = [], []
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        while level:
            jobs = [(c, job, payload) for c in level]
            results = list(pool.map(_run_cell, jobs, chunksize=16) if pool else map(_run_cell, jobs))
            nxt = []
            for (k, i, j), res in zip(level, results):
                if not isinstance(res, (Undecided, BoundaryCell)):
                    certified.append(res)
                elif k < depth:
                    for di in (0, 1):
                        for dj in (0, 1):
                            ci, cj = 2 * i + di, 2 * j + dj
                            if _meets_region(*_cell_bounds(ci, cj, k + 1)):
                                nxt.append((k + 1, ci, cj))
                else:
                    undecided.append(res)
            level = nxt
    finally:
        if pool:
            pool.shutdown()
    return certified, undecided


def _g_job(rect: ParamRect, payload):
    enc, max_split, stamp = payload
    for idx in enc.candidates(rect):
        res = certify_g(rect, enc.words[idx], max_split, stamp)
        if isinstance(res, GCertificate):
            return res
    return Undecided(rect, None, "no dictionary word certifies")


def sweep_g(depth: int, dictionary: Optional[list[EPWord]] = None, start_depth: int = 2,
            max_split: int = 0, workers: int = 1, stamp: bool = True,
            cap: int = MAX_SWEEP_DEPTH) -> SweepReport:
    """Dyadic sweep for G down to cells of width 2^-depth (see :func:`dyadic_sweep`).

    Each cell tries the dictionary in order, skipping words whose float
    margins are negative somewhere on the cell.
    """
    words = dictionary if dictionary is not None else default_dictionary()
    if not words:
        raise ValueError("empty dictionary")
    enc = _Encoded(list(words))
    cert, und = dyadic_sweep(depth, _g_job, (enc, max_split, stamp), start_depth, workers, cap)
    return SweepReport(depth, cert, und)


@dataclass(frozen=True)
class BoundaryCell:
    """An undecided cell that is not an admissible closed rectangle."""

    lam_lo: Fraction
    lam_hi: Fraction
    mu_lo: Fraction
    mu_hi: Fraction
    reason: str
    word: Optional[EPWord] = None
    status: Status = Status.UNDECIDED

    def bounds(self):
        return (self.lam_lo, self.lam_hi, self.mu_lo, self.mu_hi)

    def area(self) -> Fraction:
        return (self.lam_hi - self.lam_lo) * (self.mu_hi - self.mu_lo)


def undecided_bounds(u) -> tuple:
    return u.bounds() if isinstance(u, BoundaryCell) else u.rect.bounds()


# --------------------------------------------------------------------------
# certificate store


def write_jsonl(path: str, records: Iterable[dict]) -> None:
    """Write records atomically (temp file in the same directory, then rename)."""
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=".jsonl")
    try:
        with os.fdopen(fd, "w") as fh:
            for r in records:
                fh.write(json.dumps(r, sort_keys=True) + "\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_jsonl(path: str) -> list[dict]:
    out = []
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                out.append(json.loads(line))
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{n}: not JSON ({exc})") from None
    return out


def random_points(rect: ParamRect, k: int, seed: int = 0, denom: int = 1 << 20) -> list[Params]:
    """``k`` rational points strictly inside ``rect`` (reproducible)."""
    rng = np.random.default_rng(seed)
    l0, l1, m0, m1 = rect.bounds()
    pts = []
    for _ in range(k):
        s, t = (Fraction(int(v), denom) for v in rng.integers(1, denom, size=2))
        pts.append(Params(l0 + s * (l1 - l0), m0 + t * (m1 - m0)))
    return pts


__all__ = [
    "Status", "TailCondition", "OrbitConditions", "Dominance", "GCertificate", "Undecided",
    "SweepReport", "orbit_conditions", "below_b", "certify_g", "verify_g_record",
    "point_check", "canonical", "default_dictionary", "load_dictionary", "sweep_g",
    "cell_grid", "dyadic_sweep", "BoundaryCell", "write_jsonl", "read_jsonl", "random_points", "undecided_bounds",
    "TARGETS",
]
