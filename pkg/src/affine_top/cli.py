"""Command-line front end: ``affine-top <subcommand> ...``.

Exit status is 0 on success, 2 when the only outcome is UNDECIDED (or a
search found nothing), and 1 on any error.  Every file is written through
a temp file and a rename.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import numpy as np

from . import __version__
from .bcurve import b_enclosure, build_y, max_level
from .certify import (GCertificate, MAX_SWEEP_DEPTH, _cell_bounds, _meets_region,
                      cell_grid, certify_g, load_dictionary, point_check, random_points,
                      read_jsonl, sweep_g, undecided_bounds, verify_g_record)
from .core import EPWord, ParamRect, Params, fmt_fraction, to_fraction
from .dimension import (MAX_DIM_SWEEP_DEPTH, DimCertificate, Witness, certify_dim,
                        search_family, sweep_dim, verify_dim_record)
from .interior import (Matrix2, interior_cell, interior_diag, interior_general,
                       interior_record, verify_interior_record)
from .topcurve import (MAX_COVER_DEPTH, FloatCurve, attractor_cover, box_dim_estimate,
                       curve_arrays, iterate_top, iterate_top_float)

EXIT_OK, EXIT_ERROR, EXIT_UNDECIDED = 0, 1, 2
MAX_MAP_DEPTH = 12
MAX_TOP_ITERS = 40


class CliError(Exception):
    """A user-facing failure; the message is printed and the exit status is 1."""


def hard_cap(default: int) -> int:
    """``default``, or AFFINE_TOP_MAX_DEPTH when set.

    Raising the cap is unsafe for certification runs without memory headroom.
    """
    env = os.environ.get("AFFINE_TOP_MAX_DEPTH")
    if not env:
        return default
    try:
        return int(env)
    except ValueError:
        raise CliError(f"AFFINE_TOP_MAX_DEPTH must be an integer, got {env!r}") from None


def _check_cap(name: str, value: int, default: int) -> None:
    cap = hard_cap(default)
    if value > cap:
        raise CliError(f"cap violation: {name}={value} exceeds {cap} "
                       "(set AFFINE_TOP_MAX_DEPTH to raise it)")


# --------------------------------------------------------------------------
# parsing


def parse_rational(text: str) -> Fraction:
    try:
        return to_fraction(text)
    except (ValueError, ZeroDivisionError):
        raise CliError(f"parse error: not a rational number: {text!r}") from None


def parse_rect(text: str) -> ParamRect:
    parts = [t for t in text.split(",") if t.strip()]
    if len(parts) != 4:
        raise CliError(f"parse error: --rect needs lam_lo,lam_hi,mu_lo,mu_hi, got {text!r}")
    b = [parse_rational(t) for t in parts]
    try:
        return ParamRect.from_bounds(*b)
    except ValueError as exc:
        raise CliError(f"parse error: {exc}") from None


def parse_params(lam: Optional[str], mu: Optional[str]) -> Params:
    if lam is None or mu is None:
        raise CliError("parse error: --lambda and --mu are required")
    try:
        return Params(parse_rational(lam), parse_rational(mu))
    except ValueError as exc:
        raise CliError(f"parse error: {exc}") from None


def parse_word(text: str) -> EPWord:
    try:
        return EPWord.parse(text)
    except ValueError as exc:
        raise CliError(f"parse error: {exc}") from None


def parse_family(text: str) -> tuple[str, ...]:
    ws = tuple(w.strip() for w in text.split(",") if w.strip())
    if len(ws) < 2 or any(set(w) - set("01") for w in ws):
        raise CliError(f"parse error: --family needs at least two binary words, got {text!r}")
    return ws


def parse_matrix(text: str) -> Matrix2:
    parts = text.split(",")
    if len(parts) != 4:
        raise CliError(f"parse error: a matrix is a,b,c,d (row major), got {text!r}")
    return Matrix2(*(parse_rational(t) for t in parts))


# --------------------------------------------------------------------------
# output


def atomic_write(path: str, data) -> None:
    """Write ``data`` (str or bytes) to ``path`` via a temp file and rename."""
    d = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(d):
        raise CliError(f"I/O error: directory does not exist: {d}")
    mode = "wb" if isinstance(data, (bytes, bytearray)) else "w"
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, mode) as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise CliError(f"I/O error: cannot write {path}: {exc}") from None


def jsonl_text(records: Iterable[dict]) -> str:
    return "".join(json.dumps(r, sort_keys=True) + "\n" for r in records)


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


# --------------------------------------------------------------------------
# region maps

COLORS = {
    "G": (59, 111, 182),
    "dim": (224, 160, 48),
    "both": (60, 154, 95),
    "interior": (176, 58, 140),
    "undecided": (215, 215, 215),
}
LEGEND = {
    "G": "G certified",
    "dim": "dim > 1 certified",
    "both": "G and dim > 1",
    "interior": "interior certified",
    "undecided": "undecided",
}


@dataclass(frozen=True)
class RegionEntry:
    bounds: tuple  # (lam_lo, lam_hi, mu_lo, mu_hi) as Fractions
    status: str
    witness: object = None


@dataclass
class RegionMap:
    entries: list = field(default_factory=list)
    bounds: tuple = (Fraction(0), Fraction(1), Fraction(1, 2), Fraction(1))
    legend: dict = field(default_factory=lambda: dict(LEGEND))


def _cell_of(bounds) -> tuple[int, int, int]:
    l0, l1, m0, m1 = (Fraction(b) for b in bounds)
    w = l1 - l0
    if w <= 0 or w != m1 - m0 or w.numerator != 1 or w.denominator & (w.denominator - 1):
        raise CliError(f"not a dyadic cell: {[fmt_fraction(b) for b in bounds]}")
    k = w.denominator.bit_length() - 1
    i, j = l0 * (1 << k), m0 * (1 << k)
    if i.denominator != 1 or j.denominator != 1:
        raise CliError(f"not a dyadic cell: {[fmt_fraction(b) for b in bounds]}")
    return k, int(i), int(j)


def _ancestors(cell):
    k, i, j = cell
    for d in range(1, k + 1):
        yield k - d, i >> d, j >> d


def _subtract(cell, holes: set, finest: int) -> list:
    """Dyadic pieces of ``cell`` (within the region) not covered by ``holes``."""
    if cell in holes:
        return []
    k, i, j = cell
    if k >= finest or not any(any(a == cell for a in _ancestors(h)) for h in holes):
        return [cell]
    out = []
    for di in (0, 1):
        for dj in (0, 1):
            c = (k + 1, 2 * i + di, 2 * j + dj)
            if _meets_region(*_cell_bounds(c[1], c[2], c[0])):
                out.extend(_subtract(c, holes, finest))
    return out


def merge_entries(g_cells: Iterable, dim_cells: Iterable) -> list[RegionEntry]:
    """Interior-disjoint dyadic entries labelled G, dim or both.

    Dyadic cells are nested or disjoint, so a cell is "both" when it lies in
    a cell of the other database; the rest of each cell is split off.
    """
    g = {_cell_of(b) for b in g_cells}
    d = {_cell_of(b) for b in dim_cells}
    both = {c for c in d if c in g or any(a in g for a in _ancestors(c))}
    both |= {c for c in g if any(a in d for a in _ancestors(c))}
    finest = max((c[0] for c in g | d), default=0)
    out = [RegionEntry(_cell_bounds(i, j, k), "both") for k, i, j in sorted(both)]
    for label, cells in (("G", g), ("dim", d)):
        for c in sorted(cells):
            if c in both or any(a in both for a in _ancestors(c)):
                continue
            holes = {b for b in both if any(a == c for a in _ancestors(b))}
            for k, i, j in _subtract(c, holes, finest):
                out.append(RegionEntry(_cell_bounds(i, j, k), label))
    return out


def _rgb(c) -> str:
    return "#%02x%02x%02x" % c


def render_region_map(entries: Sequence[RegionEntry], depth: Optional[int] = None,
                      interior: Sequence = (), cell_px: int = 1,
                      meta: Optional[str] = None) -> tuple[str, bytes]:
    """SVG and binary PPM of the parameter region lam in [0, 1], mu in [1/2, 1].

    One pixel per cell of width 2^-depth (``depth`` defaults to the finest
    entry).  ``interior`` is a list of cell bounds drawn as an overlay.  The
    curve lam*mu = 1/2 is marked: below it the attractor has no interior.
    """
    if depth is None:
        ks = [_cell_of(e.bounds)[0] for e in entries] + [_cell_of(b)[0] for b in interior]
        depth = max(ks, default=6)
    n = 1 << depth
    W, H = n * cell_px, (n // 2) * cell_px

    def px(lam, mu):
        return float(lam) * W, float(1 - mu) * 2 * H

    img = np.full((n // 2, n, 3), 255, dtype=np.uint8)

    def paint(bounds, color, alpha=1.0):
        l0, l1, m0, m1 = bounds
        c0, c1 = int(l0 * n), int(l1 * n)
        r0, r1 = int((1 - m1) * n), int((1 - m0) * n)
        r0, r1 = max(r0, 0), min(r1, n // 2)
        if alpha >= 1:
            img[r0:r1, c0:c1] = color
        else:
            blk = img[r0:r1, c0:c1].astype(float)
            img[r0:r1, c0:c1] = (blk * (1 - alpha) + np.array(color) * alpha).astype(np.uint8)

    svg = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H + 90}" '
           f'viewBox="0 0 {W} {H + 90}">']
    if meta:
        svg.append(f"<!-- {meta} -->")
    svg.append(f'<rect x="0" y="0" width="{W}" height="{H}" fill="white"/>')
    for e in entries:
        paint(e.bounds, COLORS[e.status])
        l0, l1, m0, m1 = e.bounds
        x0, y0 = px(l0, m1)
        x1, y1 = px(l1, m0)
        svg.append(f'<rect x="{x0:g}" y="{y0:g}" width="{x1 - x0:g}" height="{y1 - y0:g}" '
                   f'fill="{_rgb(COLORS[e.status])}"/>')
    for b in interior:
        paint(b, COLORS["interior"], 0.5)
        l0, l1, m0, m1 = b
        x0, y0 = px(l0, m1)
        x1, y1 = px(l1, m0)
        svg.append(f'<rect x="{x0:g}" y="{y0:g}" width="{x1 - x0:g}" height="{y1 - y0:g}" '
                   f'fill="{_rgb(COLORS["interior"])}" fill-opacity="0.5"/>')
    # region outline: vertices (0, 1), (1/2, 1/2), (1, 1)
    tri = [px(0, 1), px(Fraction(1, 2), Fraction(1, 2)), px(1, 1)]
    svg.append('<polygon points="%s" fill="none" stroke="black" stroke-width="1"/>'
               % " ".join(f"{x:g},{y:g}" for x, y in tri))
    curve = [px(Fraction(1, 2) / m, m) for m in (Fraction(1, 2) + Fraction(k, 64) for k in range(1, 33))
             if Fraction(1, 2) / m < m]
    svg.append('<polyline points="%s" fill="none" stroke="black" stroke-dasharray="4,3"/>'
               % " ".join(f"{x:g},{y:g}" for x, y in curve))
    y = H + 16
    for key, label in LEGEND.items():
        svg.append(f'<rect x="4" y="{y - 10}" width="10" height="10" fill="{_rgb(COLORS[key])}"/>'
                   f'<text x="18" y="{y}" font-size="11">{label}</text>')
        y += 14
    svg.append(f'<text x="4" y="{y}" font-size="11">dashed: lambda*mu = 1/2</text>')
    svg.append("</svg>")
    # mark lam*mu = 1/2 on the raster
    for c in range(n):
        lam = (c + Fraction(1, 2)) / n
        if lam <= 0:
            continue
        mu = Fraction(1, 2) / lam
        if Fraction(1, 2) <= mu <= 1 and lam < mu:
            r = min(int((1 - mu) * n), n // 2 - 1)
            img[r, c] = (0, 0, 0)
    if cell_px > 1:
        img = img.repeat(cell_px, axis=0).repeat(cell_px, axis=1)
    ppm = f"P6\n{img.shape[1]} {img.shape[0]}\n255\n".encode() + img.tobytes()
    return "\n".join(svg) + "\n", ppm


def _write_map(path: str, svg: str, ppm: bytes) -> None:
    if path.endswith(".ppm"):
        atomic_write(path, ppm)
    elif path.endswith(".svg"):
        atomic_write(path, svg)
    else:
        raise CliError(f"map output must end in .svg or .ppm: {path}")


# --------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    command: str
    lam: Optional[str] = None
    mu: Optional[str] = None
    rect: Optional[str] = None
    word: Optional[str] = None
    family: Optional[str] = None
    depth: Optional[int] = None
    iters: int = 20
    level: int = 6
    grid: int = 1024
    kmin: int = 6
    kmax: int = 11
    mmax: int = 8
    nmax: int = 8
    general_len: Optional[int] = 10
    max_size: int = 3
    tries: int = 3
    max_split: int = 0
    axis: str = "x"
    exact: bool = False
    dictionary: Optional[str] = None
    inputs: list = field(default_factory=list)
    g_db: Optional[str] = None
    dim_db: Optional[str] = None
    interior_db: Optional[str] = None
    out: Optional[str] = None
    map_out: Optional[str] = None
    log: Optional[str] = None
    m0: Optional[str] = None
    m1: Optional[str] = None
    workers: int = 1
    seed: int = 0
    points: int = 0
    meta: bool = True

    @classmethod
    def from_args(cls, ns: argparse.Namespace) -> "RunConfig":
        known = set(cls.__dataclass_fields__)
        return cls(**{k: v for k, v in vars(ns).items() if k in known})

    def validate(self) -> None:
        if self.workers < 1:
            raise CliError("--workers must be >= 1")
        if self.depth is not None and self.depth < 1:
            raise CliError("--depth must be >= 1")
        if self.lam is not None:
            parse_rational(self.lam)
        if self.mu is not None:
            parse_rational(self.mu)


# --------------------------------------------------------------------------
# subcommands


def cmd_render(cfg: RunConfig) -> int:
    p = parse_params(cfg.lam, cfg.mu)
    depth = cfg.depth if cfg.depth is not None else 18
    _check_cap("depth", depth, MAX_COVER_DEPTH)
    if cfg.grid < 2 or cfg.grid & (cfg.grid - 1):
        raise CliError("--grid must be a power of two")
    k = cfg.grid.bit_length() - 1
    cover = attractor_cover(p, k, depth=depth, line_stop=True)
    out = cfg.out or "attractor.ppm"
    if out.endswith(".pgm"):
        atomic_write(out, cover.to_pgm())
    elif out.endswith(".csv"):
        atomic_write(out, cover.to_csv())
    else:
        atomic_write(out, cover.to_ppm())
    _emit({"out": out, "cells": cover.count(), "grid": cover.n, "depth": depth})
    return EXIT_OK


def cmd_ycurve(cfg: RunConfig) -> int:
    p = parse_params(cfg.lam, cfg.mu)
    _check_cap("level", cfg.level, max_level())
    y = build_y(p, cfg.level, cap=hard_cap(max_level()))
    out = cfg.out or f"y{cfg.level}.csv"
    atomic_write(out, y.to_svg() if out.endswith(".svg") else y.to_csv())
    _emit({"out": out, "pieces": len(y),
           "vertex_histogram": {str(k): v for k, v in sorted(y.vertex_histogram().items())}})
    return EXIT_OK


def cmd_bcurve(cfg: RunConfig) -> int:
    p = parse_params(cfg.lam, cfg.mu)
    _check_cap("level", cfg.level, max_level())
    enc = b_enclosure(p, cfg.level)
    rows = ["side,x,y"]
    for side, c in (("lower", enc.lower), ("upper", enc.upper)):
        rows += [f"{side},{fmt_fraction(x)},{fmt_fraction(y)}" for x, y in zip(c.xs, c.ys)]
    out = cfg.out or f"b{cfg.level}.csv"
    atomic_write(out, "\n".join(rows) + "\n")
    _emit({"out": out, "level": cfg.level, "width": fmt_fraction(enc.width)})
    return EXIT_OK


def cmd_top(cfg: RunConfig) -> int:
    p = parse_params(cfg.lam, cfg.mu)
    _check_cap("iters", cfg.iters, MAX_TOP_ITERS)
    res = iterate_top(p, n=cfg.iters) if cfg.exact else iterate_top_float(p, n=cfg.iters)
    out = cfg.out or "top.csv"
    if isinstance(res.curve, FloatCurve):
        xs, ys = curve_arrays(res.curve)
        body = "x,y\n" + "".join(f"{x!r},{y!r}\n" for x, y in zip(xs.tolist(), ys.tolist()))
    else:
        body = res.curve.to_csv()
    atomic_write(out, body)
    _emit({"out": out, "steps": res.level, "vertices": len(res.curve), "ok": res.ok,
           "increments": [float(v) for v in res.increments],
           "simplification_error": float(res.simplification_error),
           "diagnostic": None if res.ok else str(res.diagnostic)})
    return EXIT_OK if res.ok else EXIT_ERROR


def cmd_boxdim(cfg: RunConfig) -> int:
    p = parse_params(cfg.lam, cfg.mu)
    est = box_dim_estimate(p, cfg.kmin, cfg.kmax)
    _emit({"slope": est.slope, "stderr": est.stderr, "band": list(est.band),
           "ks": est.ks, "counts": est.counts})
    return EXIT_OK


def _target_rect(cfg: RunConfig):
    if cfg.rect:
        return parse_rect(cfg.rect)
    return parse_params(cfg.lam, cfg.mu)


def cmd_certify_g(cfg: RunConfig) -> int:
    if not cfg.word:
        raise CliError("parse error: --word is required")
    res = certify_g(_target_rect(cfg), parse_word(cfg.word), cfg.max_split, stamp=cfg.meta)
    if isinstance(res, GCertificate):
        rec = res.to_record(cfg.meta)
        if cfg.out:
            atomic_write(cfg.out, jsonl_text([rec]))
        _emit(rec)
        return EXIT_OK
    _emit({"status": res.status.value, "reason": res.reason})
    return EXIT_UNDECIDED if res.status.value == "UNDECIDED" else EXIT_ERROR


def _sweep_summary(report, out: Optional[str]) -> dict:
    s = report.summary()
    s["out"] = out
    return s


def cmd_sweep_g(cfg: RunConfig) -> int:
    depth = cfg.depth if cfg.depth is not None else 8
    _check_cap("depth", depth, MAX_SWEEP_DEPTH)
    words = load_dictionary(cfg.dictionary) if cfg.dictionary else None
    rep = sweep_g(depth, words, max_split=cfg.max_split, workers=cfg.workers, stamp=cfg.meta,
                  cap=hard_cap(MAX_SWEEP_DEPTH))
    out = cfg.out or "g.jsonl"
    atomic_write(out, jsonl_text(rep.records(cfg.meta)))
    if cfg.map_out:
        entries = [RegionEntry(c.rect.bounds(), "G", str(c.word)) for c in rep.certified]
        entries += [RegionEntry(undecided_bounds(u), "undecided") for u in rep.undecided]
        _write_map(cfg.map_out, *render_region_map(entries, depth, meta=None if not cfg.meta else _now()))
    _emit(_sweep_summary(rep, out))
    return EXIT_OK if rep.certified else EXIT_UNDECIDED


def cmd_dim(cfg: RunConfig) -> int:
    if not cfg.family:
        raise CliError("parse error: --family is required")
    target = _target_rect(cfg)
    res = certify_dim(target, parse_family(cfg.family), cfg.axis, stamp=cfg.meta)
    if not isinstance(res, DimCertificate):
        _emit({"status": res.status.value, "reason": res.reason})
        return EXIT_UNDECIDED if res.status.value == "UNDECIDED" else EXIT_ERROR
    rec = res.to_record(cfg.meta)
    if cfg.out:
        atomic_write(cfg.out, jsonl_text([rec]))
    if res.bracket is not None:
        rec["s_float"] = [float(res.bracket.lo), float(res.bracket.hi)]
    _emit(rec)
    return EXIT_OK


def cmd_dim_search(cfg: RunConfig) -> int:
    p = parse_params(cfg.lam, cfg.mu)
    log = cfg.log or "dim_search.jsonl"
    res = search_family(p, cfg.mmax, cfg.nmax, cfg.general_len or None, cfg.max_size, log)
    if res.found:
        c = res.certificate
        _emit({"result": list(c.words), "tried": res.tried, "log": log,
               "s_bracket": [fmt_fraction(c.s_lo), fmt_fraction(c.s_hi)]})
        return EXIT_OK
    _emit({"result": "NONE", "tried": res.tried, "log": log})
    return EXIT_UNDECIDED


def cmd_sweep_dim(cfg: RunConfig) -> int:
    depth = cfg.depth if cfg.depth is not None else 8
    _check_cap("depth", depth, MAX_DIM_SWEEP_DEPTH)
    rep = sweep_dim(depth, cfg.mmax, cfg.nmax, workers=cfg.workers, stamp=cfg.meta,
                    tries=cfg.tries, cap=hard_cap(MAX_DIM_SWEEP_DEPTH))
    out = cfg.out or "dim.jsonl"
    atomic_write(out, jsonl_text(rep.records(cfg.meta)))
    if cfg.map_out:
        entries = [RegionEntry(c.params.bounds(), "dim", list(c.words)) for c in rep.certified]
        entries += [RegionEntry(undecided_bounds(u), "undecided") for u in rep.undecided]
        _write_map(cfg.map_out, *render_region_map(entries, depth, meta=None if not cfg.meta else _now()))
    _emit(_sweep_summary(rep, out))
    return EXIT_OK if rep.certified else EXIT_UNDECIDED


def cmd_interior(cfg: RunConfig) -> int:
    if cfg.m0 or cfg.m1:
        if not (cfg.m0 and cfg.m1):
            raise CliError("parse error: give both --m0 and --m1")
        v = interior_general(parse_matrix(cfg.m0), parse_matrix(cfg.m1), check_contraction=True)
    else:
        v = interior_diag(parse_params(cfg.lam, cfg.mu))
    _emit(v.to_json())
    return EXIT_OK


def interior_sweep(depth: int) -> list[tuple]:
    """Cells of the 2^-depth grid on which the interior test holds throughout."""
    out = []
    for k, i, j in cell_grid(depth):
        b = _cell_bounds(i, j, k)
        v = interior_cell(*b)
        if v.holds:
            out.append((b, v))
    return out


def cmd_sweep_interior(cfg: RunConfig) -> int:
    depth = cfg.depth if cfg.depth is not None else 8
    _check_cap("depth", depth, MAX_MAP_DEPTH)
    cells = interior_sweep(depth)
    out = cfg.out or "interior.jsonl"
    atomic_write(out, jsonl_text(interior_record(b, v) for b, v in cells))
    if cfg.map_out:
        svg, ppm = render_region_map([], depth, [b for b, _ in cells],
                                     meta=None if not cfg.meta else _now())
        _write_map(cfg.map_out, svg, ppm)
    _emit({"depth": depth, "certified": len(cells), "out": out})
    return EXIT_OK


def verify_record(rec: dict) -> tuple[bool, str]:
    kind = rec.get("kind")
    if kind == "G":
        return verify_g_record(rec)
    if kind == "dim":
        return verify_dim_record(rec)
    if kind == "interior":
        return verify_interior_record(rec)
    return False, f"unknown record kind {kind!r}"


def point_checks(rec: dict, k: int, seed: int) -> tuple[int, int]:
    """(passed, tried) exact point-level checks at ``k`` random interior points."""
    if rec["kind"] == "interior":
        # interior cells may touch the region boundary, so sample the cell itself
        l0, l1, m0, m1 = (Fraction(b) for b in rec["rect"])
        rng = np.random.default_rng(seed)
        ok = 0
        for _ in range(k):
            s, t = (Fraction(int(v), 1 << 20) for v in rng.integers(1, 1 << 20, size=2))
            q = (l0 + s * (l1 - l0)) * (m0 + t * (m1 - m0))
            ok += 2 * q ** 6 >= 1
        return ok, k
    rect = ParamRect.from_bounds(*rec["rect"])
    pts = random_points(rect, k, seed)
    ok = 0
    for p in pts:
        if rec["kind"] == "G":
            ok += point_check(p, EPWord.parse(rec["word"]))
        else:
            wit = Witness.from_json(rec["witness"])
            ok += isinstance(certify_dim(p, rec["words"], rec.get("axis", "x"), wit,
                                         solve=False, stamp=False), DimCertificate)
    return ok, len(pts)


def cmd_verify(cfg: RunConfig) -> int:
    if not cfg.inputs:
        raise CliError("parse error: --in is required")
    bad = 0
    total = 0
    for path in cfg.inputs:
        try:
            recs = read_jsonl(path)
        except OSError as exc:
            raise CliError(f"I/O error: cannot read {path}: {exc}") from None
        except ValueError as exc:
            raise CliError(f"parse error: {exc}") from None
        for n, rec in enumerate(recs, 1):
            total += 1
            ok, why = verify_record(rec)
            if ok and cfg.points:
                got, tried = point_checks(rec, cfg.points, cfg.seed + n)
                if got != tried:
                    ok, why = False, f"point checks {got}/{tried}"
            if not ok:
                bad += 1
                print(f"FAIL {path}:{n} rect={rec.get('rect')} {why}", file=sys.stderr)
    _emit({"records": total, "failed": bad})
    return EXIT_OK if bad == 0 else EXIT_ERROR


def _load_bounds(path: Optional[str], kind: str) -> list:
    if not path:
        return []
    try:
        recs = read_jsonl(path)
    except OSError as exc:
        raise CliError(f"I/O error: cannot read {path}: {exc}") from None
    except ValueError as exc:
        raise CliError(f"parse error: {exc}") from None
    out = []
    for rec in recs:
        if rec.get("kind") != kind:
            raise CliError(f"{path}: expected {kind} records, found {rec.get('kind')!r}")
        out.append(tuple(Fraction(b) for b in rec["rect"]))
    return out


def cmd_map(cfg: RunConfig) -> int:
    g = _load_bounds(cfg.g_db, "G")
    d = _load_bounds(cfg.dim_db, "dim")
    inner = _load_bounds(cfg.interior_db, "interior")
    if cfg.depth is not None:
        _check_cap("depth", cfg.depth, MAX_MAP_DEPTH)
    entries = merge_entries(g, d)
    svg, ppm = render_region_map(entries, cfg.depth, inner, meta=None if not cfg.meta else _now())
    out = cfg.out or "map.svg"
    _write_map(out, svg, ppm)
    counts: dict = {}
    for e in entries:
        counts[e.status] = counts.get(e.status, 0) + 1
    _emit({"out": out, "entries": counts})
    return EXIT_OK


COMMANDS = {
    "render": cmd_render, "ycurve": cmd_ycurve, "bcurve": cmd_bcurve, "top": cmd_top,
    "boxdim": cmd_boxdim, "certify-g": cmd_certify_g, "sweep-g": cmd_sweep_g, "dim": cmd_dim,
    "dim-search": cmd_dim_search, "sweep-dim": cmd_sweep_dim, "interior": cmd_interior,
    "sweep-interior": cmd_sweep_interior, "verify": cmd_verify, "map": cmd_map,
}


def run(config: RunConfig) -> int:
    """Dispatch one subcommand; returns the exit status."""
    try:
        config.validate()
        return COMMANDS[config.command](config)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except MemoryError as exc:
        print(f"error: cap violation: {exc}", file=sys.stderr)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except OSError as exc:
        print(f"error: I/O error: {exc}", file=sys.stderr)
    return EXIT_ERROR


# --------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError(f"parse error: {message}")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="affine-top", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"affine-top {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def params(sp):
        sp.add_argument("--lambda", dest="lam", metavar="P/Q")
        sp.add_argument("--mu", dest="mu", metavar="P/Q")

    def common(sp, out=True):
        if out:
            sp.add_argument("--out")
        sp.add_argument("--no-meta", dest="meta", action="store_false",
                        help="omit timestamps so identical runs give identical files")

    sp = sub.add_parser("render", help="raster cover of the attractor")
    params(sp)
    sp.add_argument("--depth", type=int, default=18)
    sp.add_argument("--grid", type=int, default=1024)
    common(sp)

    for name, helptext in (("ycurve", "pieces of the polygon tower Y_n (CSV or SVG)"),
                           ("bcurve", "two-sided enclosure of the maximal attractor's graph")):
        sp = sub.add_parser(name, help=helptext)
        params(sp)
        sp.add_argument("--level", type=int, default=6)
        common(sp)

    sp = sub.add_parser("top", help="iterate the top-boundary operator")
    params(sp)
    sp.add_argument("--iters", type=int, default=20)
    sp.add_argument("--exact", action="store_true", help="rational engine with a box budget")
    common(sp)

    sp = sub.add_parser("boxdim", help="box-counting dimension estimate")
    params(sp)
    sp.add_argument("--kmin", type=int, default=6)
    sp.add_argument("--kmax", type=int, default=11)

    sp = sub.add_parser("certify-g", help="certify a rectangle (or point) in G")
    params(sp)
    sp.add_argument("--rect", help="lam_lo,lam_hi,mu_lo,mu_hi")
    sp.add_argument("--word", help='eventually periodic word, e.g. "(01)"')
    sp.add_argument("--max-split", type=int, default=0)
    common(sp)

    sp = sub.add_parser("sweep-g", help="dyadic sweep of the parameter region for G")
    sp.add_argument("--depth", type=int, default=8)
    sp.add_argument("--dict", dest="dictionary")
    sp.add_argument("--max-split", type=int, default=0)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--map", dest="map_out")
    common(sp)

    sp = sub.add_parser("dim", help="certify dim > 1 with a word family")
    params(sp)
    sp.add_argument("--rect")
    sp.add_argument("--family", help='comma-separated words, e.g. "01,1"')
    sp.add_argument("--axis", choices=("x", "y"), default="x")
    common(sp)

    sp = sub.add_parser("dim-search", help="search word families at one parameter pair")
    params(sp)
    sp.add_argument("--mmax", type=int, default=8)
    sp.add_argument("--nmax", type=int, default=8)
    sp.add_argument("--general-len", type=int, default=10)
    sp.add_argument("--max-size", type=int, default=3)
    sp.add_argument("--log")

    sp = sub.add_parser("sweep-dim", help="dyadic sweep certifying dim > 1")
    sp.add_argument("--depth", type=int, default=8)
    sp.add_argument("--mmax", type=int, default=8)
    sp.add_argument("--nmax", type=int, default=8)
    sp.add_argument("--tries", type=int, default=3)
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--map", dest="map_out")
    common(sp)

    sp = sub.add_parser("interior", help="exact interior test")
    params(sp)
    sp.add_argument("--m0", help="a,b,c,d for a general commuting pair")
    sp.add_argument("--m1")

    sp = sub.add_parser("sweep-interior", help="grid cells where the interior test holds")
    sp.add_argument("--depth", type=int, default=8)
    sp.add_argument("--map", dest="map_out")
    common(sp)

    sp = sub.add_parser("verify", help="re-check a certificate database")
    sp.add_argument("--in", dest="inputs", action="append", metavar="FILE")
    sp.add_argument("--points", type=int, default=0,
                    help="also run exact checks at this many random points per record")
    sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("map", help="render a region map from certificate databases")
    sp.add_argument("--g", dest="g_db")
    sp.add_argument("--dim", dest="dim_db")
    sp.add_argument("--interior", dest="interior_db")
    sp.add_argument("--depth", type=int)
    common(sp)
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return run(RunConfig.from_args(ns))


if __name__ == "__main__":
    sys.exit(main())
