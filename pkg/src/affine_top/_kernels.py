"""Floating-point inner loops: attractor covers and curve simplification.

Every kernel exists twice, as a numba ``@njit`` function and as a plain
numpy/Python version with the same signature.  ``AFFINE_TOP_NUMBA=0``
selects the numpy path; it is also used automatically when numba is not
importable.  Nothing in here is used for certified claims.
"""
from __future__ import annotations

import os

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f


USE_NUMBA = HAVE_NUMBA and os.environ.get("AFFINE_TOP_NUMBA", "1") != "0"


# --------------------------------------------------------------------------
# rectangle covers
#
# maps: float64 array (m, 4) of (ax, ex, dy, fy); a rectangle is
# (x0, x1, y0, y1).  Cells of an n x n grid are indexed grid[col, row].


@njit(cache=True)
def _mark_nb(grid, n, x0, x1, y0, y1):
    i0 = int(np.floor(x0 * n))
    i1 = int(np.ceil(x1 * n)) - 1
    j0 = int(np.floor(y0 * n))
    j1 = int(np.ceil(y1 * n)) - 1
    if i0 < 0:
        i0 = 0
    if j0 < 0:
        j0 = 0
    if i0 > n - 1:
        i0 = n - 1
    if j0 > n - 1:
        j0 = n - 1
    if i1 < i0:
        i1 = i0
    if j1 < j0:
        j1 = j0
    if i1 > n - 1:
        i1 = n - 1
    if j1 > n - 1:
        j1 = n - 1
    for i in range(i0, i1 + 1):
        for j in range(j0, j1 + 1):
            grid[i, j] = True


@njit(cache=True)
def _one_line(n, x0, x1, y0, y1):
    return (int(np.floor(x0 * n)) == int(np.ceil(x1 * n)) - 1
            or int(np.floor(y0 * n)) == int(np.ceil(y1 * n)) - 1)


@njit(cache=True)
def _cover_nb(maps, n, depth, eps, max_leaves, line_stop):
    """Depth-first over words; stop at ``depth`` or when diameter < eps.

    With ``line_stop`` a rectangle inside a single grid row or column is a
    leaf as well.  depth < 0 means no depth limit.  Returns (grid, leaves);
    leaves is -1 when max_leaves was exceeded.
    """
    grid = np.zeros((n, n), dtype=np.bool_)
    m = maps.shape[0]
    cap = 4096
    st = np.empty((cap, 5))
    st[0, 0] = 0.0
    st[0, 1] = 1.0
    st[0, 2] = 0.0
    st[0, 3] = 1.0
    st[0, 4] = 0.0
    top = 1
    leaves = 0
    while top > 0:
        top -= 1
        x0 = st[top, 0]
        x1 = st[top, 1]
        y0 = st[top, 2]
        y1 = st[top, 3]
        d = st[top, 4]
        w = x1 - x0
        h = y1 - y0
        diam = np.sqrt(w * w + h * h)
        if ((depth >= 0 and d >= depth) or (eps > 0.0 and diam < eps)
                or (line_stop and _one_line(n, x0, x1, y0, y1))):
            _mark_nb(grid, n, x0, x1, y0, y1)
            leaves += 1
            if leaves > max_leaves:
                return grid, -1
            continue
        if top + m >= cap:
            cap *= 2
            bigger = np.empty((cap, 5))
            bigger[:top] = st[:top]
            st = bigger
        for k in range(m):
            ax = maps[k, 0]
            ex = maps[k, 1]
            dy = maps[k, 2]
            fy = maps[k, 3]
            st[top, 0] = ax * x0 + ex
            st[top, 1] = ax * x1 + ex
            st[top, 2] = dy * y0 + fy
            st[top, 3] = dy * y1 + fy
            st[top, 4] = d + 1.0
            top += 1
    return grid, leaves


def _mark_np(grid, rects):
    n = grid.shape[0]
    if len(rects) == 0:
        return
    x0, x1, y0, y1 = rects.T
    i0 = np.clip(np.floor(x0 * n).astype(np.int64), 0, n - 1)
    j0 = np.clip(np.floor(y0 * n).astype(np.int64), 0, n - 1)
    i1 = np.clip(np.maximum(np.ceil(x1 * n).astype(np.int64) - 1, i0), 0, n - 1)
    j1 = np.clip(np.maximum(np.ceil(y1 * n).astype(np.int64) - 1, j0), 0, n - 1)
    diff = np.zeros((n + 1, n + 1), dtype=np.int64)
    np.add.at(diff, (i0, j0), 1)
    np.add.at(diff, (i1 + 1, j0), -1)
    np.add.at(diff, (i0, j1 + 1), -1)
    np.add.at(diff, (i1 + 1, j1 + 1), 1)
    acc = diff.cumsum(axis=0).cumsum(axis=1)[:n, :n]
    grid |= acc > 0


def _cover_np(maps, n, depth, eps, max_leaves, line_stop):
    grid = np.zeros((n, n), dtype=bool)
    rects = np.array([[0.0, 1.0, 0.0, 1.0]])
    d = 0
    leaves = 0
    while len(rects):
        w = rects[:, 1] - rects[:, 0]
        h = rects[:, 3] - rects[:, 2]
        done = np.zeros(len(rects), dtype=bool)
        if eps > 0:
            done |= np.sqrt(w * w + h * h) < eps
        if depth >= 0 and d >= depth:
            done[:] = True
        if line_stop:
            done |= np.floor(rects[:, 0] * n) == np.ceil(rects[:, 1] * n) - 1
            done |= np.floor(rects[:, 2] * n) == np.ceil(rects[:, 3] * n) - 1
        leaves += int(done.sum())
        if leaves > max_leaves:
            return grid, -1
        _mark_np(grid, rects[done])
        live = rects[~done]
        if not len(live):
            break
        parts = []
        for ax, ex, dy, fy in maps:
            parts.append(np.column_stack((ax * live[:, 0] + ex, ax * live[:, 1] + ex,
                                          dy * live[:, 2] + fy, dy * live[:, 3] + fy)))
        rects = np.concatenate(parts)
        d += 1
    return grid, leaves


def cover(maps, n, depth=-1, eps=0.0, max_leaves=50_000_000, use_numba=None,
          line_stop=False):
    """Occupied cells of the n x n grid; see :func:`_cover_nb`."""
    maps = np.ascontiguousarray(maps, dtype=np.float64)
    if depth < 0 and eps <= 0:
        raise ValueError("need a depth or a diameter")
    fast = USE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    args = (maps, int(n), int(depth), float(eps), int(max_leaves), bool(line_stop))
    return _cover_nb(*args) if fast else _cover_np(*args)


# --------------------------------------------------------------------------
# Douglas-Peucker with vertical or perpendicular distance


@njit(cache=True)
def _dp_nb(xs, ys, tol, euclid):
    n = xs.shape[0]
    keep = np.zeros(n, dtype=np.bool_)
    keep[0] = True
    keep[n - 1] = True
    stack = np.empty((n, 2), dtype=np.int64)
    stack[0, 0] = 0
    stack[0, 1] = n - 1
    top = 1
    while top > 0:
        top -= 1
        a = stack[top, 0]
        b = stack[top, 1]
        if b - a < 2:
            continue
        slope = (ys[b] - ys[a]) / (xs[b] - xs[a])
        norm = np.sqrt(1.0 + slope * slope) if euclid else 1.0
        best = -1.0
        arg = -1
        for i in range(a + 1, b):
            dev = abs(ys[a] + slope * (xs[i] - xs[a]) - ys[i]) / norm
            if dev > best:
                best = dev
                arg = i
        if best > tol:
            keep[arg] = True
            stack[top, 0] = a
            stack[top, 1] = arg
            stack[top + 1, 0] = arg
            stack[top + 1, 1] = b
            top += 2
    return keep


def _dp_np(xs, ys, tol, euclid):
    n = len(xs)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        a, b = stack.pop()
        if b - a < 2:
            continue
        seg_x = xs[a + 1:b]
        slope = (ys[b] - ys[a]) / (xs[b] - xs[a])
        chord = ys[a] + slope * (seg_x - xs[a])
        dev = np.abs(chord - ys[a + 1:b])
        if euclid:
            dev = dev / np.sqrt(1.0 + slope * slope)
        k = int(np.argmax(dev))
        if dev[k] > tol:
            arg = a + 1 + k
            keep[arg] = True
            stack.append((a, arg))
            stack.append((arg, b))
    return keep


def dp_simplify(xs, ys, tol, euclid=False, use_numba=None):
    """Mask of vertices kept by Douglas-Peucker.

    Distances to the chord are vertical, or perpendicular when ``euclid``.
    """
    xs = np.ascontiguousarray(xs, dtype=np.float64)
    ys = np.ascontiguousarray(ys, dtype=np.float64)
    fast = USE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    if len(xs) <= 2:
        return np.ones(len(xs), dtype=bool)
    if fast:
        return _dp_nb(xs, ys, float(tol), bool(euclid))
    return _dp_np(xs, ys, float(tol), bool(euclid))


# --------------------------------------------------------------------------
# float64 curve operations for long R-iterations


def envelope_np(x1, y1, x2, y2, jump_tol=1e-9):
    """Upper envelope of two increasing PL graphs with overlapping domains.

    Graph 1 must start left of graph 2 and graph 2 must end right of graph 1.
    Returns (xs, ys, jump); jump > jump_tol means the envelope is
    discontinuous where graph 1 ends or graph 2 starts.
    """
    a, b = x2[0], x1[-1]
    if a > b:
        raise ValueError("domains do not overlap")
    jump = 0.0
    # envelope continuity at the overlap ends
    jump = max(jump, y2[0] - np.interp(a, x1, y1), 0.0)
    jump = max(jump, y1[-1] - np.interp(b, x2, y2), 0.0)
    mx = np.union1d(x1[(x1 >= a) & (x1 <= b)], x2[(x2 >= a) & (x2 <= b)])
    u = np.interp(mx, x1, y1)
    v = np.interp(mx, x2, y2)
    d = u - v
    cross = np.flatnonzero(d[:-1] * d[1:] < 0)
    t = d[cross] / (d[cross] - d[cross + 1])
    cx = mx[cross] + t * (mx[cross + 1] - mx[cross])
    cy = u[cross] + t * (u[cross + 1] - u[cross])
    ox = np.concatenate((x1[x1 < a], mx, cx, x2[x2 > b]))
    oy = np.concatenate((y1[x1 < a], np.maximum(u, v), cy, y2[x2 > b]))
    order = np.argsort(ox, kind="stable")
    ox, oy = ox[order], oy[order]
    keep = np.ones(len(ox), dtype=bool)
    keep[1:] = np.diff(ox) > 0
    ox, oy = ox[keep], np.maximum.accumulate(oy[keep])
    return ox, oy, jump


def vertical_gap_np(x1, y1, x2, y2):
    """(min, argmin x, max) of graph2 - graph1 over the merged vertices."""
    mx = np.union1d(x1, x2)
    d = np.interp(mx, x2, y2) - np.interp(mx, x1, y1)
    i = int(np.argmin(d))
    return float(d[i]), float(mx[i]), float(d.max())


# --------------------------------------------------------------------------
# G-witness margins at a point
#
# sym: int8 array (W, Lmax) holding prefix + period of each word; plen and
# vlen their lengths.  The margin of a word is the least of its orbit
# margins (1 - sum for a 0, sum - 1 for a 1) and its two dominance margins
# against T1(0,0); it is a necessary condition, never a certificate.


def _word_margins_py(lam, mu, sym, plen, vlen, out):
    for w in range(sym.shape[0]):
        p = plen[w]
        L = p + vlen[w]
        ax, ex, dy, fy = 1.0, 0.0, 1.0, 0.0
        for i in range(L - 1, p - 1, -1):
            if sym[w, i] == 0:
                ax, ex, dy, fy = lam * ax, lam * ex, mu * dy, mu * fy
            else:
                ax, ex, dy, fy = mu * ax, mu * ex + 1 - mu, lam * dy, lam * fy + 1 - lam
        x = ex / (1 - ax)
        y = fy / (1 - dy)
        best = np.inf
        for i in range(L - 1, -1, -1):
            if sym[w, i] == 0:
                x, y = lam * x, mu * y
                m = 1 - (x + y)
            else:
                x, y = mu * x + 1 - mu, lam * y + 1 - lam
                m = x + y - 1
            if m < best:
                best = m
        best = min(best, (1 - mu) - x, y - (1 - lam))
        out[w] = best


_word_margins_nb = njit(cache=True)(_word_margins_py)


def word_margins(lam, mu, sym, plen, vlen, use_numba=None):
    """Float margin of every encoded word at (lam, mu); see the block comment."""
    out = np.empty(sym.shape[0])
    fast = USE_NUMBA if use_numba is None else (use_numba and HAVE_NUMBA)
    (_word_margins_nb if fast else _word_margins_py)(float(lam), float(mu), sym, plen, vlen, out)
    return out
