import json
import random
from fractions import Fraction as F

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from affine_top.certify import Status, Undecided, cell_grid, undecided_bounds
from affine_top.core import ParamRect, Params, word_map
from affine_top.dimension import (DimCertificate, axis_scales, certify_dim, equation_lhs, family_box,
                                  family_one, family_two, feng_wang_dim, mirror_family, rosc_check,
                                  search_family, solve_dimension, sweep_dim, verify_dim_record)
from affine_top.topcurve import box_dim_estimate, fit_box_dimension

from .conftest import binary, params

S_WORKED = 1.244273660


def float_root(scales, lo=1.0, hi=2.0):
    """Plain float bisection of sum a b^(s-1) = 1."""
    f = lambda s: sum(a * b ** (s - 1) for a, b in scales) - 1
    for _ in range(200):
        mid = (lo + hi) / 2
        lo, hi = (mid, hi) if f(mid) > 0 else (lo, mid)
    return (lo + hi) / 2


@pytest.fixture(scope="module")
def sweep5():
    return sweep_dim(5, stamp=False)


def test_axis_scales(worked):
    assert axis_scales(worked, "01") == (F(9, 25), F(9, 25))
    assert axis_scales(worked, "1") == (F(9, 10), F(2, 5))
    assert axis_scales(worked, "111") == (F(729, 1000), F(8, 125))
    with pytest.raises(ValueError):
        axis_scales(worked, "")


def test_family_box(worked):
    X = family_box(worked, ("01", "1"))
    assert X == (F(1, 16), 1, F(27, 32), 1)
    for w in ("01", "1"):
        m = word_map(worked, w)
        assert X[0] <= m.ax * X[0] + m.ex and m.ax * X[1] + m.ex <= X[1]
        assert X[2] <= m.dy * X[2] + m.fy and m.dy * X[3] + m.fy <= X[3]
    with pytest.raises(ValueError):
        family_box(worked, ("1", "11"))
    with pytest.raises(ValueError):
        family_box(worked, ("01",))


def test_rosc_worked(worked):
    ev = rosc_check(worked, ("01", "1"))
    assert ev.status is Status.PASS
    assert (ev.disjoint_status, ev.cover_status, ev.overlap_status) == (Status.PASS,) * 3
    # projection of the family is all of [1/16, 1]
    lo = min(iv[0].lo for iv in ev.projections)
    hi = max(iv[1].hi for iv in ev.projections)
    assert (lo, hi) == (F(1, 16), 1)


def test_rosc_full_pair_fails(worked):
    # the images of the unit square under T0 and T1 overlap since lam + mu > 1
    lam, mu = worked.lam, worked.mu
    assert 1 - mu < lam and 1 - lam < mu
    ev = rosc_check(worked, ("0", "1"))
    assert ev.disjoint_status is Status.FAIL and ev.status is Status.FAIL


def _sampled_cover(p, ws, n=1000, seed=0):
    """Membership sampling of [xmin, xmax] in the union of the projected images."""
    X = family_box(p, ws)
    ivs = []
    for w in ws:
        m = word_map(p, w)
        ivs.append((m.ax * X[0] + m.ex, m.ax * X[1] + m.ex))
    rng = random.Random(seed)
    pts = [X[0] + (X[1] - X[0]) * F(rng.randint(0, 10 ** 6), 10 ** 6) for _ in range(n)]
    return all(any(a <= x <= b for a, b in ivs) for x in pts)


def test_rosc_cover_against_sampling():
    for pair in (("2/5", "9/10"), ("1/3", "4/5"), ("7/10", "19/20"), ("9/20", "3/5")):
        p = Params(*pair)
        ws = ("01", "11")
        ev = rosc_check(p, ws)
        sampled = _sampled_cover(p, ws)
        if ev.cover_status is Status.PASS:
            assert sampled, pair
        if not sampled:
            assert ev.cover_status is not Status.PASS, pair


def test_feng_wang_worked(worked):
    cert = feng_wang_dim(worked, ("01", "1"))
    assert cert.bracket.width <= F(1, 10 ** 9)
    assert cert.s_lo <= F("1.2442736605") and cert.s_hi >= F("1.2442736595")
    assert abs(float(cert.s_lo) - S_WORKED) < 1e-6
    scales = [axis_scales(worked, w) for w in ("01", "1")]
    assert abs(float(cert.s_lo) - float_root([(float(a), float(b)) for a, b in scales])) < 1e-8
    # the corrected form: (lam mu)^s + mu lam^(s-1) = 1
    lam, mu, s = 0.4, 0.9, float(cert.s_lo)
    assert abs((lam * mu) ** s + mu * lam ** (s - 1) - 1) < 1e-8
    # the transposed form is far from 1 at the same s
    assert abs((lam * mu) ** s + mu ** (s - 1) * lam - 1) > 0.1
    assert equation_lhs(scales, cert.s_lo).lo > 1 > equation_lhs(scales, cert.s_hi).hi


def test_solver_preconditions():
    with pytest.raises(ValueError):
        solve_dimension([(F(1, 2), F(1, 2)), (F(1, 2), F(1, 2))])
    with pytest.raises(ValueError):
        solve_dimension([(F(1, 4), F(1, 2)), (F(1, 2), F(1, 4))])
    with pytest.raises(ValueError):
        solve_dimension([(F(1, 3), F(1, 9)), (F(1, 3), F(1, 9))])


def test_bedford_mcmullen_oracle():
    # two maps scaling x by 1/2 and y by 1/4 with projections tiling [0, 1]:
    # 2 (1/2) (1/4)^(s-1) = 1 gives s = 1 exactly
    br = solve_dimension([(F(1, 2), F(1, 4)), (F(1, 2), F(1, 4))])
    assert br.lo == br.hi == 1
    maps = np.array([[0.5, 0.0, 0.25, 0.0], [0.5, 0.5, 0.25, 0.75]])
    est = box_dim_estimate(Params("2/5", "9/10"), 6, 11, maps=maps)
    assert abs(est.slope - 1) < 0.05


def test_certify_dim_rect_examples():
    rect = ParamRect.from_bounds("3/8", "13/32", "7/8", "29/32")
    cert = certify_dim(rect, ("01", "11"), stamp=False)
    assert isinstance(cert, DimCertificate)
    assert cert.sum_a.lo > 0 and cert.bracket is None
    res = certify_dim(rect, ("0", "1"), stamp=False)
    assert isinstance(res, Undecided) and res.status is Status.FAIL


def test_record_verify_and_tamper(worked):
    cert = certify_dim(worked, ("01", "1"), stamp=False)
    rec = json.loads(json.dumps(cert.to_record()))
    assert verify_dim_record(rec) == (True, "ok")
    bad = json.loads(json.dumps(rec))
    bad["margins"][0][1] = "7"
    assert verify_dim_record(bad)[0] is False
    bad = dict(rec, s_bracket=["5/4", "13/10"])
    assert verify_dim_record(bad) == (False, "bracket does not enclose the root")
    bad = dict(rec, words=["0", "1"])
    assert verify_dim_record(bad)[0] is False
    assert verify_dim_record({"rect": rec["rect"]})[0] is False


def test_search_worked(worked, tmp_path):
    res = search_family(worked, general_len=None, log_path=str(tmp_path / "log.jsonl"))
    assert res.found and res.certificate.words == family_one(1, 1)
    assert abs(float(res.certificate.s_lo) - S_WORKED) < 1e-6
    lines = (tmp_path / "log.jsonl").read_text().splitlines()
    assert json.loads(lines[-1])["result"] == ["01", "1"]


def test_search_parametric_none(tmp_path):
    p = Params("9/20", "3/5")
    log = tmp_path / "log.jsonl"
    res = search_family(p, 8, 8, general_len=None, log_path=str(log))
    assert not res.found
    entries = [json.loads(x) for x in log.read_text().splitlines()]
    assert entries[-1] == {"event": "end", "result": "NONE", "tried": res.tried}
    labels = {(e["stage"], tuple(e["label"])) for e in entries if e.get("stage") in ("family1", "family2")}
    assert ("family1", (8, 8)) in labels and ("family2", (8, 8)) in labels


def test_family_shapes():
    assert family_one(2, 3) == ("011", "111")
    assert family_two(1, 3) == ("01", "10", "110", "1110")


def test_sweep_dim_depth5(sweep5):
    rect = ParamRect.from_bounds("3/8", "13/32", "7/8", "29/32")
    assert any(c.params == rect for c in sweep5.certified)
    for c in sweep5.certified:
        assert verify_dim_record(c.to_record(meta=False)) == (True, "ok")
        l0, _, m0, _ = c.params.bounds()
        assert l0 + m0 > 1
    # every finest cell meeting the line lam + mu = 1 stays undecided
    undecided = {undecided_bounds(u) for u in sweep5.undecided}
    touching = [(k, i, j) for k, i, j in cell_grid(5) if i + j <= 32 - 1 <= i + j + 1]
    assert touching
    for _, i, j in touching:
        h = F(1, 32)
        assert (i * h, (i + 1) * h, j * h, (j + 1) * h) in undecided


def test_sweep_dim_refines(sweep5):
    s4 = sweep_dim(4, stamp=False)
    assert s4.coverage <= sweep5.coverage
    assert sweep_dim(4, stamp=False).records() == s4.records()


def test_certificate_vs_estimator(worked):
    cert = feng_wang_dim(worked, ("01", "1"))
    est = box_dim_estimate(worked, 6, 11)
    assert est.slope >= float(cert.s_lo) - 0.15


def test_box_fit_known_line():
    ks = [4, 5, 6, 7]
    est = fit_box_dimension(ks, [2 ** (1.5 * k + 1) for k in ks])
    assert abs(est.slope - 1.5) < 1e-12 and est.stderr < 1e-9


# --------------------------------------------------------------------------
# properties


@given(params(), binary)
def test_scale_product_identity(p, w):
    a, b = axis_scales(p, w)
    assert a * b == (p.lam * p.mu) ** len(w)


@settings(max_examples=40)
@given(st.lists(st.tuples(st.fractions(F(1, 20), F(19, 20), max_denominator=40),
                          st.fractions(F(1, 20), F(19, 20), max_denominator=40)),
                min_size=2, max_size=4))
def test_lhs_decreasing_and_bracket(pairs):
    scales = [(max(a, b), min(a, b)) for a, b in pairs]
    if all(a == b for a, b in scales) or sum(a for a, _ in scales) <= 1:
        return
    if sum(a * b for a, b in scales) >= 1:  # root above 2
        return
    vals = [equation_lhs(scales, F(k, 8)) for k in range(8, 17)]
    assert all(u.lo > v.hi for u, v in zip(vals, vals[1:]))
    br = solve_dimension(scales, tol=1e-6)
    ref = float_root([(float(a), float(b)) for a, b in scales])
    assert float(br.lo) - 1e-9 <= ref <= float(br.hi) + 1e-9


FAMILIES = [("01", "1"), ("01", "11"), ("011", "11"), ("0111", "111"), ("011", "10", "110")]


def test_mirror_family_symmetry():
    rng = random.Random(7)
    pts = []
    while len(pts) < 5:
        lam, mu = F(rng.randint(1, 99), 100), F(rng.randint(1, 99), 100)
        if 0 < lam < mu < 1 and lam + mu > 1:
            pts.append(Params(lam, mu))
    for p in pts:
        for ws in FAMILIES:
            a = certify_dim(p, ws, "x", solve=False, stamp=False)
            b = certify_dim(p, mirror_family(ws), "y", solve=False, stamp=False)
            assert isinstance(a, DimCertificate) == isinstance(b, DimCertificate), (p, ws)
            if isinstance(a, DimCertificate):
                assert sorted(m.lo for m in a.margins()) == sorted(m.lo for m in b.margins())
