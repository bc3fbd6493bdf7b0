import json
from fractions import Fraction as F

import pytest
from hypothesis import given, settings

from affine_top.bcurve import b_enclosure, build_y, contains_point, evaluate
from affine_top.certify import (GCertificate, Status, Undecided, below_b, canonical, certify_g,
                                default_dictionary, load_dictionary, orbit_conditions, point_check,
                                random_points, read_jsonl, sweep_g, undecided_bounds, verify_g_record,
                                write_jsonl)
from affine_top.core import EPWord, ParamRect, mirror, pt_of_word

from .conftest import epwords, params

W01 = EPWord.parse("(01)")
PAPER_RECT = ParamRect.from_bounds("3/8", "7/16", "7/8", "15/16")


@pytest.fixture(scope="module")
def sweep4():
    return sweep_g(4, stamp=False)


def test_orbit_conditions_worked(worked):
    oc = orbit_conditions(worked, W01)
    assert [c.side for c in oc.conditions] == ["<=1", ">=1"]
    assert oc.conditions[0].margin.lo == 1 - F(29, 32)
    assert oc.conditions[1].margin.lo == F(35, 32) - 1
    assert oc.status is Status.PASS
    assert orbit_conditions(worked, EPWord.parse("(0)")).status is Status.PASS


def test_orbit_conditions_on_rect():
    oc = orbit_conditions(PAPER_RECT, W01)
    assert oc.status is Status.PASS
    assert all(c.margin.lo > 0 for c in oc.conditions)


def test_below_b_examples(worked):
    d = below_b(worked, W01, "T1(0,0)")
    assert (d.x_margin.lo, d.y_margin.lo) == (F(1, 10) - F(1, 16), F(27, 32) - F(3, 5))
    assert d.status is Status.PASS
    m = below_b(worked, mirror(W01), "T0(1,1)")
    assert (m.x_margin.lo, m.y_margin.lo) == (F(2, 5) - F(5, 32), F(15, 16) - F(9, 10))
    # equal margins by symmetry
    assert (m.x_margin, m.y_margin) == (d.y_margin, d.x_margin)
    zero = below_b(worked, EPWord.parse("(0)"), "T1(0,0)")
    assert zero.x_margin.lo > 0 and zero.y_margin.hi < 0
    assert zero.status is Status.FAIL
    with pytest.raises(ValueError):
        below_b(worked, W01, "T1(1,1)")


def test_certify_g_examples(worked):
    cert = certify_g(PAPER_RECT, W01)
    assert isinstance(cert, GCertificate)
    assert cert.mirror_word == EPWord.parse("(10)")
    assert all(m.lo >= 0 for m in cert.margins())
    assert isinstance(certify_g(worked, W01), GCertificate)
    res = certify_g(worked, EPWord.parse("(0)"))
    assert isinstance(res, Undecided) and res.status is Status.FAIL
    with pytest.raises(ValueError):
        ParamRect.from_bounds("1/4", "3/8", "5/8", "3/4")


def test_record_roundtrip_and_tamper(tmp_path):
    rec = certify_g(PAPER_RECT, W01).to_record()
    path = tmp_path / "g.jsonl"
    write_jsonl(str(path), [rec])
    (back,) = read_jsonl(str(path))
    assert verify_g_record(back) == (True, "ok")
    bad = json.loads(json.dumps(back))
    bad["margins"][0][0] = "1/1000"
    assert verify_g_record(bad)[0] is False
    bad = dict(back, word="(0)", mirror_word="(1)")
    assert verify_g_record(bad)[0] is False
    bad = dict(back, mirror_word="(01)")
    assert verify_g_record(bad) == (False, "mirror_word is not the mirror of word")
    bad = dict(back, rect=["1/4", "3/8", "5/8", "3/4"])
    assert verify_g_record(bad)[0] is False
    assert verify_g_record({"word": "(01)"})[0] is False


def test_default_dictionary():
    words = default_dictionary()
    assert len(words) == 1888
    assert words[:6] == [EPWord.parse(s) for s in ("(0)", "(1)", "(01)", "(10)", "0(1)", "1(0)")]
    keys = [(len(w), str(w)) for w in words]
    assert keys == sorted(keys)
    assert all(canonical(w) == w for w in words)
    assert len(set(words)) == len(words)


def test_canonical_spellings(worked):
    for long, short in (("0(10)", "(01)"), ("(0101)", "(01)"), ("11(0)", "11(0)"), ("1(01)", "(10)")):
        assert canonical(EPWord.parse(long)) == EPWord.parse(short)
        assert pt_of_word(worked, EPWord.parse(long)) == pt_of_word(worked, EPWord.parse(short))


def test_load_dictionary(tmp_path):
    p = tmp_path / "words.txt"
    p.write_text("(01)  # the worked witness\n\n0(1)\n")
    assert load_dictionary(str(p)) == [W01, EPWord.parse("0(1)")]
    p.write_text("# nothing\n")
    with pytest.raises(ValueError):
        load_dictionary(str(p))


def test_sweep_depth4(sweep4):
    assert sweep4.coverage > 0
    assert 0 <= sweep4.coverage <= 1
    for c in sweep4.certified:
        assert verify_g_record(c.to_record(meta=False)) == (True, "ok")
    cell = [c for c in sweep4.certified
            if c.rect.lam.lo <= F(2, 5) <= c.rect.lam.hi and c.rect.mu.lo <= F(9, 10) <= c.rect.mu.hi]
    assert cell and cell[0].word == W01 and cell[0].rect == PAPER_RECT


def test_sweep_partitions_grid(sweep4):
    rects = [c.rect.bounds() for c in sweep4.certified]
    rects += [undecided_bounds(u) for u in sweep4.undecided]
    # cells are dyadic, interior-disjoint and cover the region (area 1/4 of
    # the triangle, boundary cells included with their full area)
    for i, a in enumerate(rects):
        for b in rects[i + 1:]:
            assert a[1] <= b[0] or b[1] <= a[0] or a[3] <= b[2] or b[3] <= a[2]
    total = sum((l1 - l0) * (m1 - m0) for l0, l1, m0, m1 in rects)
    assert total >= F(1, 4)


def test_sweep_determinism_and_refinement(sweep4):
    again = sweep_g(4, stamp=False)
    assert again.records() == sweep4.records()
    finer = sweep_g(5, stamp=False)
    assert finer.coverage >= sweep4.coverage
    assert sweep_g(4, stamp=False, workers=2).records() == sweep4.records()
    with pytest.raises(MemoryError):
        sweep_g(15)


def test_certified_cells_spot_check(sweep4):
    # exact point checks, and pt_a inside the enclosure of B at a few points
    for k, c in enumerate(sweep4.certified):
        for q in random_points(c.rect, 20, seed=k):
            assert point_check(q, c.word)
    for c in sweep4.certified[:3]:
        q = random_points(c.rect, 1, seed=99)[0]
        enc = b_enclosure(q, 12)
        for a in (c.word, c.mirror_word):
            pt = pt_of_word(q, a)
            assert evaluate(enc.lower, pt.x) <= pt.y <= evaluate(enc.upper, pt.x)


# --------------------------------------------------------------------------
# properties


@settings(max_examples=80)
@given(params(max_den=40), epwords())
def test_mirror_coherence(p, a):
    def passes(w, target):
        return (orbit_conditions(p, w).status is Status.PASS
                and below_b(p, w, target).status is Status.PASS)

    b = mirror(a)
    assert passes(a, "T1(0,0)") == passes(b, "T0(1,1)")
    assert passes(b, "T1(0,0)") == passes(a, "T0(1,1)")
    # swapping the roles of word and mirror is the same certificate
    ok_ab = isinstance(certify_g(p, a, stamp=False), GCertificate)
    ok_ba = isinstance(certify_g(p, b, stamp=False), GCertificate)
    assert ok_ab == (passes(a, "T1(0,0)") and passes(b, "T0(1,1)"))
    assert ok_ba == (passes(b, "T1(0,0)") and passes(a, "T0(1,1)"))


@settings(max_examples=40)
@given(params(max_den=40), epwords())
def test_passing_witness_is_in_b(p, a):
    # orbit conditions put pt_a in every Y_n; check against Y_8 exactly
    if orbit_conditions(p, a).status is not Status.PASS:
        return
    pt = pt_of_word(p, a)
    y = build_y(p, 8)
    assert any(contains_point(q, pt) for q in y.pieces)
