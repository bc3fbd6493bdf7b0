import random
from fractions import Fraction as F

import pytest
from hypothesis import given

from affine_top.core import Params
from affine_top.interior import (WITNESS_NON_SCALAR, WITNESS_SCALAR, Case, Matrix2, diag_matrices,
                                 interior_cell, interior_diag, interior_general, interior_record,
                                 verify_interior_record)

from .conftest import params

ROT = Matrix2(F(3, 5), F(-4, 5), F(4, 5), F(3, 5))  # rotation by atan(4/3)


def test_diag_examples(worked):
    v = interior_diag(Params("19/20", "24/25"))
    assert v.holds and v.case is Case.SCALAR and v.witness == WITNESS_SCALAR
    assert v.quantity == F(114, 125) ** 3
    assert 2 * F(114, 125) ** 6 >= 1
    v = interior_diag(worked)
    assert not v.holds and worked.lam * worked.mu < F(1, 2)


def test_threshold_without_square_roots():
    # 2^(-1/6) = 0.8908987...: rationals on either side decide exactly
    for q, want in ((F(8909, 10000), True), (F(8908, 10000), False)):
        assert (2 * q ** 6 >= 1) is want
    # det = 1/sqrt(2) is irrational, so the equality case never arises here


def test_general_matches_diag_example():
    p = Params("19/20", "24/25")
    v = interior_general(*diag_matrices(p), u=(1 - p.mu, 1 - p.lam))
    assert v.case is Case.SCALAR and v.holds
    assert v.quantity == interior_diag(p).quantity


def test_non_commuting_pair():
    shear = Matrix2(1, F(1, 2), 0, 1)
    v = interior_general(ROT * F(1, 2), shear * F(1, 2))
    assert v.case is Case.NOT_APPLICABLE and not v.holds and v.witness == ()


def test_rotation_branch():
    for r, want in ((F(19, 20), True), (F(9, 10), False), (F(23, 25), True)):
        M0 = ROT * r
        v = interior_general(M0, M0, check_contraction=True)
        assert v.case is Case.NON_SCALAR and v.witness == WITNESS_NON_SCALAR
        assert v.quantity == r ** 4
        assert v.holds is want is (2 * r ** 8 >= 1)
        assert v.contraction is True


def test_matrix_basics():
    m = Matrix2(1, 2, 3, 4)
    assert (m @ Matrix2.diag(1, 1)) == m
    assert m.det == -2 and m.trace == 5
    assert not Matrix2.diag(F(1, 2), F(3, 4)).is_scalar()
    assert Matrix2.diag(F(1, 2), F(1, 2)).is_scalar()
    assert Matrix2.diag(F(1, 2), F(3, 4)).is_contraction()
    assert not Matrix2.diag(F(1, 2), F(5, 4)).is_contraction()


def test_cell_and_record():
    v = interior_cell("15/16", "31/32", "31/32", "1")
    assert v.holds
    rec = interior_record(("15/16", "31/32", "31/32", "1"), v)
    assert verify_interior_record(rec) == (True, "ok")
    assert verify_interior_record(dict(rec, det="1/2"))[0] is False
    assert verify_interior_record(dict(rec, rect=["1/2", "9/16", "1/2", "9/16"]))[0] is False
    assert verify_interior_record({"rect": ["x"]})[0] is False
    with pytest.raises(ValueError):
        interior_cell("1/2", "1/4", "1/2", "1")


def test_grid_threshold():
    for i in range(1, 50):
        for j in range(1, 50):
            lam, mu = F(i, 50), F(j, 50)
            if not (lam < mu and lam + mu > 1):
                continue
            v = interior_diag(Params(lam, mu))
            if lam * mu >= F(892, 1000):
                assert v.holds
            if lam * mu <= F(89, 100):
                assert not v.holds


# --------------------------------------------------------------------------
# properties


@given(params(max_den=200))
def test_diag_agrees_with_general(p):
    assert interior_diag(p) == interior_general(*diag_matrices(p))


@given(params(max_den=200), params(max_den=200))
def test_monotone_in_product(p, q):
    if p.lam * p.mu < q.lam * q.mu and interior_diag(p).holds:
        assert interior_diag(q).holds


def test_cell_corner_decides():
    rng = random.Random(5)
    for _ in range(200):
        l0 = F(rng.randint(400, 990), 1000)
        m0 = F(rng.randint(int(l0 * 1000) + 1, 999), 1000)
        h = F(1, 256)
        cell = interior_cell(l0, l0 + h, m0, m0 + h)
        if cell.holds:
            for _ in range(5):
                lam = l0 + h * F(rng.randint(0, 64), 64)
                mu = m0 + h * F(rng.randint(0, 64), 64)
                if lam < mu < 1:
                    assert interior_diag(Params(lam, mu)).holds
