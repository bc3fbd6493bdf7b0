"""Exact interior criteria for two-map IFS with commuting linear parts.

For {T0 x = M0 x, T1 x = M1 x + u} with M = M0 M1 = M1 M0: a non-scalar M
with |det M| >= 1/sqrt(2) gives non-empty interior through the sub-IFS
{T0T1, T1T0}; a scalar M needs |det M0^2 M1| >= 1/sqrt(2) and uses
{T0T1T0, T0^2T1}.  Both sub-IFS share one linear part, and the conclusion
is taken from the known result for such pairs.  All comparisons are
squared so no square root is ever evaluated.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .core import Params, fmt_fraction, to_fraction


class Case(enum.Enum):
    NON_SCALAR = "NON_SCALAR"
    SCALAR = "SCALAR"
    NOT_APPLICABLE = "NOT_APPLICABLE"


@dataclass(frozen=True)
class Matrix2:
    a: Fraction
    b: Fraction
    c: Fraction
    d: Fraction

    def __post_init__(self):
        for name in "abcd":
            object.__setattr__(self, name, to_fraction(getattr(self, name)))

    @classmethod
    def diag(cls, x, y) -> "Matrix2":
        return cls(x, 0, 0, y)

    def __matmul__(self, o: "Matrix2") -> "Matrix2":
        return Matrix2(self.a * o.a + self.b * o.c, self.a * o.b + self.b * o.d,
                       self.c * o.a + self.d * o.c, self.c * o.b + self.d * o.d)

    def __mul__(self, k) -> "Matrix2":
        k = to_fraction(k)
        return Matrix2(k * self.a, k * self.b, k * self.c, k * self.d)

    __rmul__ = __mul__

    @property
    def det(self) -> Fraction:
        return self.a * self.d - self.b * self.c

    @property
    def trace(self) -> Fraction:
        return self.a + self.d

    def is_scalar(self) -> bool:
        return self.b == 0 and self.c == 0 and self.a == self.d

    def is_contraction(self) -> bool:
        """Spectral radius < 1, by the exact test |det| < 1 and |tr| < 1 + det."""
        return abs(self.det) < 1 and abs(self.trace) < 1 + self.det

    def to_list(self) -> list[list[str]]:
        return [[fmt_fraction(self.a), fmt_fraction(self.b)],
                [fmt_fraction(self.c), fmt_fraction(self.d)]]


@dataclass(frozen=True)
class InteriorVerdict:
    case: Case
    quantity: Optional[Fraction]  # the determinant that is compared with 1/sqrt(2)
    holds: bool
    witness: tuple = ()
    contraction: Optional[bool] = None

    def to_json(self) -> dict:
        return {"case": self.case.value,
                "det": None if self.quantity is None else fmt_fraction(self.quantity),
                "verdict": self.holds, "witness": list(self.witness),
                "contraction": self.contraction}


CHECKER_VERSION = "affine_top.interior/1"
WITNESS_NON_SCALAR = ("T0T1", "T1T0")
WITNESS_SCALAR = ("T0T1T0", "T0T0T1")


def _det_test(det: Fraction) -> bool:
    # |det| >= 1/sqrt(2)  <=>  2 det^2 >= 1
    return 2 * det * det >= 1


def interior_general(M0: Matrix2, M1: Matrix2, u: Optional[Sequence] = None,
                     check_contraction: bool = False) -> InteriorVerdict:
    """Verdict for {M0 x, M1 x + u}; ``u`` does not enter the criterion."""
    M = M0 @ M1
    contraction = (M0.is_contraction() and M1.is_contraction()) if check_contraction else None
    if M != M1 @ M0:
        return InteriorVerdict(Case.NOT_APPLICABLE, None, False, (), contraction)
    if not M.is_scalar():
        return InteriorVerdict(Case.NON_SCALAR, M.det, _det_test(M.det), WITNESS_NON_SCALAR,
                               contraction)
    q = (M0 @ M0 @ M1).det
    return InteriorVerdict(Case.SCALAR, q, _det_test(q), WITNESS_SCALAR, contraction)


def interior_diag(p: Params) -> InteriorVerdict:
    """The diagonal family: M = diag(lam mu, lam mu) is scalar, so the test
    is |det M0^2 M1| = (lam mu)^3 >= 1/sqrt(2), i.e. 2 (lam mu)^6 >= 1."""
    q = (p.lam * p.mu) ** 3
    return InteriorVerdict(Case.SCALAR, q, 2 * (p.lam * p.mu) ** 6 >= 1, WITNESS_SCALAR)


def interior_cell(lam_lo, lam_hi, mu_lo, mu_hi) -> InteriorVerdict:
    """:func:`interior_diag` for every admissible pair of a parameter cell.

    The test only involves lam*mu and is monotone in it, so the lower-left
    corner decides the whole cell.  The corner itself need not be admissible.
    """
    lam_lo, mu_lo = to_fraction(lam_lo), to_fraction(mu_lo)
    if not (0 <= lam_lo <= to_fraction(lam_hi) and 0 <= mu_lo <= to_fraction(mu_hi)):
        raise ValueError("bad cell bounds")
    q = (lam_lo * mu_lo) ** 3
    return InteriorVerdict(Case.SCALAR, q, 2 * (lam_lo * mu_lo) ** 6 >= 1, WITNESS_SCALAR)


def interior_record(bounds, verdict: InteriorVerdict) -> dict:
    return {"kind": "interior", "rect": [fmt_fraction(to_fraction(b)) for b in bounds],
            **verdict.to_json(), "version": CHECKER_VERSION}


def verify_interior_record(rec: dict) -> tuple[bool, str]:
    try:
        v = interior_cell(*rec["rect"])
    except (KeyError, ValueError, TypeError, ZeroDivisionError) as exc:
        return False, f"malformed record: {exc}"
    if not v.holds:
        return False, "determinant test fails at the lower corner"
    if rec.get("det") != fmt_fraction(v.quantity) or rec.get("verdict") is not True:
        return False, "stored determinant or verdict differs from the recomputed one"
    return True, "ok"


def diag_matrices(p: Params) -> tuple[Matrix2, Matrix2]:
    return Matrix2.diag(p.lam, p.mu), Matrix2.diag(p.mu, p.lam)


__all__ = ["Case", "Matrix2", "InteriorVerdict", "interior_general", "interior_diag",
           "interior_cell", "interior_record", "verify_interior_record",
           "diag_matrices", "WITNESS_NON_SCALAR", "WITNESS_SCALAR"]
