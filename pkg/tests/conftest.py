from fractions import Fraction

import pytest
from hypothesis import settings, strategies as st

from affine_top.core import EPWord, ParamRect, Params

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

FIVE_PAIRS = [("2/5", "9/10"), ("9/20", "3/5"), ("1/3", "4/5"), ("3/5", "7/10"), ("7/10", "19/20")]


@st.composite
def params(draw, max_den=64):
    """Admissible rational pairs: 0 < lam < mu < 1, lam + mu > 1."""
    n = draw(st.integers(4, max_den))
    m = draw(st.integers(n // 2 + 1, n - 1))
    lo = n - m + 1  # lam > 1 - mu
    if lo >= m:
        m = n - 1
        lo = 2
    k = draw(st.integers(lo, m - 1))
    return Params(Fraction(k, n), Fraction(m, n))


@st.composite
def param_rects(draw):
    p = draw(params(max_den=32))
    w = Fraction(1, draw(st.sampled_from([256, 512, 1024, 4096])))
    lam, mu = p.lam, p.mu
    if not ParamRect.admissible(lam, lam + w, mu, mu + w):
        return ParamRect.from_bounds(lam, lam, mu, mu)
    return ParamRect.from_bounds(lam, lam + w, mu, mu + w)


binary = st.text(alphabet="01", min_size=1, max_size=8)


@st.composite
def epwords(draw):
    u = draw(st.text(alphabet="01", max_size=3))
    v = draw(st.text(alphabet="01", min_size=1, max_size=5))
    return EPWord(u, v)


@pytest.fixture
def worked():
    return Params("2/5", "9/10")


# acceptance lines, echoed again in the terminal summary so they survive
# output capture
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
