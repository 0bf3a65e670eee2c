from fractions import Fraction

import pytest
from mpmath import mp

from habibullin_verify.agent import VerificationAgent
from habibullin_verify.config import Settings, configure_precision
from habibullin_verify.hypothesis_certifier import ConjectureParams, Formulation
from habibullin_verify.sharipov_family import FamilyParams, build_h, build_q, build_S


@pytest.fixture(autouse=True)
def standard_precision():
    configure_precision("standard")
    yield
    configure_precision("standard")


@pytest.fixture(scope="session")
def agent():
    return VerificationAgent(Settings())


@pytest.fixture
def c1_params():
    return ConjectureParams(Formulation.C1, 2, Fraction(4))


@pytest.fixture
def c2_params():
    return ConjectureParams(Formulation.C2, 2, Fraction(2))


@pytest.fixture
def c3_params():
    return ConjectureParams(Formulation.C3, 2, Fraction(2))


@pytest.fixture
def h1():
    return build_h(FamilyParams(1))


@pytest.fixture
def q1():
    return build_q(FamilyParams(1))


@pytest.fixture
def S1():
    return build_S(FamilyParams(1))


def _oracle_functions(eps):
    """q, h and S written out directly from their formulas, for mpmath.quad."""
    eps = mp.mpf(eps.numerator) / eps.denominator
    x0 = mp.root(mp.mpf(3) / 5, 4)
    x1 = mp.root(mp.mpf(3) / 5, 8)

    def q(t):
        if t >= x0:
            return 12 * t
        z = (x0 - t) / x0
        return 12 * t * (1 - eps * (21 * z**4 - 34 * z**3 + 16 * z**2 - 2 * z))

    def h(t):
        if t >= x0:
            return 6 * t**2
        z = (x0 - t) / x0
        return 6 * t**2 * (1 - eps * (7 * z**4 - 8 * z**3 + 2 * z**2))

    def S(t):
        if t >= x1:
            return 6 * t**4
        y = t / x1
        return 6 * t**4 * (1 - eps * (7 * y**2 - 3) * (y**2 - 1) ** 3 / 3)

    return x0, x1, q, h, S


@pytest.fixture(scope="session")
def oracle_margin():
    """Conclusion LHS minus RHS by tanh-sinh quadrature, independent of the package."""

    def margin(name, eps):
        x0, x1, q, h, S = _oracle_functions(Fraction(eps))
        if name == "C1":
            lhs = mp.quad(lambda t: S(t) * t**7 / (1 + t**8) ** 2, [0, x1, 10, mp.inf])
            return lhs - 3 * mp.pi / 8
        if name == "C2":
            lhs = mp.quad(lambda t: h(t) / (t * (1 + t**4)), [0, x0, 10, mp.inf])
            return lhs - 3 * mp.pi / 2
        lhs = mp.quad(lambda t: q(t) * mp.log(1 + t ** (-4)), [0, x0, 10, mp.inf])
        return lhs - 6 * mp.pi

    return margin
