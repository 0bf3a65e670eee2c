from dataclasses import replace
from fractions import Fraction
import random
from math import sqrt

import pytest
from mpmath import mp

from habibullin_verify.exact_core import (
    RationalPolynomial,
    SignVerdict,
    ZeroPolynomialError,
    as_rational,
    certify_sign,
    directed_decimal,
    interval_contains,
    interval_to_dict,
    isolate_roots,
    poly_arith,
    poly_derivative,
    poly_integral_definite,
    to_interval,
)
from habibullin_verify.sharipov_family import R_TAU, REFLECT, U_TAU, V_THETA

X = RationalPolynomial.identity()


def test_poly_arith_examples():
    assert poly_arith(1 + X, 1 - X, "mul") == RationalPolynomial((1, 0, -1))
    assert poly_arith(X**2, REFLECT, "compose_affine") == RationalPolynomial((1, -2, 1))
    assert poly_arith(U_TAU, RationalPolynomial.zero(), "add") == U_TAU


def test_compose_affine_rejects_nonlinear_inner():
    with pytest.raises(ValueError):
        (X**2).compose_affine(X**2)


def test_derivative_of_U():
    assert U_TAU.derivative() == RationalPolynomial((0, 4, -24, 28))
    assert RationalPolynomial.constant(5).derivative().is_zero


def test_V_derivative_has_double_root_at_one():
    dv = V_THETA.derivative()
    assert dv.degree == 7
    assert dv(1) == 0
    assert dv.derivative()(1) == 0


def test_definite_integrals():
    assert poly_integral_definite(X * (1 - X), 0, 1) == Fraction(1, 6)
    assert poly_integral_definite(REFLECT * U_TAU, 0, 1) == 0
    assert poly_integral_definite(X**5 * V_THETA, 0, 1) == 0


def test_isolate_two_simple_roots():
    p = RationalPolynomial((2, -8, 7))
    roots = isolate_roots(p, 0, 1)
    assert len(roots) == 2
    for enclosure, exact in zip(roots, [(4 - sqrt(2)) / 7, (4 + sqrt(2)) / 7]):
        assert enclosure.multiplicity == 1
        assert enclosure.lower <= exact <= enclosure.upper
    assert roots[0].upper < roots[1].lower


def test_isolate_without_roots():
    assert isolate_roots(RationalPolynomial((1, 0, 1)), -1, 1) == []


def test_isolate_double_root():
    (root,) = isolate_roots(X**2, -1, 1)
    assert root.exact and root.lower == 0
    assert root.multiplicity == 2


def test_isolate_with_refinement_width():
    roots = isolate_roots(RationalPolynomial((-2, 0, 1)), 0, 2, width=Fraction(1, 10**12))
    assert roots[0].width <= Fraction(1, 10**12)
    assert roots[0].lower ** 2 < 2 < roots[0].upper ** 2


def test_isolate_zero_polynomial():
    with pytest.raises(ZeroPolynomialError):
        isolate_roots(RationalPolynomial.zero(), 0, 1)


def test_isolate_empty_domain():
    with pytest.raises(ValueError):
        isolate_roots(X, 1, 1)


def test_square_free_decomposition():
    p = (X - 1) ** 3 * (X + 2)
    factors = dict((m, f) for f, m in p.square_free_decomposition())
    assert factors[1] == X + 2
    assert factors[3] == X - 1


def test_sign_of_square():
    cert = certify_sign(X**2, -1, 1)
    assert cert.verdict is SignVerdict.NONNEGATIVE
    assert cert.recheck()


def test_sign_indefinite_has_witness():
    p = RationalPolynomial((2, -8, 7))
    cert = certify_sign(p, 0, 1)
    assert cert.verdict is SignVerdict.INDEFINITE
    assert p(cert.witness) < 0
    assert p(Fraction(1, 2)) == Fraction(-1, 4)
    assert cert.recheck()


def test_sign_with_endpoint_root():
    p = 1 - R_TAU
    cert = certify_sign(p, 0, 1)
    assert cert.verdict is SignVerdict.NONNEGATIVE
    assert cert.endpoint_values[1] == 0
    assert any(e.exact and e.lower == 1 for e in cert.root_enclosures)
    assert cert.recheck()


def test_sign_nonpositive():
    cert = certify_sign(-(X**2) - 1, 0, 1)
    assert cert.verdict is SignVerdict.NONPOSITIVE
    assert cert.recheck()


def test_zero_polynomial_is_nonnegative():
    cert = certify_sign(RationalPolynomial.zero(), 0, 1)
    assert cert.zero_polynomial
    assert cert.verdict is SignVerdict.NONNEGATIVE
    assert cert.recheck()


def test_recheck_catches_a_forged_verdict():
    cert = certify_sign(RationalPolynomial((2, -8, 7)), 0, 1)
    forged = replace(cert, verdict=SignVerdict.NONNEGATIVE, witness=None)
    assert not forged.recheck()


def test_recheck_catches_a_dropped_root():
    cert = certify_sign(RationalPolynomial((2, -8, 7)), 0, 1)
    forged = replace(cert, root_enclosures=cert.root_enclosures[:1])
    assert not forged.recheck()


def test_as_rational_refuses_floats():
    with pytest.raises(TypeError):
        as_rational(0.5)
    with pytest.raises(TypeError):
        as_rational(True)
    assert as_rational("3/4") == Fraction(3, 4)
    with pytest.raises(ValueError):
        as_rational("1/0")


def test_to_interval_contains_endpoints():
    x = to_interval(Fraction(1, 3), Fraction(1, 2))
    assert interval_contains(x, Fraction(1, 3))
    assert interval_contains(x, Fraction(1, 2))
    with pytest.raises(ValueError):
        to_interval(1, 0)


def test_directed_decimal_rounds_outward():
    third = mp.mpf(1) / 3
    assert directed_decimal(third, 5, upward=False) == "3.3333e-1"
    assert directed_decimal(third, 5, upward=True) == "3.3334e-1"
    assert directed_decimal(-third, 5, upward=False) == "-3.3334e-1"
    assert directed_decimal(mp.mpf(12), 3, upward=False) == "1.20e+1"
    assert directed_decimal(mp.mpf(0), 3, upward=True) == "0"


def test_interval_to_dict_is_outward():
    x = to_interval(Fraction(1, 3), Fraction(2, 3))
    data = interval_to_dict(x, digits=6)
    assert Fraction(data["lo"]) <= Fraction(1, 3)
    assert Fraction(data["hi"]) >= Fraction(2, 3)


def _random_polynomial(rng, max_degree=6):
    while True:
        p = RationalPolynomial(tuple(rng.randint(-10, 10) for _ in range(rng.randint(1, max_degree + 1))))
        if not p.is_zero:
            return p


def test_squares_are_certified_nonnegative():
    rng = random.Random(20240611)
    for _ in range(100):
        p = _random_polynomial(rng)
        cert = certify_sign(p * p, -2, 2)
        assert cert.verdict is SignVerdict.NONNEGATIVE, p
        assert cert.recheck()


def test_isolated_roots_match_grid_sign_changes():
    rng = random.Random(7)
    # sevenths are never grid points, and distinct ones are far apart
    candidates = [Fraction(k, 7) for k in range(-6, 7) if k]
    grid = [Fraction(j, 5000) - 1 for j in range(10**4 + 1)]
    for _ in range(4):
        roots = rng.sample(candidates, rng.randint(1, 4))
        multiplicity = {r: rng.choice([1, 2]) for r in roots}
        p = RationalPolynomial.constant(rng.choice([-3, 2]))
        for r in roots:
            p = p * (X - r) ** multiplicity[r]

        enclosures = isolate_roots(p, -1, 1)
        assert len(enclosures) == len(roots)
        odd = [e for e in enclosures if e.multiplicity % 2]
        assert len(odd) == sum(1 for r in roots if multiplicity[r] == 1)

        values = [p(x) for x in grid]
        changes = [(grid[i], grid[i + 1]) for i in range(len(grid) - 1) if values[i] * values[i + 1] < 0]
        assert len(changes) == len(odd)
        for lo, hi in changes:
            assert any(e.lower <= hi and lo <= e.upper for e in odd)


def test_definite_integral_is_additive():
    rng = random.Random(3)
    for _ in range(20):
        p = _random_polynomial(rng)
        a, b, c = sorted(Fraction(rng.randint(-50, 50), rng.randint(1, 9)) for _ in range(3))
        assert poly_integral_definite(p, a, b) + poly_integral_definite(p, b, c) == poly_integral_definite(p, a, c)
        assert poly_integral_definite(p, a, c) == -poly_integral_definite(p, c, a)


def test_derivative_undoes_antiderivative():
    rng = random.Random(11)
    for _ in range(20):
        p = _random_polynomial(rng)
        assert poly_derivative(p.antiderivative()) == p
        assert p.derivative().antiderivative() == p - p(0)
