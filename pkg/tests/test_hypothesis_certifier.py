from dataclasses import replace
from fractions import Fraction

import pytest
from mpmath import iv, mp

from habibullin_verify.algebraic_constants import knot_x0
from habibullin_verify.exact_core import (
    RationalPolynomial,
    interval_contains,
    interval_lower,
    interval_midpoint,
    interval_width,
    mp_to_rational,
)
from habibullin_verify.hypothesis_certifier import (
    CertificateVerdict,
    ConjectureParams,
    Formulation,
    OriginValueError,
    certify_hypothesis,
    forced_origin_value,
    fubini_reduction,
    hypothesis_kernel,
    numeric_lhs,
    symbolic_margin,
    vanishing_moments,
)
from habibullin_verify.sharipov_family import (
    REFLECT,
    U_TAU,
    V_THETA,
    FamilyFunction,
    FamilyParams,
    Normalization,
    Role,
    RoleMismatchError,
    build_h,
    build_q,
    build_S,
)

X = RationalPolynomial.identity()


def test_kernels():
    c3 = hypothesis_kernel(ConjectureParams(Formulation.C3, 2, 2))
    assert c3.polynomial == X - 1
    assert c3.log_coefficient == -1
    assert c3.evaluate_mp(mp.mpf(1)) == 0

    c3_n1 = hypothesis_kernel(ConjectureParams(Formulation.C3, 1, 2))
    assert c3_n1.polynomial.is_zero and c3_n1.log_coefficient == -1

    c1 = hypothesis_kernel(ConjectureParams(Formulation.C1, 2, 4))
    assert c1.polynomial == X and c1.x_power == 0

    c2 = hypothesis_kernel(ConjectureParams(Formulation.C2, 3, 2))
    assert c2.polynomial == REFLECT**2 and c2.x_power == 1


def test_conjecture_params():
    with pytest.raises(ValueError):
        ConjectureParams(Formulation.C1, 1, 4)
    with pytest.raises(ValueError):
        ConjectureParams(Formulation.C2, 0, 2)
    with pytest.raises(ValueError):
        ConjectureParams(Formulation.C2, 2, 0)
    with pytest.raises(ValueError):
        Formulation.from_number(4)
    c1 = ConjectureParams(Formulation.C1, 2, 4)
    assert c1.translate(Formulation.C2) == ConjectureParams(Formulation.C2, 2, 2)
    assert c1.translate(Formulation.C3).translate(Formulation.C1) == c1
    assert ConjectureParams(Formulation.C3, 2, 2).hypothesis_power == 1
    assert c1.exponent_name == "lambda"


def test_vanishing_moments():
    assert vanishing_moments(U_TAU, [REFLECT, REFLECT**2]) == [0, 0]
    assert vanishing_moments(V_THETA, [X**5]) == [0]
    assert vanishing_moments(U_TAU, [RationalPolynomial.constant(1)]) == [Fraction(1, 15)]


def test_c2_margin_structure(h1, c2_params):
    margin = symbolic_margin(h1, c2_params)
    assert margin.baseline_exact
    assert margin.outer_is_zero
    assert margin.outer_A == 0 and margin.outer_B == 0
    # boundary root of the inner margin at s = 1
    assert margin.inner(1) == 0


def test_c1_margin_structure(S1, c1_params):
    margin = symbolic_margin(S1, c1_params)
    assert margin.baseline_exact
    assert margin.outer_is_zero


def test_baseline_lhs_is_exact():
    for builder, params, power in (
        (build_h, ConjectureParams(Formulation.C2, 2, 2), 2),
        (build_q, ConjectureParams(Formulation.C3, 2, 2), 1),
        (build_S, ConjectureParams(Formulation.C1, 2, 4), 4),
    ):
        margin = symbolic_margin(builder(FamilyParams(0)), params)
        assert margin.baseline_exact
        for t in (Fraction(1, 3), Fraction(1), Fraction(5, 2)):
            lhs = margin.lhs(t, 0)
            assert interval_contains(lhs, t**power)
            assert interval_width(lhs) < 1e-30


@pytest.mark.parametrize("eps", [Fraction(1, 4), Fraction(1, 2), Fraction(1)])
def test_h_certified(eps, c2_params):
    cert = certify_hypothesis(build_h(FamilyParams(eps)), c2_params)
    assert cert.verdict is CertificateVerdict.CERTIFIED
    assert cert.inner.is_nonnegative and cert.inner.recheck()
    assert cert.outer.zero_polynomial


@pytest.mark.parametrize("eps", [Fraction(1, 2), Fraction(1)])
def test_S_certified(eps, c1_params):
    cert = certify_hypothesis(build_S(FamilyParams(eps)), c1_params)
    assert cert.verdict is CertificateVerdict.CERTIFIED
    assert cert.inner.recheck()


def test_q_certified_through_the_reduction(q1, c3_params):
    cert = certify_hypothesis(q1, c3_params)
    assert cert.verdict is CertificateVerdict.CERTIFIED
    assert cert.margin.reduced_by_t


def test_zero_epsilon_is_certified_with_zero_margin(c2_params):
    cert = certify_hypothesis(build_h(FamilyParams(0)), c2_params)
    assert cert.verdict is CertificateVerdict.CERTIFIED
    assert cert.inner.zero_polynomial


def test_sign_flip_is_refuted_with_a_witness(c2_params):
    h = build_h(FamilyParams(-1, exploratory=True))
    cert = certify_hypothesis(h, c2_params)
    assert cert.verdict is CertificateVerdict.REFUTED
    assert cert.witness_t is not None and interval_lower(cert.witness_t) > 0
    assert "LHS(t) > RHS(t)" in cert.witness_note

    t = mp_to_rational(interval_midpoint(cert.witness_t))
    lhs = numeric_lhs(h, c2_params, t)
    assert interval_lower(lhs) > mp.mpf(t.numerator) ** 2 / mp.mpf(t.denominator) ** 2


def test_role_mismatch(q1, c2_params):
    with pytest.raises(RoleMismatchError):
        certify_hypothesis(q1, c2_params)


def test_inexact_baseline_is_not_applicable(c2_params):
    f = FamilyFunction(None, 5, 2, knot_x0(), U_TAU, Normalization.TAU, 1)
    cert = certify_hypothesis(f, c2_params)
    assert cert.verdict is CertificateVerdict.NOT_APPLICABLE
    assert "numeric_lhs" in cert.reason


def test_numeric_lhs_examples(h1, c2_params):
    assert interval_contains(numeric_lhs(h1, c2_params, 1), 1)
    assert interval_contains(numeric_lhs(build_h(FamilyParams(0)), c2_params, 1), 1)
    zero = numeric_lhs(h1, c2_params, 0)
    assert interval_midpoint(zero) == 0 and interval_width(zero) == 0


@pytest.mark.parametrize("t", [Fraction(1, 5), Fraction(1, 2), Fraction(4, 5), Fraction(3, 2), Fraction(7)])
def test_numeric_lhs_matches_symbolic(t, h1, c2_params):
    symbolic = symbolic_margin(h1, c2_params).lhs(t, 1)
    numeric = numeric_lhs(h1, c2_params, t)
    assert abs(interval_midpoint(symbolic) - interval_midpoint(numeric)) <= 1e-10


def test_reduction_cross_check(q1, h1, c2_params, c3_params):
    for k in range(1, 21):
        t = Fraction(k, 2)
        lhs3 = numeric_lhs(q1, c3_params, t)
        lhs2 = numeric_lhs(h1, c2_params, t)
        assert abs(mp.mpf(k) / 2 * interval_midpoint(lhs3) - interval_midpoint(lhs2)) <= 1e-10


def test_reduction_needs_h_of_zero_to_vanish(c3_params):
    constant = FamilyFunction(Role.H, 1, 0, knot_x0(), RationalPolynomial.zero(), Normalization.TAU, 1)
    with pytest.raises(OriginValueError):
        fubini_reduction(constant, c3_params)
    with pytest.raises(ValueError):
        fubini_reduction(build_h(FamilyParams(1)), ConjectureParams(Formulation.C2, 2, 2))


def test_certified_margins_on_a_fine_grid(h1, S1, c1_params, c2_params):
    grid = [Fraction(k, 10**4) for k in range(10**4 + 1)]
    for f, params in ((h1, c2_params), (S1, c1_params)):
        margin = symbolic_margin(f, params)
        inner = margin.inner.scale(f.epsilon)
        outer = margin.outer.scale(f.epsilon)
        assert all(inner(s) >= 0 for s in grid)
        assert all(outer(r) >= 0 for r in grid)


def test_origin_value_is_forced(h1, c2_params):
    report = forced_origin_value(h1, c2_params)
    assert report.divergent and report.forced_zero
    assert report.h_at_origin == 0
    assert all(growth > 0 for growth in report.increments)


AFFINE_TS = [Fraction(1, 10), Fraction(1, 2), Fraction(3, 4), Fraction(2), Fraction(10)]


@pytest.mark.parametrize("eps", [Fraction(1, 4), Fraction(1, 2), Fraction(1)])
@pytest.mark.parametrize("builder, params_name", [(build_h, "c2_params"), (build_q, "c3_params")])
def test_lhs_is_affine_in_epsilon(builder, params_name, eps, request):
    params = request.getfixturevalue(params_name)
    f = builder(FamilyParams(eps))
    margin = symbolic_margin(builder(FamilyParams(1)), params)
    power = int(params.hypothesis_power)
    for t in AFFINE_TS:
        expected = mp.mpf(t.numerator) ** power / mp.mpf(t.denominator) ** power - mp.mpf(eps.numerator) / eps.denominator * interval_midpoint(margin.evaluate(t))
        numeric = interval_midpoint(numeric_lhs(f, params, t))
        assert abs(numeric - expected) <= 1e-10 * max(1, abs(expected)), t


def test_c1_numeric_lhs_matches_symbolic_on_fifty_points(S1, c1_params):
    margin = symbolic_margin(S1, c1_params)
    for k in range(1, 51):
        t = Fraction(k, 10)
        symbolic = interval_midpoint(margin.lhs(t, 1))
        numeric = interval_midpoint(numeric_lhs(S1, c1_params, t))
        assert abs(symbolic - numeric) <= 1e-10 * max(1, symbolic), t


def test_reduction_cross_check_at_half_perturbation(c2_params, c3_params):
    q, h = build_q(FamilyParams(Fraction(1, 2))), build_h(FamilyParams(Fraction(1, 2)))
    for t in (Fraction(1, 3), Fraction(3, 4), Fraction(1), Fraction(5, 2), Fraction(6)):
        lhs3 = interval_midpoint(numeric_lhs(q, c3_params, t))
        lhs2 = interval_midpoint(numeric_lhs(h, c2_params, t))
        assert abs(mp.mpf(t.numerator) / t.denominator * lhs3 - lhs2) <= 1e-10


def test_outer_margin_is_affine_in_one_over_t(c2_params):
    # tau^2 has nonzero moments, so the margin beyond the knot does not vanish
    f = FamilyFunction(Role.H, 6, 2, knot_x0(), X * X, Normalization.TAU, 1)
    margin = symbolic_margin(f, c2_params)
    assert margin.baseline_exact
    assert margin.outer_A != 0 and margin.outer_B != 0

    r1, r2, r3 = Fraction(1, 2), Fraction(1, 3), Fraction(1, 5)
    B = (margin.outer(r2) - margin.outer(r1)) / (r1 - r2)
    A = margin.outer(r1) + B * r1
    assert (A, B) == (margin.outer_A, margin.outer_B)
    assert margin.outer(r3) - (A - B * r3) == 0

    # the same fit on M(t) itself, for three rational t beyond the knot
    ts = [Fraction(2), Fraction(3), Fraction(5)]
    m = [margin.evaluate(t) for t in ts]
    slope = (m[1] - m[0]) * 6
    intercept = m[0] + slope / 2
    residual = m[2] - (intercept - slope / iv.mpf(5))
    assert interval_contains(residual, 0)
    assert interval_width(residual) < mp.mpf(10) ** -25


def test_role_free_q_is_certified_for_conjecture_three(q1, c3_params):
    cert = certify_hypothesis(replace(q1, role=None), c3_params)
    assert cert.verdict is CertificateVerdict.CERTIFIED
    assert cert.margin.reduced_by_t
