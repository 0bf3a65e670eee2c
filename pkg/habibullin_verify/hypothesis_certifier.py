"""
Hypothesis side of the three conjecture formulations.

For a family function f = scale*x^p*(1 - eps*W(theta)) with an exact
baseline (the eps = 0 function satisfies the hypothesis with equality) the
left-hand side is

    LHS(t) = t^p - eps * M(t)

and the hypothesis holds iff eps*M(t) >= 0 for all t >= 0. M splits at the
knot into

    t <= knot:  M = scale * t^p * P(s),        s = t/knot in [0, 1]
    t >= knot:  M = scale * knot^p * Q(r),     r = knot/t in (0, 1]

with P, Q rational polynomials, so certification only ever needs exact sign
certificates on [0, 1].
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from math import comb
from typing import List, Optional, Sequence

from mpmath import iv, mp

from .exact_core import (
    Interval,
    RationalLike,
    RationalPolynomial,
    SignCertificate,
    as_rational,
    certify_sign,
    interval_width,
    to_interval,
)
from .quadrature_engine import (
    IntegrandDescriptor,
    Singularity,
    ToleranceNotMetError,
    integrate_adaptive,
    integrate_log_endpoint,
)
from .sharipov_family import FamilyFunction, Role, RoleMismatchError, knot_power_interval, integrate_q_to_h

logger = logging.getLogger(__name__)


class Formulation(str, Enum):
    C1 = "C1"
    C2 = "C2"
    C3 = "C3"

    @classmethod
    def from_number(cls, number) -> "Formulation":
        try:
            return cls(f"C{int(number)}")
        except ValueError:
            raise ValueError(f"Unknown conjecture {number!r}; expected 1, 2 or 3")


FORMULATION_ROLE = {Formulation.C1: Role.S, Formulation.C2: Role.H, Formulation.C3: Role.Q}


class OriginValueError(ValueError):
    """The Fubini reduction needs h(0) = 0"""


@dataclass(frozen=True)
class ConjectureParams:
    formulation: Formulation
    n: int = 2
    exponent: Fraction = Fraction(2)

    def __post_init__(self):
        object.__setattr__(self, "formulation", Formulation(self.formulation))
        object.__setattr__(self, "exponent", as_rational(self.exponent))
        if not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"n must be an integer >= 1, got {self.n!r}")
        if self.formulation is Formulation.C1 and self.n < 2:
            raise ValueError("Conjecture 1 requires n >= 2")
        if self.exponent <= 0:
            raise ValueError(f"exponent must be positive, got {self.exponent}")

    @property
    def hypothesis_power(self) -> Fraction:
        if self.formulation is Formulation.C3:
            return self.exponent - 1
        return self.exponent

    @property
    def exponent_name(self) -> str:
        return "lambda" if self.formulation is Formulation.C1 else "alpha"

    def translate(self, formulation) -> "ConjectureParams":
        """lambda for Conjecture 1 corresponds to alpha = lambda/2 for Conjectures 2 and 3."""
        formulation = Formulation(formulation)
        exponent = self.exponent
        if self.formulation is Formulation.C1 and formulation is not Formulation.C1:
            exponent = exponent / 2
        elif self.formulation is not Formulation.C1 and formulation is Formulation.C1:
            exponent = exponent * 2
        return ConjectureParams(formulation, self.n, exponent)


# -- kernels ---------------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisKernel:
    """
    k(x) = polynomial(x) * x^(-x_power) + log_coefficient * ln(x)
    """

    formulation: Formulation
    n: int
    polynomial: RationalPolynomial
    x_power: int = 0
    log_coefficient: Fraction = Fraction(0)
    description: str = ""

    @property
    def singularity(self) -> Singularity:
        return Singularity.LOG_AT_LEFT if self.log_coefficient else Singularity.NONE

    def evaluate_mp(self, x):
        value = self.polynomial.evaluate_mp(x)
        if self.x_power:
            value = value / x**self.x_power
        if self.log_coefficient:
            value += mp.mpf(self.log_coefficient.numerator) / self.log_coefficient.denominator * mp.log(x)
        return value


def hypothesis_kernel(params: ConjectureParams) -> HypothesisKernel:
    n = params.n
    if params.formulation is Formulation.C1:
        if n < 2:
            raise ValueError("Conjecture 1 requires n >= 2")
        poly = RationalPolynomial((1, 0, -1)) ** (n - 2) * RationalPolynomial.identity()
        return HypothesisKernel(Formulation.C1, n, poly, description=f"(1-x^2)^{n - 2}*x")
    if params.formulation is Formulation.C2:
        poly = RationalPolynomial((1, -1)) ** (n - 1)
        return HypothesisKernel(Formulation.C2, n, poly, x_power=1, description=f"(1-x)^{n - 1}/x")
    # integral of (1-y)^(n-1)/y over [x, 1], expanded termwise
    poly = RationalPolynomial.zero()
    for j in range(1, n):
        term = RationalPolynomial.constant(1) - RationalPolynomial.monomial(j)
        poly = poly + term.scale(Fraction(comb(n - 1, j) * (-1) ** j, j))
    return HypothesisKernel(
        Formulation.C3,
        n,
        poly,
        log_coefficient=Fraction(-1),
        description=f"integral_x^1 (1-y)^{n - 1}/y dy = -ln x + ({poly})",
    )


# -- symbolic margin -------------------------------------------------------------


@dataclass(frozen=True)
class HypothesisMargin:
    """
    M(t) with LHS(t) = t^power - eps*M(t). ``inner`` is P(s), ``outer`` is
    Q(r); for Conjecture 3 (``reduced_by_t``) M is the Conjecture 2 margin of
    the antiderivative divided by t.
    """

    params: ConjectureParams
    scale: Fraction
    power: int
    knot: object
    inner: RationalPolynomial
    outer: RationalPolynomial
    baseline_coefficient: Fraction
    baseline_exact: bool
    reduced_by_t: bool = False
    reason: Optional[str] = None

    @property
    def outer_A(self) -> Fraction:
        return self.outer.coefficient(0)

    @property
    def outer_B(self) -> Fraction:
        return -self.outer.coefficient(1)

    @property
    def outer_is_zero(self) -> bool:
        return self.outer.is_zero

    def _base_margin(self, t: Fraction) -> Interval:
        if t == 0:
            return to_interval(0)
        if self.knot.compare(t) >= 0:
            s = to_interval(t) / self.knot.interval()
            return to_interval(self.scale * t**self.power) * self.inner.evaluate_interval(s)
        r = self.knot.interval() / to_interval(t)
        return to_interval(self.scale) * knot_power_interval(self.knot, self.power) * self.outer.evaluate_interval(r)

    def evaluate(self, t: RationalLike) -> Interval:
        """Enclosure of M(t) for rational t >= 0."""
        t = as_rational(t)
        if t < 0:
            raise ValueError("t must be nonnegative")
        value = self._base_margin(t)
        if self.reduced_by_t:
            return value / to_interval(t) if t else to_interval(0)
        return value

    def lhs(self, t: RationalLike, epsilon: RationalLike) -> Interval:
        """Symbolic hypothesis LHS(t) = t^power - eps*M(t)."""
        t = as_rational(t)
        power = self.params.hypothesis_power
        if power.denominator == 1:
            rhs = to_interval(t ** int(power))
        else:
            rhs = to_interval(t) ** (iv.mpf(power.numerator) / power.denominator)
        return rhs - to_interval(as_rational(epsilon)) * self.evaluate(t)


def _margin_polynomials(kernel: HypothesisKernel, f: FamilyFunction):
    d = kernel.x_power
    p = f.power
    if p < d:
        raise ValueError(f"power {p} is too small for the kernel x^-{d}")
    g = kernel.polynomial.shift_up(p - d)
    w = f.theta_form()
    inner = RationalPolynomial(
        tuple(
            w.coefficient(i) * sum((gj / (i + j + 1) for j, gj in enumerate(g.coefficients)), Fraction(0))
            for i in range(len(w.coefficients))
        )
    )
    moments = [w.shift_up(j).integrate(0, 1) for j in range(len(g.coefficients))]
    outer = RationalPolynomial.zero()
    for j, gj in enumerate(g.coefficients):
        if gj and moments[j]:
            outer = outer + RationalPolynomial.monomial(j + 1 - p, gj * moments[j])
    return g, inner, outer


def check_role(f: FamilyFunction, params: ConjectureParams) -> None:
    expected = FORMULATION_ROLE[params.formulation]
    if f.role is not None and f.role is not expected:
        raise RoleMismatchError(
            f"Conjecture {params.formulation.value[1]} takes a role-{expected.value} function, got role {f.role.value}"
        )


def symbolic_margin(f: FamilyFunction, params: ConjectureParams) -> HypothesisMargin:
    check_role(f, params)
    if params.formulation is Formulation.C3:
        return fubini_reduction(integrate_q_to_h(f.with_role(Role.Q)), params)

    kernel = hypothesis_kernel(params)
    g, inner, outer = _margin_polynomials(kernel, f)
    baseline = f.scale * g.integrate(0, 1)
    exact = baseline == 1 and params.hypothesis_power == f.power and f.scale > 0
    reason = None
    if not exact:
        reason = (
            f"eps = 0 gives LHS = {baseline}*t^{f.power}, not t^{params.hypothesis_power}; "
            "only numeric_lhs applies"
        )
    logger.debug("Symbolic margin for %s: P = %s, Q = %s", params.formulation.value, inner, outer)
    return HypothesisMargin(
        params=params,
        scale=f.scale,
        power=f.power,
        knot=f.knot,
        inner=inner,
        outer=outer,
        baseline_coefficient=baseline,
        baseline_exact=exact,
        reason=reason,
    )


def fubini_reduction(h: FamilyFunction, params: ConjectureParams) -> HypothesisMargin:
    """
    Conjecture 3 margin of q = h' from the Conjecture 2 margin of h:
    exchanging the order of integration gives t*LHS3(t) = LHS2(t) when h(0) = 0.
    """
    if params.formulation is not Formulation.C3:
        raise ValueError("fubini_reduction applies to Conjecture 3 parameters")
    if h.power == 0 and h.scale * (1 - h.epsilon * h.theta_form()(0)) != 0:
        raise OriginValueError("h(0) != 0: the reduction t*LHS3 = LHS2 does not hold")
    base = symbolic_margin(h, params.translate(Formulation.C2))
    return HypothesisMargin(
        params=params,
        scale=base.scale,
        power=base.power,
        knot=base.knot,
        inner=base.inner,
        outer=base.outer,
        baseline_coefficient=base.baseline_coefficient,
        baseline_exact=base.baseline_exact,
        reduced_by_t=True,
        reason=base.reason,
    )


# -- certification ---------------------------------------------------------------


class CertificateVerdict(str, Enum):
    CERTIFIED = "CERTIFIED"
    REFUTED = "REFUTED"
    NOT_APPLICABLE = "NOT_APPLICABLE"


@dataclass(frozen=True)
class MarginCertificate:
    params: ConjectureParams
    verdict: CertificateVerdict
    epsilon: Fraction
    margin: Optional[HypothesisMargin] = None
    inner: Optional[SignCertificate] = None
    outer: Optional[SignCertificate] = None
    witness_t: Optional[Interval] = None
    witness_note: Optional[str] = None
    reason: Optional[str] = None

    @property
    def outer_A(self) -> Optional[Fraction]:
        return None if self.margin is None else self.margin.outer_A

    @property
    def outer_B(self) -> Optional[Fraction]:
        return None if self.margin is None else self.margin.outer_B


def _negative_point(poly: RationalPolynomial, cert: SignCertificate) -> Fraction:
    """A point in (0, 1] where poly < 0; the margin prefactors vanish at 0."""
    candidates = [x for x in cert.sample_points if x > 0 and poly(x) < 0]
    if candidates:
        return min(candidates, key=poly)
    k = 1
    while poly(Fraction(1, 2**k)) >= 0:
        k += 1
    return Fraction(1, 2**k)


def certify_hypothesis(f: FamilyFunction, params: ConjectureParams) -> MarginCertificate:
    margin = symbolic_margin(f, params)
    if not margin.baseline_exact:
        logger.info("Hypothesis for %s not certifiable: %s", params.formulation.value, margin.reason)
        return MarginCertificate(
            params=params,
            verdict=CertificateVerdict.NOT_APPLICABLE,
            epsilon=f.epsilon,
            margin=margin,
            reason=margin.reason,
        )

    inner = certify_sign(margin.inner.scale(f.epsilon), 0, 1)
    outer = certify_sign(margin.outer.scale(f.epsilon), 0, 1)
    if inner.is_nonnegative and outer.is_nonnegative:
        verdict = CertificateVerdict.CERTIFIED
        witness = None
        note = None
    else:
        verdict = CertificateVerdict.REFUTED
        knot = margin.knot
        if not inner.is_nonnegative:
            s = _negative_point(inner.polynomial, inner)
            witness = to_interval(s) * knot.interval()
            note = f"t = {s}*knot: eps*P(s) = {inner.polynomial(s)} < 0, so LHS(t) > RHS(t)"
        else:
            r = _negative_point(outer.polynomial, outer)
            witness = knot.interval() / to_interval(r)
            note = f"t = knot/{r}: eps*Q(r) = {outer.polynomial(r)} < 0, so LHS(t) > RHS(t)"

    logger.info("Hypothesis %s (n=%d, %s=%s, eps=%s): %s", params.formulation.value, params.n, params.exponent_name, params.exponent, f.epsilon, verdict.value)
    return MarginCertificate(
        params=params,
        verdict=verdict,
        epsilon=f.epsilon,
        margin=margin,
        inner=inner,
        outer=outer,
        witness_t=witness,
        witness_note=note,
    )


# -- numeric cross-checks --------------------------------------------------------


def numeric_lhs(f: FamilyFunction, params: ConjectureParams, t: RationalLike, tol: float = 1e-12) -> Interval:
    """Quadrature enclosure of the hypothesis integral at t, of width <= tol."""
    t = as_rational(t)
    if t < 0:
        raise ValueError("t must be nonnegative")
    if t == 0:
        if f.power == 0:
            raise ValueError("LHS(0) is not finite for a function with f(0) != 0")
        return to_interval(0)

    kernel = hypothesis_kernel(params)
    evaluate = f.mp_evaluator()
    t_mp = mp.mpf(t.numerator) / t.denominator

    def integrand(x):
        return kernel.evaluate_mp(x) * evaluate(t_mp * x)

    descriptor = IntegrandDescriptor(integrand, kernel.singularity, f"{params.formulation.value} hypothesis at t={t}")
    # the integrand has a kink where t*x crosses the knot
    kink = f.knot.to_mp() / t_mp
    pieces = [(0, kink), (kink, 1)] if kink < 1 else [(0, 1)]
    total = iv.mpf(0)
    for lo, hi in pieces:
        if lo == 0 and kernel.singularity is Singularity.LOG_AT_LEFT:
            result = integrate_log_endpoint(descriptor, lo, hi, tol / 4)
        else:
            result = integrate_adaptive(descriptor, lo, hi, tol / 4)
        total += result.enclosure()
    if interval_width(total) > tol:
        raise ToleranceNotMetError(
            f"hypothesis LHS at t={t}: width {mp.nstr(interval_width(total), 5)} > {tol}", achieved=total
        )
    return total


def vanishing_moments(p: RationalPolynomial, weights: Sequence[RationalPolynomial]) -> List[Fraction]:
    """Exact integrals over [0, 1] of w*p for each weight w."""
    return [(w * p).integrate(0, 1) for w in weights]


@dataclass(frozen=True)
class OriginReport:
    """Growth of the Conjecture 2 kernel integral over [delta, 1] as delta -> 0."""

    deltas: List[str]
    integrals: List[Interval]
    increments: List[object]
    divergent: bool
    h_at_origin: Fraction
    forced_zero: bool = field(default=True)


def forced_origin_value(h: FamilyFunction, params: ConjectureParams, decades: Sequence[int] = (2, 4, 8, 16)) -> OriginReport:
    """
    If h(0) = C != 0 the hypothesis integral contains C times the integral
    of (1-x)^(n-1)/x over [0, 1], which diverges; so C must be 0. The
    divergence is exhibited by quadrature over [10^-k, 1], taken in
    u = -ln x so that the 1/x blow-up becomes a smooth integrand.
    """
    kernel = hypothesis_kernel(params.translate(Formulation.C2))

    def in_log_variable(u):
        x = mp.exp(-u)
        return kernel.evaluate_mp(x) * x

    descriptor = IntegrandDescriptor(in_log_variable, label="C2 kernel in u = -ln x")
    integrals = []
    for k in decades:
        integrals.append(integrate_adaptive(descriptor, 0, k * mp.log(10), 1e-10).enclosure())
    increments = []
    divergent = True
    for (k0, i0), (k1, i1) in zip(zip(decades, integrals), zip(decades[1:], integrals[1:])):
        growth = mp.mpf(i1.a) - mp.mpf(i0.b)
        increments.append(growth)
        # each step adds about (k1 - k0)*ln 10
        if growth < (k1 - k0) * mp.log(10) / 2:
            divergent = False
    h0 = h.scale * (1 - h.epsilon * h.theta_form()(0)) if h.power == 0 else Fraction(0)
    logger.info("Kernel integral over [delta, 1] grows by %s per step: divergent=%s", [mp.nstr(g, 6) for g in increments], divergent)
    return OriginReport(
        deltas=[f"1e-{k}" for k in decades],
        integrals=integrals,
        increments=increments,
        divergent=divergent,
        h_at_origin=h0,
        forced_zero=divergent,
    )
