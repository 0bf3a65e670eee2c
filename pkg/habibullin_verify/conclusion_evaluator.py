"""
Conclusion side: the integral of f against the formulation's weight over
[0, inf), compared with the pi-product bound.

The integral is split at the knot and at a truncation point T >= knot.
The finite pieces go through the adaptive quadrature engine; beyond T the
function is a pure power and the tail has a closed form in arctan and ln,
evaluated in interval arithmetic.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from mpmath import iv, mp

from .algebraic_constants import pi_enclosure
from .exact_core import (
    Interval,
    RationalLike,
    as_rational,
    interval_lower,
    interval_midpoint,
    interval_upper,
    interval_width,
    mp_from_rational,
    to_interval,
)
from .hypothesis_certifier import ConjectureParams, Formulation, check_role
from .quadrature_engine import (
    DEFAULT_MAX_EVALUATIONS,
    IntegrandDescriptor,
    Singularity,
    ToleranceNotMetError,
    integrate_adaptive,
    integrate_log_endpoint,
)
from .sharipov_family import FamilyFunction

logger = logging.getLogger(__name__)

VIOLATION_SAFETY_FACTOR = 10
DEFAULT_TRUNCATION = Fraction(10)
# the quadrature fallback for tails covers [T, 10^4 T] decade by decade
FALLBACK_DECADES = 4

REFERENCE_TAIL_SCALE = {Formulation.C1: Fraction(6), Formulation.C2: Fraction(6), Formulation.C3: Fraction(12)}


class UnsupportedTailError(ValueError):
    """No closed form (or no convergent remainder bound) for this tail"""


def tail_power(params: ConjectureParams) -> Fraction:
    """Power p of scale*t^p whose tail has a closed form: lambda, alpha or alpha - 1."""
    if params.formulation is Formulation.C3:
        return params.exponent - 1
    return params.exponent


def _rational_power(t: Fraction, exponent: Fraction) -> Interval:
    if exponent.denominator == 1:
        return to_interval(t ** int(exponent))
    return to_interval(t) ** to_interval(exponent)


# -- right-hand side -------------------------------------------------------------


def rhs_coefficient(params: ConjectureParams) -> Fraction:
    """The rational c with RHS = c*pi."""
    n, a = params.n, params.exponent
    product = Fraction(1)
    if params.formulation is Formulation.C1:
        for k in range(1, n):
            product *= 1 + a / (2 * k)
        return Fraction(n - 1) / (2 * a) * product
    for k in range(1, n):
        product *= 1 + a / k
    if params.formulation is Formulation.C2:
        return product / 2
    return a * product


@dataclass(frozen=True)
class RhsBound:
    params: ConjectureParams
    coefficient: Fraction
    closed_form: str
    enclosure: Interval


def rhs_bound(params: ConjectureParams, width: float = 1e-30) -> RhsBound:
    coefficient = rhs_coefficient(params)
    enclosure = to_interval(coefficient) * pi_enclosure().enclosure
    if interval_width(enclosure) > width:
        raise ToleranceNotMetError(
            f"RHS {coefficient}*pi encloses to width {mp.nstr(interval_width(enclosure), 5)}, not {width}",
            achieved=enclosure,
        )
    return RhsBound(params=params, coefficient=coefficient, closed_form=f"{coefficient}*pi", enclosure=enclosure)


# -- weights ---------------------------------------------------------------------


@dataclass(frozen=True)
class ConclusionWeight:
    """
    w(t) in the conclusion integral of f(t)*w(t) over [0, inf):

        C1: t^(2l-1) / (1 + t^(2l))^2
        C2: 1 / (t (1 + t^(2a)))
        C3: ln(1 + t^(-2a))
    """

    formulation: Formulation
    exponent: Fraction
    description: str

    @property
    def singularity(self) -> Singularity:
        return Singularity.LOG_AT_LEFT if self.formulation is Formulation.C3 else Singularity.NONE

    def _doubled(self):
        doubled = 2 * self.exponent
        return int(doubled) if doubled.denominator == 1 else mp_from_rational(doubled)

    def evaluate_mp(self, t):
        two_a = self._doubled()
        if self.formulation is Formulation.C1:
            return t ** (two_a - 1) / (1 + t**two_a) ** 2
        if self.formulation is Formulation.C2:
            return 1 / (t * (1 + t**two_a))
        if t >= 1:
            return mp.log1p(t ** (-two_a))
        # same value, without overflow of t^(-2a) near 0
        return -two_a * mp.log(t) + mp.log1p(t**two_a)


def conclusion_weight(params: ConjectureParams) -> ConclusionWeight:
    a = params.exponent
    descriptions = {
        Formulation.C1: f"t^{2 * a - 1}/(1+t^{2 * a})^2",
        Formulation.C2: f"1/(t*(1+t^{2 * a}))",
        Formulation.C3: f"ln(1+t^-{2 * a})",
    }
    return ConclusionWeight(params.formulation, a, descriptions[params.formulation])


def conclusion_integrand(f: FamilyFunction, params: ConjectureParams) -> IntegrandDescriptor:
    weight = conclusion_weight(params)
    evaluate = f.mp_evaluator()

    def integrand(t):
        return evaluate(t) * weight.evaluate_mp(t)

    return IntegrandDescriptor(integrand, weight.singularity, f"f(t)*{weight.description}")


# -- tails -----------------------------------------------------------------------


def tail_closed_form(
    params: ConjectureParams,
    T: RationalLike,
    scale: Optional[RationalLike] = None,
    power: Optional[RationalLike] = None,
) -> Interval:
    """
    Enclosure of the integral of scale*t^power*w(t) over [T, inf). With
    u = T^a (a = lambda or alpha):

        C1: scale/(2l) * (pi/2 - arctan u + u/(1+u^2))
        C2: scale/a * (pi/2 - arctan u)
        C3: scale/a * (pi - u ln(1 + u^-2) - 2 arctan u)
    """
    T = as_rational(T)
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    expected = tail_power(params)
    scale = REFERENCE_TAIL_SCALE[params.formulation] if scale is None else as_rational(scale)
    power = expected if power is None else as_rational(power)
    if power != expected:
        raise UnsupportedTailError(
            f"{params.formulation.value} tails have a closed form for t^{expected}, not t^{power}"
        )

    a = params.exponent
    u = _rational_power(T, a)
    pi = pi_enclosure().enclosure
    arctan_u = iv.atan2(u, 1)
    c = to_interval(scale)
    if params.formulation is Formulation.C1:
        return c / to_interval(2 * a) * (pi / 2 - arctan_u + u / (1 + u**2))
    if params.formulation is Formulation.C2:
        return c / to_interval(a) * (pi / 2 - arctan_u)
    return c / to_interval(a) * (pi - u * iv.log(1 + 1 / u**2) - 2 * arctan_u)


def remainder_bound(params: ConjectureParams, X: RationalLike, scale: RationalLike, power: RationalLike):
    """
    Upper bound for the integral of |scale|*t^power*w(t) over [X, inf),
    from w <= t^(-2l-1), t^(-2a-1) and t^(-2a) respectively.
    """
    X = as_rational(X)
    scale = as_rational(scale)
    power = as_rational(power)
    if X <= 0:
        raise ValueError(f"X must be positive, got {X}")
    a = params.exponent
    if params.formulation is Formulation.C3:
        decay = 2 * a - power - 1
    else:
        decay = 2 * a - power
    if decay <= 0:
        raise UnsupportedTailError(
            f"the {params.formulation.value} integral of t^{power} diverges at infinity"
        )
    bound = to_interval(abs(scale)) / to_interval(decay) / _rational_power(X, decay)
    return interval_upper(bound)


def remainder_enclosure(params: ConjectureParams, X: RationalLike, scale: RationalLike, power: RationalLike) -> Interval:
    """
    The integral over [X, inf) itself: between r*(1 - 2*X^(-2a)) and r for
    r = remainder_bound, since each weight is within that factor of its
    power-law majorant beyond X.
    """
    X = as_rational(X)
    scale = as_rational(scale)
    r = remainder_bound(params, X, scale, power)
    shrink = 1 - 2 / _rational_power(X, 2 * params.exponent)
    lower = max(mp.mpf(0), interval_lower(shrink) * r)
    if scale < 0:
        return iv.mpf([-r, -lower])
    return iv.mpf([lower, r])


@dataclass(frozen=True)
class TailEvaluation:
    enclosure: Interval
    method: str
    error_bound: object
    evaluations: int = 0
    converged: bool = True


def tail_by_quadrature(
    params: ConjectureParams,
    T: RationalLike,
    scale: RationalLike,
    power: RationalLike,
    tol: float = 1e-14,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> TailEvaluation:
    """The same tail by quadrature over [T, 10^4 T] plus ``remainder_enclosure`` beyond."""
    T, scale, power = as_rational(T), as_rational(scale), as_rational(power)
    remainder = remainder_enclosure(params, T * 10**FALLBACK_DECADES, scale, power)
    weight = conclusion_weight(params)
    c = mp_from_rational(scale)
    p = int(power) if power.denominator == 1 else mp_from_rational(power)
    descriptor = IntegrandDescriptor(lambda t: c * t**p * weight.evaluate_mp(t), label=f"{scale}*t^{power} tail")

    total = iv.mpf(0)
    evaluations = 0
    converged = True
    error = mp.mpf(0)
    for k in range(FALLBACK_DECADES):
        result = integrate_adaptive(
            descriptor, mp_from_rational(T * 10**k), mp_from_rational(T * 10 ** (k + 1)),
            tol / (2 * FALLBACK_DECADES), max_evaluations=max_evaluations,
        )
        total += result.enclosure()
        evaluations += result.evaluations
        converged = converged and result.converged
        error += result.error_bound
    logger.debug("Tail of %s beyond %s by quadrature, remainder bound %s", params.formulation.value, T, mp.nstr(interval_upper(remainder), 5))
    return TailEvaluation(
        total + remainder,
        "quadrature_with_remainder",
        error + interval_width(remainder),
        evaluations,
        converged,
    )


def _tail(f: FamilyFunction, params: ConjectureParams, T: Fraction, tol: float, max_evaluations: int) -> TailEvaluation:
    try:
        enclosure = tail_closed_form(params, T, f.scale, f.power)
        return TailEvaluation(enclosure, "closed_form", interval_width(enclosure))
    except UnsupportedTailError:
        return tail_by_quadrature(params, T, f.scale, f.power, tol, max_evaluations)


def tail_agreement(params: ConjectureParams, T: RationalLike, tol: float = 1e-14):
    """|closed form - quadrature| for the built-in scale; used to validate the closed forms."""
    closed = tail_closed_form(params, T)
    numeric = tail_by_quadrature(params, T, REFERENCE_TAIL_SCALE[params.formulation], tail_power(params), tol)
    return abs(interval_midpoint(closed) - interval_midpoint(numeric.enclosure)), numeric.error_bound


# -- left-hand side --------------------------------------------------------------


@dataclass(frozen=True)
class ErrorBudget:
    quadrature: object
    tail: object
    constants: object
    knot: object

    @property
    def total(self):
        return self.quadrature + self.tail + self.constants + self.knot

    def as_dict(self) -> Dict[str, str]:
        return {
            "quadrature": mp.nstr(self.quadrature, 6),
            "tail": mp.nstr(self.tail, 6),
            "constants": mp.nstr(self.constants, 6),
            "knot": mp.nstr(self.knot, 6),
            "total": mp.nstr(self.total, 6),
        }


@dataclass(frozen=True)
class PieceResult:
    label: str
    lower: object
    upper: object
    method: str
    enclosure: Interval
    error_bound: object
    evaluations: int
    converged: bool


@dataclass(frozen=True)
class ConclusionEvaluation:
    params: ConjectureParams
    epsilon: Fraction
    T: Fraction
    pieces: List[PieceResult]
    tail: TailEvaluation
    lhs: Interval
    budget: ErrorBudget

    @property
    def converged(self) -> bool:
        return self.tail.converged and all(p.converged for p in self.pieces)


def default_truncation(f: FamilyFunction) -> Fraction:
    """max(knot, 10), rounded up to an integer when the knot is beyond 10."""
    if f.knot.compare(DEFAULT_TRUNCATION) <= 0:
        return DEFAULT_TRUNCATION
    return Fraction(math.floor(f.knot.rational_enclosure[1]) + 1)


def _knot_rounding_term(f: FamilyFunction, params: ConjectureParams):
    # first-order effect of the knot being rounded to working precision
    w = f.theta_form()
    norm = sum((abs(c) for c in w.coefficients + w.derivative().coefficients), Fraction(0))
    knot = interval_upper(f.knot.interval())
    grow = max(mp.mpf(1), knot) ** mp_from_rational(f.power + 2 * params.exponent + 2)
    size = abs(f.scale) * (1 + abs(f.epsilon) * norm)
    return mp.mpf(2) ** (4 - mp.prec) * mp_from_rational(size) * grow


def evaluate_conclusion(
    f: FamilyFunction,
    params: ConjectureParams,
    tol: float = 1e-12,
    T: Optional[RationalLike] = None,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> ConclusionEvaluation:
    """The conclusion LHS with its full breakdown: pieces, tail and error budget."""
    check_role(f, params)
    T = default_truncation(f) if T is None else as_rational(T)
    if f.knot.compare(T) > 0:
        raise ValueError(f"truncation point {T} is below the knot {f.knot.label}")

    descriptor = conclusion_integrand(f, params)
    knot = f.knot.to_mp()
    breakpoints = [mp.mpf(0)]
    if knot > 0:
        breakpoints.append(knot)
    if mp_from_rational(T) > breakpoints[-1]:
        breakpoints.append(mp_from_rational(T))
    piece_tol = tol / 8

    pieces = []
    for lo, hi in zip(breakpoints, breakpoints[1:]):
        if lo == 0 and descriptor.singularity is Singularity.LOG_AT_LEFT:
            method = "log_endpoint"
            result = integrate_log_endpoint(descriptor, lo, hi, piece_tol, max_evaluations=max_evaluations)
        else:
            method = "adaptive"
            result = integrate_adaptive(descriptor, lo, hi, piece_tol, max_evaluations=max_evaluations)
        pieces.append(
            PieceResult(
                label=f"[{mp.nstr(lo, 10)}, {mp.nstr(hi, 10)}]",
                lower=lo,
                upper=hi,
                method=method,
                enclosure=result.enclosure(),
                error_bound=result.error_bound,
                evaluations=result.evaluations,
                converged=result.converged,
            )
        )

    tail = _tail(f, params, T, piece_tol, max_evaluations)
    knot_term = _knot_rounding_term(f, params)
    lhs = iv.mpf([-knot_term, knot_term])
    for piece in pieces:
        lhs += piece.enclosure
    lhs += tail.enclosure

    budget = ErrorBudget(
        quadrature=sum((p.error_bound for p in pieces), mp.mpf(0)),
        tail=tail.error_bound,
        constants=mp.mpf(0),
        knot=knot_term,
    )
    logger.debug(
        "Conclusion %s (eps=%s): lhs width %s over %d pieces, tail by %s",
        params.formulation.value, f.epsilon, mp.nstr(interval_width(lhs), 5), len(pieces), tail.method,
    )
    return ConclusionEvaluation(
        params=params,
        epsilon=f.epsilon,
        T=T,
        pieces=pieces,
        tail=tail,
        lhs=lhs,
        budget=budget,
    )


def conclusion_lhs(f: FamilyFunction, params: ConjectureParams, tol: float = 1e-12, T: Optional[RationalLike] = None) -> Interval:
    """Enclosure of the conclusion integral, of width <= tol."""
    evaluation = evaluate_conclusion(f, params, tol, T)
    width = interval_width(evaluation.lhs)
    if not evaluation.converged or width > tol:
        raise ToleranceNotMetError(
            f"conclusion LHS for {params.formulation.value}: width {mp.nstr(width, 5)} for tol {tol}"
            + ("" if evaluation.converged else " (quadrature stopped early)"),
            achieved=evaluation.lhs,
        )
    return evaluation.lhs


# -- verdict ---------------------------------------------------------------------


class ViolationVerdict(str, Enum):
    VIOLATED = "VIOLATED"
    SATISFIED = "SATISFIED"
    EQUALITY_WITHIN_TOL = "EQUALITY_WITHIN_TOL"
    INCONCLUSIVE = "INCONCLUSIVE"


@dataclass(frozen=True)
class ViolationReport:
    params: ConjectureParams
    epsilon: Fraction
    verdict: ViolationVerdict
    rhs: Interval
    rhs_closed_form: str
    lhs: Optional[Interval] = None
    margin: Optional[Interval] = None
    error_budget: Optional[ErrorBudget] = None
    T: Optional[Fraction] = None
    tail_method: Optional[str] = None
    note: Optional[str] = None


def _decide(margin: Interval, budget: ErrorBudget, tol: float):
    lower, upper = interval_lower(margin), interval_upper(margin)
    if lower > 0:
        if lower > VIOLATION_SAFETY_FACTOR * budget.total:
            return ViolationVerdict.VIOLATED, None
        return ViolationVerdict.INCONCLUSIVE, (
            f"margin lower bound {mp.nstr(lower, 5)} is positive but within "
            f"{VIOLATION_SAFETY_FACTOR}x the error budget {mp.nstr(budget.total, 5)}"
        )
    if upper < 0:
        return ViolationVerdict.SATISFIED, None
    if interval_width(margin) < tol:
        return ViolationVerdict.EQUALITY_WITHIN_TOL, None
    return ViolationVerdict.INCONCLUSIVE, "margin enclosure straddles 0 and is wider than the tolerance"


def violation_report(
    f: FamilyFunction,
    params: ConjectureParams,
    tol: float = 1e-12,
    T: Optional[RationalLike] = None,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> ViolationReport:
    """Compare the conclusion LHS with the pi-product bound, by enclosures only."""
    rhs = rhs_bound(params)
    try:
        evaluation = evaluate_conclusion(f, params, tol, T, max_evaluations)
    except (ToleranceNotMetError, UnsupportedTailError) as e:
        logger.warning("Conclusion %s inconclusive: %s", params.formulation.value, e)
        return ViolationReport(
            params=params,
            epsilon=f.epsilon,
            verdict=ViolationVerdict.INCONCLUSIVE,
            rhs=rhs.enclosure,
            rhs_closed_form=rhs.closed_form,
            note=str(e),
        )

    budget = ErrorBudget(
        quadrature=evaluation.budget.quadrature,
        tail=evaluation.budget.tail,
        constants=interval_width(rhs.enclosure),
        knot=evaluation.budget.knot,
    )
    margin = evaluation.lhs - rhs.enclosure
    if not evaluation.converged:
        verdict, note = ViolationVerdict.INCONCLUSIVE, "quadrature stopped before reaching the tolerance"
    else:
        verdict, note = _decide(margin, budget, tol)

    logger.info(
        "Conclusion %s (eps=%s): margin [%s, %s] -> %s",
        params.formulation.value, f.epsilon,
        mp.nstr(interval_lower(margin), 10), mp.nstr(interval_upper(margin), 10), verdict.value,
    )
    return ViolationReport(
        params=params,
        epsilon=f.epsilon,
        verdict=verdict,
        rhs=rhs.enclosure,
        rhs_closed_form=rhs.closed_form,
        lhs=evaluation.lhs,
        margin=margin,
        error_budget=budget,
        T=evaluation.T,
        tail_method=evaluation.tail.method,
        note=note,
    )


# -- epsilon law -----------------------------------------------------------------


@dataclass(frozen=True)
class LinearityReport:
    epsilons: List[Fraction]
    margins: Dict[str, Interval]
    deviations: Dict[str, object]
    max_deviation: object
    bound: object
    within_bounds: bool
    notes: List[str] = field(default_factory=list)


def epsilon_linearity_check(
    f: FamilyFunction,
    params: ConjectureParams,
    eps_list: Sequence[RationalLike],
    tol: float = 1e-12,
) -> LinearityReport:
    """
    The conclusion LHS is affine in eps and equals the RHS at eps = 0, so
    margin(eps)/eps should not depend on eps. Reports the largest relative
    deviation from margin(1) and the deviation the enclosures allow.
    """
    epsilons = [as_rational(e) for e in eps_list]
    if not epsilons:
        raise ValueError("eps_list is empty")
    if any(e <= 0 for e in epsilons):
        raise ValueError("epsilon values must be positive")

    margins: Dict[Fraction, Interval] = {}
    for eps in sorted(set(epsilons) | {Fraction(1)}):
        report = violation_report(f.with_epsilon(eps), params, tol)
        if report.margin is None:
            raise ToleranceNotMetError(f"no margin enclosure at eps = {eps}: {report.note}")
        margins[eps] = report.margin

    reference = interval_midpoint(margins[Fraction(1)])
    if reference == 0:
        raise ValueError("margin(1) is zero; relative deviation is undefined")
    reference_half_width = interval_width(margins[Fraction(1)]) / 2

    deviations = {}
    bound = mp.mpf(0)
    within = True
    for eps in epsilons:
        scaled = interval_midpoint(margins[eps]) / mp_from_rational(eps)
        deviation = abs(scaled - reference) / abs(reference)
        allowed = (interval_width(margins[eps]) / (2 * mp_from_rational(eps)) + reference_half_width) / abs(reference)
        deviations[str(eps)] = deviation
        bound = max(bound, allowed)
        within = within and deviation <= allowed
    max_deviation = max(deviations.values())
    logger.info("Epsilon law for %s: max relative deviation %s", params.formulation.value, mp.nstr(max_deviation, 5))
    return LinearityReport(
        epsilons=epsilons,
        margins={str(e): margins[e] for e in epsilons},
        deviations=deviations,
        max_deviation=max_deviation,
        bound=bound,
        within_bounds=within,
    )
