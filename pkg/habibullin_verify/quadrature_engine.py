"""
Adaptive Gauss-Kronrod (7/15) quadrature with a conservative error bound.

The reported bound is SAFETY_FACTOR times the summed |K15 - G7| panel
differences plus a rounding term. It is an estimate, not a proof, which is
why ``validate_error_model`` runs the engine against integrals with known
closed forms.
"""

from __future__ import annotations

import heapq
import logging
import threading
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Callable, Dict, List, Tuple, Union

from mpmath import iv, mp

from .exact_core import Interval, RationalPolynomial

logger = logging.getLogger(__name__)

SAFETY_FACTOR = 10
DEFAULT_MAX_DEPTH = 60
DEFAULT_MAX_EVALUATIONS = 200_000


class ToleranceNotMetError(ValueError):
    """A requested tolerance could not be reached; ``achieved`` holds what was."""

    def __init__(self, message: str, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class Singularity(str, Enum):
    NONE = "none"
    LOG_AT_LEFT = "log_at_left"


@dataclass(frozen=True)
class IntegrandDescriptor:
    """A deterministic, side-effect free point evaluator, finite on the open interval."""

    func: Callable
    singularity: Singularity = Singularity.NONE
    label: str = ""

    def __call__(self, x):
        return self.func(x)


@dataclass(frozen=True)
class QuadratureResult:
    value: object
    error_bound: object
    evaluations: int
    max_depth_hit: bool = False
    budget_exhausted: bool = False
    panels: int = 1

    @property
    def converged(self) -> bool:
        return not (self.max_depth_hit or self.budget_exhausted)

    def enclosure(self) -> Interval:
        return iv.mpf(self.value) + iv.mpf([-self.error_bound, self.error_bound])


# -- Gauss-Kronrod nodes and weights ---------------------------------------------

_rule_lock = threading.Lock()
_rule_cache: Dict[int, Tuple[list, list, list]] = {}


def _legendre(n: int) -> RationalPolynomial:
    previous, current = RationalPolynomial.constant(1), RationalPolynomial.identity()
    if n == 0:
        return previous
    for k in range(1, n):
        following = (current.shift_up(1).scale(2 * k + 1) - previous.scale(k)).scale(Fraction(1, k + 1))
        previous, current = current, following
    return current


def _moment(m: int) -> Fraction:
    """Integral of x**m over [-1, 1]."""
    return Fraction(0) if m % 2 else Fraction(2, m + 1)


def _solve_exact(matrix: List[List[Fraction]], rhs: List[Fraction]) -> List[Fraction]:
    n = len(rhs)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = next(r for r in range(col, n) if a[r][col] != 0)
        a[col], a[pivot] = a[pivot], a[col]
        for r in range(n):
            if r != col and a[r][col] != 0:
                factor = a[r][col] / a[col][col]
                a[r] = [x - factor * y for x, y in zip(a[r], a[col])]
    return [a[i][n] / a[i][i] for i in range(n)]


def _stieltjes_polynomial() -> RationalPolynomial:
    """Monic even E8 orthogonal to x^k * P7 for k < 8 on [-1, 1]."""
    p7 = _legendre(7)

    def inner(m: int) -> Fraction:
        # integral of x^m * P7
        return sum((c * _moment(m + j) for j, c in enumerate(p7.coefficients)), Fraction(0))

    odd_k = (1, 3, 5, 7)
    matrix = [[inner(2 * j + k) for j in range(4)] for k in odd_k]
    rhs = [-inner(8 + k) for k in odd_k]
    low = _solve_exact(matrix, rhs)
    coefficients = [Fraction(0)] * 9
    for j, c in enumerate(low):
        coefficients[2 * j] = c
    coefficients[8] = Fraction(1)
    return RationalPolynomial(tuple(coefficients))


def _symmetric_roots(even_poly: RationalPolynomial) -> list:
    """Roots of an even polynomial via its polynomial in y = x^2."""
    in_y = RationalPolynomial(even_poly.coefficients[::2])
    coeffs = [mp.mpf(c.numerator) / c.denominator for c in reversed(in_y.coefficients)]
    roots = []
    for y in mp.polyroots(coeffs, maxsteps=200, extraprec=2 * mp.prec):
        r = mp.sqrt(mp.re(y))
        roots.extend([-r, r])
    return roots


def gauss_kronrod_rule() -> Tuple[list, list, list]:
    """(nodes, kronrod_weights, gauss_weights) on [-1, 1]; gauss weights are 0 off the Gauss nodes."""
    prec = mp.prec
    with _rule_lock:
        cached = _rule_cache.get(prec)
    if cached is not None:
        return cached

    p7 = _legendre(7)
    dp7 = p7.derivative()
    tagged = sorted(
        [(x, True) for x in [mp.mpf(0)] + _symmetric_roots(p7.shift_down(1))]
        + [(x, False) for x in _symmetric_roots(_stieltjes_polynomial())],
        key=lambda item: item[0],
    )
    nodes = [x for x, _ in tagged]

    # exactness on P_0..P_14; the Legendre basis keeps the system well conditioned
    basis = [_legendre(k) for k in range(15)]
    system = mp.matrix([[p.evaluate_mp(x) for x in nodes] for p in basis])
    rhs = mp.matrix([2] + [0] * 14)
    kronrod = list(mp.lu_solve(system, rhs))

    gauss = [2 / ((1 - x**2) * dp7.evaluate_mp(x) ** 2) if is_gauss else mp.mpf(0) for x, is_gauss in tagged]
    rule = (nodes, kronrod, gauss)
    with _rule_lock:
        _rule_cache[prec] = rule
    logger.debug("Computed Gauss-Kronrod 7/15 rule at %d bits", prec)
    return rule


# -- adaptive driver -------------------------------------------------------------


def _to_mp(x):
    if isinstance(x, Fraction):
        return mp.mpf(x.numerator) / x.denominator
    if isinstance(x, Interval):
        return mp.mpf(x.mid)
    return mp.mpf(x)


def _apply_rule(f: Callable, a, b):
    nodes, kronrod, gauss = gauss_kronrod_rule()
    centre = (a + b) / 2
    half = (b - a) / 2
    k_sum = g_sum = abs_sum = mp.mpf(0)
    for x, wk, wg in zip(nodes, kronrod, gauss):
        fx = f(centre + half * x)
        k_sum += wk * fx
        g_sum += wg * fx
        abs_sum += abs(wk * fx)
    return half * k_sum, abs(half * (k_sum - g_sum)), abs(half) * abs_sum


def integrate_adaptive(
    f: Union[IntegrandDescriptor, Callable],
    a,
    b,
    tol: float = 1e-12,
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> QuadratureResult:
    """
    Integrate f over [a, b], always splitting the panel with the largest
    difference estimate first (ties broken by creation order). The final sum
    runs over panels in left-to-right order, so results are reproducible
    bit for bit.
    """
    a, b = _to_mp(a), _to_mp(b)
    if not a < b:
        raise ValueError(f"integrate_adaptive needs a < b, got [{a}, {b}]")
    tol = mp.mpf(tol)
    # relative accuracy of the computed nodes and weights, with headroom
    rounding = mp.mpf(10) ** (5 - mp.dps)

    value, err, magnitude = _apply_rule(f, a, b)
    evaluations = 15
    seq = 0
    heap = [(-err, seq, a, b, 0, value, err, magnitude)]
    finished = []
    total_err = err
    max_depth_hit = False
    budget_exhausted = False

    while heap and SAFETY_FACTOR * total_err > tol:
        if evaluations + 30 > max_evaluations:
            budget_exhausted = True
            break
        _, _, lo, hi, depth, val, e, mag = heapq.heappop(heap)
        if depth >= max_depth:
            max_depth_hit = True
            finished.append((lo, hi, val, e, mag))
            continue
        mid = (lo + hi) / 2
        total_err -= e
        for sub_lo, sub_hi in ((lo, mid), (mid, hi)):
            sub_val, sub_err, sub_mag = _apply_rule(f, sub_lo, sub_hi)
            evaluations += 15
            seq += 1
            total_err += sub_err
            heapq.heappush(heap, (-sub_err, seq, sub_lo, sub_hi, depth + 1, sub_val, sub_err, sub_mag))

    panels = finished + [(p[2], p[3], p[5], p[6], p[7]) for p in heap]
    panels.sort(key=lambda p: p[0])
    value = mp.mpf(0)
    err_sum = mp.mpf(0)
    mag_sum = mp.mpf(0)
    for _, _, val, e, mag in panels:
        value += val
        err_sum += e
        mag_sum += mag
    error_bound = SAFETY_FACTOR * err_sum + rounding * mag_sum

    if max_depth_hit or budget_exhausted:
        logger.warning(
            "Quadrature on [%s, %s] stopped early (%s); achieved bound %s for tol %s",
            mp.nstr(a, 8), mp.nstr(b, 8),
            "max depth" if max_depth_hit else "evaluation budget",
            mp.nstr(error_bound, 5), mp.nstr(tol, 5),
        )
    logger.debug("Quadrature on [%s, %s]: %d panels, %d evaluations", mp.nstr(a, 8), mp.nstr(b, 8), len(panels), evaluations)
    return QuadratureResult(
        value=value,
        error_bound=error_bound,
        evaluations=evaluations,
        max_depth_hit=max_depth_hit,
        budget_exhausted=budget_exhausted,
        panels=len(panels),
    )


def integrate_log_endpoint(
    f: Union[IntegrandDescriptor, Callable],
    a,
    b,
    tol: float = 1e-12,
    max_depth: int = DEFAULT_MAX_DEPTH,
    max_evaluations: int = DEFAULT_MAX_EVALUATIONS,
) -> QuadratureResult:
    """
    Integrate f with an integrable logarithmic singularity at the left end,
    through x = a + (b - a) v^4, whose Jacobian 4 (b - a) v^3 flattens it.
    """
    a, b = _to_mp(a), _to_mp(b)
    width = b - a

    def substituted(v):
        return f(a + width * v**4) * 4 * width * v**3

    return integrate_adaptive(substituted, 0, 1, tol, max_depth, max_evaluations)


def integrate(descriptor: IntegrandDescriptor, a, b, tol: float = 1e-12, **kwargs) -> QuadratureResult:
    if descriptor.singularity is Singularity.LOG_AT_LEFT:
        return integrate_log_endpoint(descriptor, a, b, tol, **kwargs)
    return integrate_adaptive(descriptor, a, b, tol, **kwargs)


# -- validation suite ------------------------------------------------------------


@dataclass(frozen=True)
class ValidationCase:
    name: str
    value: object
    truth: object
    error: object
    error_bound: object

    @property
    def passed(self) -> bool:
        return self.error <= self.error_bound


@dataclass
class ValidationReport:
    cases: List[ValidationCase] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return bool(self.cases) and all(c.passed for c in self.cases)

    @property
    def failures(self) -> List[str]:
        return [c.name for c in self.cases if not c.passed]


def _validation_suite():
    t_end = mp.mpf(10)
    cases = [
        ("x on [0,1]", lambda x: x, 0, 1, mp.mpf(1) / 2, Singularity.NONE),
        ("3x^2-2x+1 on [-1,2]", lambda x: 3 * x**2 - 2 * x + 1, -1, 2, mp.mpf(9), Singularity.NONE),
        ("x^10 on [0,1]", lambda x: x**10, 0, 1, mp.mpf(1) / 11, Singularity.NONE),
        ("exp(x) on [0,1]", mp.exp, 0, 1, mp.e - 1, Singularity.NONE),
        ("6t/(1+t^4) on [0,1]", lambda t: 6 * t / (1 + t**4), 0, 1, 3 * mp.pi / 4, Singularity.NONE),
        (
            "6t/(1+t^4) on [1,10]",
            lambda t: 6 * t / (1 + t**4),
            1, t_end,
            3 * (mp.atan(t_end**2) - mp.pi / 4),
            Singularity.NONE,
        ),
        (
            "6t^11/(1+t^8)^2 on [1,10]",
            lambda t: 6 * t**11 / (1 + t**8) ** 2,
            1, t_end,
            mp.mpf(3) / 4 * (mp.atan(t_end**4) - t_end**4 / (1 + t_end**8) - mp.pi / 4 + mp.mpf(1) / 2),
            Singularity.NONE,
        ),
        (
            "12t*ln(1+t^-4) on [1,10]",
            lambda t: 12 * t * mp.log(1 + t ** (-4)),
            1, t_end,
            6 * (t_end**2 * mp.log(1 + t_end ** (-4)) + 2 * mp.atan(t_end**2))
            - 6 * (mp.log(2) + mp.pi / 2),
            Singularity.NONE,
        ),
        ("x*(x-1-ln x) on [0,1]", lambda x: x * (x - 1 - mp.log(x)), 0, 1, mp.mpf(1) / 12, Singularity.LOG_AT_LEFT),
    ]
    for n in range(7):
        cases.append(
            (
                f"x^{n}*ln x on [0,1]",
                (lambda n: lambda x: x**n * mp.log(x))(n),
                0, 1,
                -mp.mpf(1) / (n + 1) ** 2,
                Singularity.LOG_AT_LEFT,
            )
        )
    return cases


def validate_error_model(tol: float = 1e-15) -> ValidationReport:
    """Check |value - truth| <= error_bound on integrals with known closed forms."""
    report = ValidationReport()
    for name, func, a, b, truth, singularity in _validation_suite():
        result = integrate(IntegrandDescriptor(func, singularity, name), a, b, tol)
        error = abs(result.value - truth)
        report.cases.append(ValidationCase(name, result.value, truth, error, result.error_bound))
        if error > result.error_bound:
            logger.warning("Error model violated on %s: error %s > bound %s", name, mp.nstr(error, 5), mp.nstr(result.error_bound, 5))
    logger.info("Error model validation: %d/%d cases within bounds", sum(c.passed for c in report.cases), len(report.cases))
    return report
