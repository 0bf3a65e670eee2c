"""
The Sharipov functions q, h, S as exact piecewise objects.

Each function has the shape

    scale * x**power * (1 - epsilon * W(coordinate))   on [0, knot)
    scale * x**power                                    on [knot, inf)

where W is a rational polynomial in a normalized coordinate, either
tau = (knot - x) / knot or theta = x / knot. Keeping W in the normalized
coordinate keeps every coefficient rational; the irrational knot only ever
appears as a positive factor.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from fractions import Fraction
from typing import Dict, List, Optional, Sequence

from mpmath import iv, mp

from .algebraic_constants import AlgebraicConstant, exact_power, knot_x0, knot_x1, make_constant, nth_root
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
from .quadrature_engine import ToleranceNotMetError

logger = logging.getLogger(__name__)

ONE = RationalPolynomial.constant(1)
REFLECT = RationalPolynomial((1, -1))  # 1 - z

# perturbation of q in tau: (21 tau^3 - 34 tau^2 + 16 tau - 2) tau
R_TAU = RationalPolynomial((0, -2, 16, -34, 21))
# perturbation of h in tau: (7 tau^2 - 8 tau + 2) tau^2
U_TAU = RationalPolynomial((0, 0, 2, -8, 7))
# perturbation of S in theta: (7 theta^2 - 3)(theta^2 - 1)^3 / 3
V_THETA = RationalPolynomial((1, 0, Fraction(-16, 3), 0, 10, 0, -8, 0, Fraction(7, 3)))


class Role(str, Enum):
    Q = "Q"
    H = "H"
    S = "S"


class Normalization(str, Enum):
    TAU = "TAU"
    THETA = "THETA"


class RoleMismatchError(ValueError):
    pass


class NonConformantParameterError(ValueError):
    pass


class TailMismatchError(ValueError):
    """The transformed function is not a pure power beyond the knot"""


@dataclass(frozen=True)
class FamilyParams:
    epsilon: Fraction
    exploratory: bool = False

    def __post_init__(self):
        object.__setattr__(self, "epsilon", as_rational(self.epsilon))
        if not self.exploratory and not (0 <= self.epsilon <= 1):
            raise NonConformantParameterError(
                f"epsilon = {self.epsilon} is outside (0, 1]; enable exploratory mode to use it"
            )

    @property
    def conformant(self) -> bool:
        return 0 < self.epsilon <= 1


def rational_knot(value: RationalLike) -> AlgebraicConstant:
    value = as_rational(value)
    return make_constant(RationalPolynomial((-value, 1)), (value - 1, value + 1), str(value))


def knot_power_interval(knot: AlgebraicConstant, power: int) -> Interval:
    if power == 0:
        return iv.mpf(1)
    value = exact_power(knot, power)
    if isinstance(value, Fraction):
        return to_interval(value)
    return value.interval()


@dataclass(frozen=True)
class FamilyFunction:
    role: Optional[Role]
    scale: Fraction
    power: int
    knot: AlgebraicConstant
    perturbation: RationalPolynomial
    normalization: Normalization
    epsilon: Fraction

    def __post_init__(self):
        object.__setattr__(self, "scale", as_rational(self.scale))
        object.__setattr__(self, "epsilon", as_rational(self.epsilon))
        object.__setattr__(self, "normalization", Normalization(self.normalization))
        if self.role is not None:
            object.__setattr__(self, "role", Role(self.role))
        if self.power < 0:
            raise ValueError("power must be a nonnegative integer")

    @property
    def continuous(self) -> bool:
        """Exact check that the perturbation vanishes at the knot."""
        at_knot = 0 if self.normalization is Normalization.TAU else 1
        return self.perturbation(at_knot) == 0

    def theta_form(self) -> RationalPolynomial:
        if self.normalization is Normalization.THETA:
            return self.perturbation
        return self.perturbation.compose(REFLECT)

    def with_epsilon(self, epsilon: RationalLike) -> "FamilyFunction":
        return replace(self, epsilon=as_rational(epsilon))

    def with_role(self, role: Role) -> "FamilyFunction":
        """Attach a role to a role-free definition; an existing role is kept."""
        return self if self.role is not None else replace(self, role=Role(role))

    def coordinate_mp(self, x, knot=None):
        knot = self.knot.to_mp() if knot is None else knot
        if self.normalization is Normalization.TAU:
            return (knot - x) / knot
        return x / knot

    def mp_evaluator(self):
        """Plain callable x -> f(x) at the working mp precision, for quadrature."""
        knot = self.knot.to_mp()
        scale = mp.mpf(self.scale.numerator) / self.scale.denominator
        eps = mp.mpf(self.epsilon.numerator) / self.epsilon.denominator
        power = self.power
        perturbation = self.perturbation
        tau = self.normalization is Normalization.TAU

        def evaluate(x):
            base = scale * x**power
            if x >= knot:
                return base
            coord = (knot - x) / knot if tau else x / knot
            return base * (1 - eps * perturbation.evaluate_mp(coord))

        return evaluate

    def __str__(self) -> str:
        coord = "tau" if self.normalization is Normalization.TAU else "theta"
        return (
            f"{self.role.value if self.role else 'f'}(x) = {self.scale}*x^{self.power}"
            f"*(1 - {self.epsilon}*W({coord})) below {self.knot.label}, W = {self.perturbation}"
        )


def _from_theta(theta_poly: RationalPolynomial, normalization: Normalization) -> RationalPolynomial:
    if normalization is Normalization.THETA:
        return theta_poly
    return theta_poly.compose(REFLECT)


def _require_role(f: FamilyFunction, role: Role, operation: str) -> None:
    if f.role is not role:
        raise RoleMismatchError(f"{operation} expects a role-{role.value} function, got {f.role}")


# -- constructors ----------------------------------------------------------------


def build_q(params: FamilyParams) -> FamilyFunction:
    return FamilyFunction(Role.Q, Fraction(12), 1, knot_x0(), R_TAU, Normalization.TAU, params.epsilon)


def build_h(params: FamilyParams) -> FamilyFunction:
    return FamilyFunction(Role.H, Fraction(6), 2, knot_x0(), U_TAU, Normalization.TAU, params.epsilon)


def build_S(params: FamilyParams) -> FamilyFunction:
    return FamilyFunction(Role.S, Fraction(6), 4, knot_x1(), V_THETA, Normalization.THETA, params.epsilon)


BUILDERS = {Role.Q: build_q, Role.H: build_h, Role.S: build_S}


# -- transformation chain --------------------------------------------------------


def monotone_factor(f: FamilyFunction) -> RationalPolynomial:
    """D(theta) with f'(x) = scale*power*x^(power-1)*(1 - eps*D(theta)) below the knot."""
    w = f.theta_form()
    return w + w.derivative().shift_up(1).scale(Fraction(1, f.power))


def differentiate_h(h: FamilyFunction) -> FamilyFunction:
    _require_role(h, Role.H, "differentiate_h")
    if h.power < 1:
        raise ValueError("Cannot differentiate a function of power 0 into the family shape")
    return FamilyFunction(
        Role.Q,
        h.scale * h.power,
        h.power - 1,
        h.knot,
        _from_theta(monotone_factor(h), h.normalization),
        h.normalization,
        h.epsilon,
    )


def integrate_q_to_h(q: FamilyFunction) -> FamilyFunction:
    """h(x) = integral of q over [0, x]; the constant of integration is 0 since h(0) = 0."""
    _require_role(q, Role.Q, "integrate_q_to_h")
    p = q.power
    primitive = q.theta_form().shift_up(p).antiderivative()
    if primitive(1) != 0:
        raise TailMismatchError(
            f"integral of theta^{p}*W over [0, 1] is {primitive(1)}, not 0: the antiderivative "
            "is not a pure power beyond the knot"
        )
    w_new = primitive.shift_down(p + 1).scale(p + 1)
    return FamilyFunction(
        Role.H,
        q.scale / (p + 1),
        p + 1,
        q.knot,
        _from_theta(w_new, q.normalization),
        q.normalization,
        q.epsilon,
    )


def lift_h_to_S(h: FamilyFunction) -> FamilyFunction:
    """S(x) = integral over [0, x] of 4*h(t^2)/t; the knot maps to its square root."""
    _require_role(h, Role.H, "lift_h_to_S")
    p = h.power
    if p < 1:
        raise ValueError("lift_h_to_S needs power >= 1")
    squared = h.theta_form().compose(RationalPolynomial.monomial(2))
    primitive = squared.shift_up(2 * p - 1).antiderivative()
    if primitive(1) != 0:
        raise TailMismatchError(
            f"integral of theta^{2 * p - 1}*W(theta^2) over [0, 1] is {primitive(1)}, not 0"
        )
    knot = nth_root(h.knot, 2)
    if isinstance(knot, Fraction):
        knot = rational_knot(knot)
    return FamilyFunction(
        Role.S,
        2 * h.scale / p,
        2 * p,
        knot,
        primitive.shift_down(2 * p).scale(2 * p),
        Normalization.THETA,
        h.epsilon,
    )


# -- evaluation ------------------------------------------------------------------


def _check_width(value: Interval, width: float) -> Interval:
    if interval_width(value) > width:
        raise ToleranceNotMetError(
            f"value enclosure width {mp.nstr(interval_width(value), 5)} exceeds requested {width}",
            achieved=value,
        )
    return value


def eval_function(f: FamilyFunction, x: RationalLike, width: float = 1e-17) -> Interval:
    """Enclosure of f(x) for rational x >= 0; the branch is chosen exactly."""
    x = as_rational(x)
    if x < 0:
        raise ValueError(f"x = {x} is negative")
    if f.knot.compare(x) <= 0:
        return _check_width(to_interval(f.scale * x**f.power), width)
    xi = to_interval(x)
    knot = f.knot.interval()
    coord = (knot - xi) / knot if f.normalization is Normalization.TAU else xi / knot
    base = to_interval(f.scale * x**f.power)
    value = base * (1 - to_interval(f.epsilon) * f.perturbation.evaluate_interval(coord))
    return _check_width(value, width)


def eval_at_knot_multiple(f: FamilyFunction, c: RationalLike, width: float = 1e-17) -> Interval:
    """Enclosure of f(c * knot); the normalized coordinate is then rational."""
    c = as_rational(c)
    if c < 0:
        raise ValueError(f"c = {c} is negative")
    exact_factor = f.scale * c**f.power
    if c < 1:
        coord = 1 - c if f.normalization is Normalization.TAU else c
        exact_factor *= 1 - f.epsilon * f.perturbation(coord)
    value = to_interval(exact_factor) * knot_power_interval(f.knot, f.power)
    return _check_width(value, width)


# -- admissibility ---------------------------------------------------------------


@dataclass(frozen=True)
class ShapeReport:
    """
    Structural preconditions of a conjecture. A check set to None was not
    required for this role.
    """

    role: Optional[Role]
    continuous: bool
    nonnegative: Optional[bool] = None
    nondecreasing: Optional[bool] = None
    log_convex: Optional[bool] = None
    log_convex_method: Optional[str] = None
    certificates: Dict[str, SignCertificate] = field(default_factory=dict)
    failures: List[str] = field(default_factory=list)
    non_conformant: bool = False

    @property
    def passed(self) -> bool:
        checks = [self.continuous, self.nonnegative, self.nondecreasing, self.log_convex]
        return all(c is not False for c in checks)


# used when the caller does not pass the checks of a conjecture
REQUIRED_CHECKS = {
    Role.Q: ("nonnegative",),
    Role.H: ("nonnegative", "nondecreasing"),
    Role.S: ("nonnegative", "nondecreasing", "log_convex"),
    None: ("nonnegative",),
}
KNOWN_CHECKS = {"continuous", "nonnegative", "nondecreasing", "log_convex"}


def _coordinate_to_x(f: FamilyFunction, coord: Fraction, theta: bool = False) -> str:
    """Describe the point x of a witness coordinate as a multiple of the knot."""
    if theta or f.normalization is Normalization.THETA:
        return f"x = {coord}*{f.knot.label}"
    return f"x = {1 - coord}*{f.knot.label}"


def _certify_factor(factor: RationalPolynomial, epsilon: Fraction) -> SignCertificate:
    return certify_sign(ONE - factor.scale(epsilon), 0, 1)


def _check_nonnegative(f: FamilyFunction, certificates: dict, failures: list) -> bool:
    cert = _certify_factor(f.perturbation, f.epsilon)
    certificates["nonnegative"] = cert
    ok = cert.is_nonnegative and f.scale >= 0
    if f.scale < 0:
        failures.append(f"negative scale {f.scale}")
    elif not cert.is_nonnegative:
        failures.append(
            f"f < 0 near {_coordinate_to_x(f, cert.witness)} "
            f"(1 - eps*W = {cert.polynomial(cert.witness)} there)"
        )
    return ok


def _check_nondecreasing(f: FamilyFunction, certificates: dict, failures: list) -> bool:
    if f.power == 0:
        factor = f.theta_form().derivative().scale(-f.epsilon)
        cert = certify_sign(factor, 0, 1)
    else:
        cert = _certify_factor(monotone_factor(f), f.epsilon)
    certificates["nondecreasing"] = cert
    ok = cert.is_nonnegative and f.scale * max(f.power, 1) >= 0
    if not ok:
        where = _coordinate_to_x(f, cert.witness, theta=True) if cert.witness is not None else "the tail"
        failures.append(f"f' < 0 near {where}")
    return ok


def _sigma_midpoint_convex(f: FamilyFunction, samples: int = 400) -> bool:
    """Sampled midpoint convexity of sigma(y) = f(exp(y)) around the knot."""
    evaluate = f.mp_evaluator()
    centre = mp.log(f.knot.to_mp())
    lo, hi = centre - 6, centre + 3
    step = (hi - lo) / samples
    values = [evaluate(mp.exp(lo + i * step)) for i in range(samples + 1)]
    slack = mp.mpf(10) ** (-(mp.dps - 10)) * max(abs(v) for v in values)
    return all(values[i - 1] + values[i + 1] - 2 * values[i] >= -slack for i in range(1, samples))


def _check_log_convex(f: FamilyFunction, certificates: dict, failures: list) -> bool:
    # sigma(y) = f(e^y) is convex iff x f'(x) is nondecreasing; below the knot
    # (x f')' = scale*p^2*x^(p-1)*(1 - eps*(D + theta*D'/p)) and at the knot
    # x f' jumps by scale*p*knot^p*eps*D(1)
    if f.power == 0:
        failures.append("log-convexity check needs power >= 1")
        return False
    d = monotone_factor(f)
    second = d + d.derivative().shift_up(1).scale(Fraction(1, f.power))
    cert = _certify_factor(second, f.epsilon)
    certificates["log_convex"] = cert
    jump_ok = f.epsilon * d(1) >= 0
    sampled = _sigma_midpoint_convex(f)
    ok = cert.is_nonnegative and jump_ok and f.scale >= 0 and sampled
    if not cert.is_nonnegative:
        failures.append(f"x*f'(x) decreases near {_coordinate_to_x(f, cert.witness, theta=True)}")
    if not jump_ok:
        failures.append("x*f'(x) jumps down at the knot")
    if not sampled:
        failures.append("sampled midpoint convexity of f(exp(y)) fails")
    return ok


def check_shape(
    f: FamilyFunction,
    params: Optional[FamilyParams] = None,
    checks: Optional[Sequence[str]] = None,
) -> ShapeReport:
    """
    Run the shape checks a conjecture requires. ``checks`` names them (the
    registry entry of the conjecture); without it they follow the role of f.
    Continuity is always checked.
    """
    certificates: Dict[str, SignCertificate] = {}
    failures: List[str] = []
    continuous = f.continuous
    if not continuous:
        failures.append("perturbation does not vanish at the knot")

    if checks is None:
        required = REQUIRED_CHECKS[f.role]
    else:
        unknown = set(checks) - KNOWN_CHECKS
        if unknown:
            raise ValueError(f"Unknown shape checks: {sorted(unknown)}")
        required = tuple(checks)
    results = {}
    if "nonnegative" in required:
        results["nonnegative"] = _check_nonnegative(f, certificates, failures)
    if "nondecreasing" in required:
        results["nondecreasing"] = _check_nondecreasing(f, certificates, failures)
    if "log_convex" in required:
        results["log_convex"] = _check_log_convex(f, certificates, failures)
        results["log_convex_method"] = (
            "x*f'(x) nondecreasing by exact certificate, plus sampled midpoint convexity of f(exp(y))"
        )

    non_conformant = not (0 < f.epsilon <= 1) if params is None else not params.conformant
    report = ShapeReport(
        role=f.role,
        continuous=continuous,
        certificates=certificates,
        failures=failures,
        non_conformant=non_conformant,
        **results,
    )
    logger.info(
        "Shape of %s (eps=%s): %s", f.role.value if f.role else "f", f.epsilon, "pass" if report.passed else "; ".join(failures)
    )
    return report


# -- definition files ------------------------------------------------------------


def family_definition(f: FamilyFunction) -> dict:
    data = {
        "scale": str(f.scale),
        "power": f.power,
        "knot": f.knot.to_definition(),
        "normalization": f.normalization.value,
        "perturbation": f.perturbation.to_strings(),
        "epsilon": str(f.epsilon),
    }
    if f.role is not None:
        data["role"] = f.role.value
    return data


def parse_family_definition(data: dict) -> FamilyFunction:
    try:
        power = data["power"]
        if not isinstance(power, int) or isinstance(power, bool):
            raise ValueError(f"power must be an integer, got {power!r}")
        return FamilyFunction(
            role=Role(data["role"]) if data.get("role") else None,
            scale=as_rational(str(data["scale"])),
            power=power,
            knot=AlgebraicConstant.from_definition(data["knot"]),
            perturbation=RationalPolynomial.from_strings(data["perturbation"]),
            normalization=Normalization(data["normalization"]),
            epsilon=as_rational(str(data["epsilon"])),
        )
    except KeyError as e:
        raise ValueError(f"Function definition is missing field {e}")


def load_family_definition(path: str) -> FamilyFunction:
    try:
        with open(path, "r") as f:
            data = json.load(f)
    except FileNotFoundError:
        raise FileNotFoundError(f"{path} not found")
    except json.JSONDecodeError as e:
        raise ValueError(f"Invalid JSON in {path}: {e}")
    return parse_family_definition(data)
