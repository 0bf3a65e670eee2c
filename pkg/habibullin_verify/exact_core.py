"""
Exact substrate for every certificate in the package.

Rationals are ``fractions.Fraction`` (always in lowest terms, exact);
polynomials are dense coefficient tuples over Q; intervals are mpmath
``iv`` intervals, whose arithmetic is outward rounded.

Root isolation uses Sturm sequences of the square-free part with exact
rational bisection; multiplicities come from Yun's square-free
decomposition.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from math import gcd, lcm
from typing import List, Optional, Sequence, Tuple, Union

from mpmath import iv, mp

logger = logging.getLogger(__name__)

Rational = Fraction
Interval = type(iv.mpf(0))
RationalLike = Union[Fraction, int, str]


class ZeroPolynomialError(ValueError):
    """The zero polynomial has no isolated roots (every point is a root)"""


def as_rational(value) -> Fraction:
    """Coerce ints, Fractions and 'p/q' strings; floats are refused."""
    if isinstance(value, bool):
        raise TypeError("Booleans are not rationals")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as e:
            raise ValueError(f"Invalid rational '{value}': {e}")
    if isinstance(value, float):
        raise TypeError(
            f"Float {value!r} given where an exact rational is required; pass it as a 'p/q' string"
        )
    raise TypeError(f"Cannot interpret {value!r} as a rational")


def rational_to_str(value: Fraction) -> str:
    return str(as_rational(value))


def to_interval(lower: RationalLike, upper: Optional[RationalLike] = None) -> Interval:
    """Outward-rounded interval [lower, upper] with rational endpoints."""
    lower = as_rational(lower)
    upper = lower if upper is None else as_rational(upper)
    if upper < lower:
        raise ValueError(f"Interval endpoints out of order: {lower} > {upper}")
    lo = iv.mpf(lower.numerator) / lower.denominator
    hi = iv.mpf(upper.numerator) / upper.denominator
    return iv.mpf([lo.a, hi.b])


def mp_interval(lower, upper) -> Interval:
    return iv.mpf([lower, upper])


def mp_from_rational(value: RationalLike):
    value = as_rational(value)
    return mp.mpf(value.numerator) / value.denominator


def interval_lower(x: Interval):
    return mp.mpf(x.a)


def interval_upper(x: Interval):
    return mp.mpf(x.b)


def interval_width(x: Interval):
    return interval_upper(x) - interval_lower(x)


def interval_midpoint(x: Interval):
    return mp.mpf(x.mid)


def interval_contains(x: Interval, value) -> bool:
    if isinstance(value, Interval):
        return interval_lower(x) <= interval_lower(value) and interval_upper(value) <= interval_upper(x)
    if isinstance(value, (Fraction, int)):
        value = to_interval(value)
        return interval_lower(x) <= interval_lower(value) and interval_upper(value) <= interval_upper(x)
    value = mp.mpf(value)
    return interval_lower(x) <= value <= interval_upper(x)


def mp_to_rational(x) -> Fraction:
    """The exact binary value of an mpf."""
    man, exp = mp.mpf(x).man_exp
    if exp >= 0:
        return Fraction(man * 2**exp)
    return Fraction(man, 2**-exp)


def directed_decimal(x, digits: int, upward: bool) -> str:
    """x as a decimal string of `digits` significant digits, rounded down or up."""
    value = mp_to_rational(x)
    if value == 0:
        return "0"
    exponent = len(str(abs(value.numerator))) - len(str(value.denominator))
    if abs(value) < Fraction(10) ** exponent:
        exponent -= 1
    shift = digits - 1 - exponent
    scaled = value * Fraction(10) ** shift
    n = -((-scaled.numerator) // scaled.denominator) if upward else scaled.numerator // scaled.denominator
    sign = "-" if n < 0 else ""
    text = str(abs(n))
    return f"{sign}{text[0]}.{text[1:] or '0'}e{len(text) - 1 - shift:+d}"


def interval_to_dict(x: Interval, digits: Optional[int] = None) -> dict:
    """Outward-rounded decimal endpoints and the width."""
    digits = digits or mp.dps
    return {
        "lo": directed_decimal(interval_lower(x), digits, upward=False),
        "hi": directed_decimal(interval_upper(x), digits, upward=True),
        "width": mp.nstr(interval_width(x), 6),
    }


@lru_cache(maxsize=1024)
def _mp_coefficients(coefficients: Tuple[Fraction, ...], prec: int):
    return tuple(mp.mpf(c.numerator) / c.denominator for c in coefficients)


@lru_cache(maxsize=1024)
def _iv_coefficients(coefficients: Tuple[Fraction, ...], prec: int):
    return tuple(to_interval(c) for c in coefficients)


@dataclass(frozen=True)
class RationalPolynomial:
    """
    Dense univariate polynomial over Q; ``coefficients[k]`` multiplies x**k.

    The tuple is canonical: trailing zeros are stripped, so the zero
    polynomial is the empty tuple and has degree -1.
    """

    coefficients: Tuple[Fraction, ...] = ()

    def __post_init__(self):
        coeffs = [as_rational(c) for c in self.coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs))

    # -- constructors -------------------------------------------------------

    @classmethod
    def zero(cls) -> "RationalPolynomial":
        return cls(())

    @classmethod
    def constant(cls, value: RationalLike) -> "RationalPolynomial":
        return cls((value,))

    @classmethod
    def monomial(cls, power: int, coefficient: RationalLike = 1) -> "RationalPolynomial":
        if power < 0:
            raise ValueError("Monomial power must be nonnegative")
        return cls((0,) * power + (coefficient,))

    @classmethod
    def identity(cls) -> "RationalPolynomial":
        return cls((0, 1))

    @classmethod
    def from_strings(cls, values: Sequence[str]) -> "RationalPolynomial":
        return cls(tuple(as_rational(v) for v in values))

    def to_strings(self) -> List[str]:
        return [rational_to_str(c) for c in self.coefficients]

    # -- basic properties ---------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1

    @property
    def is_zero(self) -> bool:
        return not self.coefficients

    @property
    def leading_coefficient(self) -> Fraction:
        return self.coefficients[-1] if self.coefficients else Fraction(0)

    def coefficient(self, k: int) -> Fraction:
        return self.coefficients[k] if 0 <= k < len(self.coefficients) else Fraction(0)

    def __str__(self) -> str:
        if self.is_zero:
            return "0"
        terms = []
        for k in range(self.degree, -1, -1):
            c = self.coefficients[k]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if k == 0:
                body = str(mag)
            else:
                var = "x" if k == 1 else f"x^{k}"
                body = var if mag == 1 else f"{mag}*{var}"
            terms.append((sign, body))
        first_sign, first_body = terms[0]
        text = ("-" if first_sign == "-" else "") + first_body
        for sign, body in terms[1:]:
            text += f" {sign} {body}"
        return text

    # -- arithmetic ---------------------------------------------------------

    @staticmethod
    def _coerce(other) -> "RationalPolynomial":
        if isinstance(other, RationalPolynomial):
            return other
        return RationalPolynomial.constant(as_rational(other))

    def __add__(self, other) -> "RationalPolynomial":
        other = self._coerce(other)
        size = max(len(self.coefficients), len(other.coefficients))
        return RationalPolynomial(
            tuple(self.coefficient(k) + other.coefficient(k) for k in range(size))
        )

    __radd__ = __add__

    def __neg__(self) -> "RationalPolynomial":
        return RationalPolynomial(tuple(-c for c in self.coefficients))

    def __sub__(self, other) -> "RationalPolynomial":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "RationalPolynomial":
        return self._coerce(other) - self

    def __mul__(self, other) -> "RationalPolynomial":
        if not isinstance(other, RationalPolynomial):
            return self.scale(other)
        if self.is_zero or other.is_zero:
            return RationalPolynomial.zero()
        product = [Fraction(0)] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            if a == 0:
                continue
            for j, b in enumerate(other.coefficients):
                product[i + j] += a * b
        return RationalPolynomial(tuple(product))

    def __rmul__(self, other) -> "RationalPolynomial":
        return self.scale(other)

    def __pow__(self, exponent: int) -> "RationalPolynomial":
        if exponent < 0:
            raise ValueError("Negative powers are not polynomials")
        result = RationalPolynomial.constant(1)
        for _ in range(exponent):
            result = result * self
        return result

    def scale(self, factor: RationalLike) -> "RationalPolynomial":
        factor = as_rational(factor)
        return RationalPolynomial(tuple(c * factor for c in self.coefficients))

    def shift_up(self, k: int) -> "RationalPolynomial":
        """Multiply by x**k."""
        if self.is_zero:
            return self
        return RationalPolynomial((Fraction(0),) * k + self.coefficients)

    def shift_down(self, k: int) -> "RationalPolynomial":
        """Exact division by x**k."""
        if any(c != 0 for c in self.coefficients[:k]):
            raise ValueError(f"{self} is not divisible by x^{k}")
        return RationalPolynomial(self.coefficients[k:])

    # -- evaluation ---------------------------------------------------------

    def __call__(self, x: RationalLike) -> Fraction:
        x = as_rational(x)
        result = Fraction(0)
        for c in reversed(self.coefficients):
            result = result * x + c
        return result

    def evaluate_mp(self, x):
        result = mp.mpf(0)
        for c in reversed(_mp_coefficients(self.coefficients, mp.prec)):
            result = result * x + c
        return result

    def evaluate_interval(self, x: Interval) -> Interval:
        result = iv.mpf(0)
        for c in reversed(_iv_coefficients(self.coefficients, iv.prec)):
            result = result * x + c
        return result

    # -- calculus -----------------------------------------------------------

    def derivative(self) -> "RationalPolynomial":
        return RationalPolynomial(
            tuple(k * c for k, c in enumerate(self.coefficients) if k > 0)
        )

    def antiderivative(self) -> "RationalPolynomial":
        """Antiderivative vanishing at 0."""
        return RationalPolynomial(
            (Fraction(0),) + tuple(c / (k + 1) for k, c in enumerate(self.coefficients))
        )

    def integrate(self, a: RationalLike, b: RationalLike) -> Fraction:
        primitive = self.antiderivative()
        return primitive(b) - primitive(a)

    # -- composition --------------------------------------------------------

    def compose(self, inner: "RationalPolynomial") -> "RationalPolynomial":
        """self(inner(x)) by Horner's scheme."""
        result = RationalPolynomial.zero()
        for c in reversed(self.coefficients):
            result = result * inner + c
        return result

    def compose_affine(self, inner: "RationalPolynomial") -> "RationalPolynomial":
        if inner.degree > 1:
            raise ValueError(f"compose_affine needs an inner polynomial of degree <= 1, got {inner}")
        return self.compose(inner)

    # -- Euclidean structure ------------------------------------------------

    def divmod(self, divisor: "RationalPolynomial") -> Tuple["RationalPolynomial", "RationalPolynomial"]:
        if divisor.is_zero:
            raise ZeroDivisionError("Polynomial division by zero")
        if self.degree < divisor.degree:
            return RationalPolynomial.zero(), self
        remainder = list(self.coefficients)
        dd = divisor.degree
        lead = divisor.leading_coefficient
        quotient = [Fraction(0)] * (self.degree - dd + 1)
        for k in range(self.degree - dd, -1, -1):
            coef = remainder[k + dd] / lead
            quotient[k] = coef
            if coef:
                for j, dc in enumerate(divisor.coefficients):
                    remainder[k + j] -= coef * dc
        return RationalPolynomial(tuple(quotient)), RationalPolynomial(tuple(remainder[:dd]))

    def exact_div(self, divisor: "RationalPolynomial") -> "RationalPolynomial":
        quotient, remainder = self.divmod(divisor)
        if not remainder.is_zero:
            raise ValueError(f"{divisor} does not divide {self}")
        return quotient

    def monic(self) -> "RationalPolynomial":
        if self.is_zero:
            return self
        return self.scale(1 / self.leading_coefficient)

    def primitive(self) -> "RationalPolynomial":
        """Integer coefficients, content 1, positive leading coefficient."""
        if self.is_zero:
            return self
        denominators = lcm(*(c.denominator for c in self.coefficients))
        integers = [int(c * denominators) for c in self.coefficients]
        content = gcd(*integers)
        if integers[-1] < 0:
            content = -content
        return RationalPolynomial(tuple(Fraction(v, content) for v in integers))

    def gcd(self, other: "RationalPolynomial") -> "RationalPolynomial":
        a, b = self, other
        while not b.is_zero:
            _, r = a.divmod(b)
            a, b = b, r
        return a.monic()

    def square_free_part(self) -> "RationalPolynomial":
        if self.degree < 1:
            return self.monic()
        return self.monic().exact_div(self.gcd(self.derivative()))

    def square_free_decomposition(self) -> List[Tuple["RationalPolynomial", int]]:
        """Yun's algorithm: monic, pairwise coprime factors with their multiplicities."""
        if self.degree < 1:
            return []
        f = self.monic()
        df = f.derivative()
        a = f.gcd(df)
        b = f.exact_div(a)
        c = df.exact_div(a)
        d = c - b.derivative()
        factors = []
        multiplicity = 1
        while b.degree > 0:
            a = b.gcd(d)
            b = b.exact_div(a)
            c = d.exact_div(a)
            d = c - b.derivative()
            if a.degree > 0:
                factors.append((a, multiplicity))
            multiplicity += 1
        return factors

    def sturm_sequence(self) -> List["RationalPolynomial"]:
        sequence = [self, self.derivative()]
        while not sequence[-1].is_zero:
            _, remainder = sequence[-2].divmod(sequence[-1])
            if remainder.is_zero:
                break
            sequence.append(-remainder)
        return [p for p in sequence if not p.is_zero]


# -- named operations -----------------------------------------------------------


class PolyOperation(str, Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    SCALE = "scale"
    COMPOSE_AFFINE = "compose_affine"


def poly_arith(a: RationalPolynomial, b: RationalPolynomial, kind: Union[PolyOperation, str]) -> RationalPolynomial:
    kind = PolyOperation(kind)
    if kind is PolyOperation.ADD:
        return a + b
    if kind is PolyOperation.SUB:
        return a - b
    if kind is PolyOperation.MUL:
        return a * b
    if kind is PolyOperation.SCALE:
        if b.degree > 0:
            raise ValueError("scale expects a constant polynomial as second operand")
        return a.scale(b.coefficient(0))
    return a.compose_affine(b)


def poly_derivative(p: RationalPolynomial) -> RationalPolynomial:
    return p.derivative()


def poly_integral_definite(p: RationalPolynomial, a: RationalLike, b: RationalLike) -> Fraction:
    return p.integrate(a, b)


# -- root isolation ------------------------------------------------------------


@dataclass(frozen=True)
class RootEnclosure:
    lower: Fraction
    upper: Fraction
    multiplicity: int

    @property
    def exact(self) -> bool:
        return self.lower == self.upper

    @property
    def width(self) -> Fraction:
        return self.upper - self.lower

    @property
    def interval(self) -> Interval:
        return to_interval(self.lower, self.upper)

    def contains(self, x: RationalLike) -> bool:
        x = as_rational(x)
        return self.lower <= x <= self.upper


class _SturmCounter:
    """Distinct-root counting for a square-free polynomial."""

    def __init__(self, squarefree: RationalPolynomial):
        self.poly = squarefree
        self.chain = squarefree.sturm_sequence()

    def variations(self, x: Fraction) -> int:
        signs = []
        for p in self.chain:
            value = p(x)
            if value:
                signs.append(value > 0)
        return sum(1 for u, v in zip(signs, signs[1:]) if u != v)

    def count_open(self, lo: Fraction, hi: Fraction) -> int:
        # A root at x gives V(x) = V(x+) = V(x-) - 1
        return self.variations(lo) - self.variations(hi) - (1 if self.poly(hi) == 0 else 0)

    def bisect(self, lo: Fraction, hi: Fraction) -> Tuple[Fraction, Fraction]:
        """One halving step of an open interval holding exactly one root."""
        mid = (lo + hi) / 2
        if self.poly(mid) == 0:
            return mid, mid
        if self.count_open(lo, mid) == 1:
            return lo, mid
        return mid, hi

    def tighten(self, lo: Fraction, hi: Fraction, width: Optional[Fraction] = None) -> Tuple[Fraction, Fraction]:
        while lo != hi and (
            self.poly(lo) == 0 or self.poly(hi) == 0 or (width is not None and hi - lo > width)
        ):
            lo, hi = self.bisect(lo, hi)
        return lo, hi


def _isolate_squarefree(counter: _SturmCounter, a: Fraction, b: Fraction) -> List[Tuple[Fraction, Fraction]]:
    p = counter.poly
    found = []
    if p(a) == 0:
        found.append((a, a))
    if p(b) == 0:
        found.append((b, b))
    pending = [(a, b)]
    while pending:
        lo, hi = pending.pop()
        count = counter.count_open(lo, hi)
        if count == 0:
            continue
        if count == 1:
            found.append(counter.tighten(lo, hi))
            continue
        mid = (lo + hi) / 2
        if p(mid) == 0:
            found.append((mid, mid))
        pending.append((lo, mid))
        pending.append((mid, hi))
    return sorted(found)


def _separate(counter: _SturmCounter, enclosures: List[Tuple[Fraction, Fraction]]) -> List[Tuple[Fraction, Fraction]]:
    """Halve neighbours until no two closed enclosures touch."""
    enclosures = list(enclosures)
    i = 0
    while i < len(enclosures) - 1:
        (lo1, hi1), (lo2, hi2) = enclosures[i], enclosures[i + 1]
        if hi1 < lo2:
            i += 1
            continue
        if lo1 != hi1:
            enclosures[i] = counter.tighten(*counter.bisect(lo1, hi1))
        if lo2 != hi2:
            enclosures[i + 1] = counter.tighten(*counter.bisect(lo2, hi2))
    return enclosures


def isolate_roots(
    p: RationalPolynomial,
    a: RationalLike,
    b: RationalLike,
    width: Optional[RationalLike] = None,
) -> List[RootEnclosure]:
    """
    Disjoint enclosures of the distinct real roots of p in [a, b], with
    multiplicities. Enclosures are exact points or closed intervals whose
    endpoints are not roots; ``width`` refines them further.
    """
    a, b = as_rational(a), as_rational(b)
    if not a < b:
        raise ValueError(f"Empty domain [{a}, {b}]")
    if p.is_zero:
        raise ZeroPolynomialError("Cannot isolate roots of the zero polynomial: every point is a root")
    if p.degree == 0:
        return []

    factors = p.square_free_decomposition()
    counter = _SturmCounter(p.square_free_part())
    raw = _isolate_squarefree(counter, a, b)
    if width is not None:
        width = as_rational(width)
        raw = [counter.tighten(lo, hi, width) for lo, hi in raw]
    raw = _separate(counter, raw)

    factor_counters = [(_SturmCounter(f), m) for f, m in factors]
    enclosures = []
    for lo, hi in raw:
        multiplicity = 0
        for factor_counter, m in factor_counters:
            if lo == hi:
                if factor_counter.poly(lo) == 0:
                    multiplicity = m
                    break
            elif factor_counter.count_open(lo, hi) > 0:
                multiplicity = m
                break
        enclosures.append(RootEnclosure(lo, hi, multiplicity))
    logger.debug("Isolated %d distinct roots of degree-%d polynomial on [%s, %s]", len(enclosures), p.degree, a, b)
    return enclosures


# -- sign certificates ---------------------------------------------------------


class SignVerdict(str, Enum):
    NONNEGATIVE = "NONNEGATIVE"
    NONPOSITIVE = "NONPOSITIVE"
    INDEFINITE = "INDEFINITE"


@dataclass(frozen=True)
class SignCertificate:
    """
    Proof object for the sign of a rational polynomial on [a, b].

    Between consecutive root enclosures the polynomial has constant sign, so
    its sign everywhere is fixed by the exact values at ``sample_points``
    (domain endpoints, enclosure endpoints and one point in each gap).
    """

    polynomial: RationalPolynomial
    domain: Tuple[Fraction, Fraction]
    verdict: SignVerdict
    root_enclosures: Tuple[RootEnclosure, ...]
    endpoint_values: Tuple[Fraction, Fraction]
    sample_points: Tuple[Fraction, ...]
    witness: Optional[Fraction] = None
    zero_polynomial: bool = False

    @property
    def is_nonnegative(self) -> bool:
        return self.verdict is SignVerdict.NONNEGATIVE

    @property
    def witness_interval(self) -> Optional[Interval]:
        return None if self.witness is None else to_interval(self.witness)

    def recheck(self) -> bool:
        """Independently re-verify the certificate from its stored data."""
        p = self.polynomial
        a, b = self.domain
        if self.zero_polynomial:
            return p.is_zero and self.verdict is SignVerdict.NONNEGATIVE
        if p.is_zero:
            return False
        counter = _SturmCounter(p.square_free_part())
        # no roots outside the enclosures
        boundaries = [a]
        for e in self.root_enclosures:
            boundaries.extend([e.lower, e.upper])
        boundaries.append(b)
        for lo, hi in zip(boundaries[::2], boundaries[1::2]):
            if lo < hi and counter.count_open(lo, hi) != 0:
                return False
        for e in self.root_enclosures:
            if not e.exact and counter.count_open(e.lower, e.upper) != 1:
                return False
        values = [p(x) for x in self.sample_points]
        if self.verdict is SignVerdict.NONNEGATIVE:
            return all(v >= 0 for v in values)
        if self.verdict is SignVerdict.NONPOSITIVE:
            return all(v <= 0 for v in values)
        return self.witness is not None and p(self.witness) < 0


def certify_sign(p: RationalPolynomial, a: RationalLike, b: RationalLike) -> SignCertificate:
    a, b = as_rational(a), as_rational(b)
    if not a < b:
        raise ValueError(f"Empty domain [{a}, {b}]")
    if p.is_zero:
        return SignCertificate(
            polynomial=p,
            domain=(a, b),
            verdict=SignVerdict.NONNEGATIVE,
            root_enclosures=(),
            endpoint_values=(Fraction(0), Fraction(0)),
            sample_points=(a, b),
            zero_polynomial=True,
        )

    enclosures = isolate_roots(p, a, b)
    points = {a, b}
    cursor = a
    for e in enclosures:
        if cursor < e.lower:
            points.add((cursor + e.lower) / 2)
        points.update((e.lower, e.upper))
        cursor = e.upper
    if cursor < b:
        points.add((cursor + b) / 2)

    samples = tuple(sorted(points))
    values = {x: p(x) for x in samples}
    negative = [x for x in samples if values[x] < 0]
    positive = [x for x in samples if values[x] > 0]
    witness = None
    if not negative:
        verdict = SignVerdict.NONNEGATIVE
    else:
        verdict = SignVerdict.NONPOSITIVE if not positive else SignVerdict.INDEFINITE
        witness = min(negative, key=lambda x: values[x])

    logger.debug("Sign of %s on [%s, %s]: %s", p, a, b, verdict.value)
    return SignCertificate(
        polynomial=p,
        domain=(a, b),
        verdict=verdict,
        root_enclosures=tuple(enclosures),
        endpoint_values=(values[a], values[b]),
        sample_points=samples,
        witness=witness,
    )
