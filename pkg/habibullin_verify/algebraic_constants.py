"""
Real algebraic constants (a defining polynomial plus an isolating bracket)
with refinable rational enclosures, and an enclosure of pi.
"""

from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Optional, Sequence, Tuple, Union

from mpmath import iv, mp

from .exact_core import (
    Interval,
    RationalLike,
    RationalPolynomial,
    ZeroPolynomialError,
    as_rational,
    interval_lower,
    interval_upper,
    interval_width,
    isolate_roots,
    mp_from_rational,
    mp_to_rational,
    to_interval,
)

logger = logging.getLogger(__name__)

# pi to 30 decimals, the reference every pi enclosure is checked against
PI_30 = "3.141592653589793238462643383279"


class RootCountError(ValueError):
    """The bracket does not isolate exactly one root of the defining polynomial"""


def _sign(value: Fraction) -> int:
    return (value > 0) - (value < 0)


class AlgebraicConstant:
    """
    A real algebraic number: the unique root of ``defining_polynomial`` in
    ``bracket``.

    The polynomial is kept in primitive integer form with a positive leading
    coefficient, so two handles built from proportional polynomials and the
    same bracket compare equal. The rational enclosure cache only ever
    narrows; refinement holds a lock so readers always see a valid enclosure.
    """

    def __init__(
        self,
        defining_polynomial: RationalPolynomial,
        bracket: Sequence[RationalLike],
        label: Optional[str] = None,
    ):
        if defining_polynomial.is_zero:
            raise ZeroPolynomialError("A defining polynomial cannot be zero")
        lower, upper = (as_rational(b) for b in bracket)
        if not lower < upper:
            raise ValueError(f"Bracket [{lower}, {upper}] is empty")

        self.defining_polynomial = defining_polynomial.primitive()
        self.bracket: Tuple[Fraction, Fraction] = (lower, upper)
        self.label = label or f"root of {self.defining_polynomial} in [{lower}, {upper}]"

        enclosures = isolate_roots(self.defining_polynomial, lower, upper)
        if len(enclosures) != 1:
            raise RootCountError(
                f"{self.defining_polynomial} has {len(enclosures)} distinct roots in "
                f"[{lower}, {upper}]; exactly one is required"
            )
        self._squarefree = self.defining_polynomial.square_free_part()
        self._lock = threading.Lock()
        self._enclosure = (enclosures[0].lower, enclosures[0].upper)
        self._mp_cache: Dict[int, object] = {}

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraicConstant):
            return NotImplemented
        return self.defining_polynomial == other.defining_polynomial and self.bracket == other.bracket

    def __hash__(self) -> int:
        return hash((self.defining_polynomial, self.bracket))

    def __repr__(self) -> str:
        return f"AlgebraicConstant({self.label})"

    def __pow__(self, k: int) -> Union[Fraction, "AlgebraicConstant"]:
        return exact_power(self, k)

    # -- refinement ---------------------------------------------------------

    @property
    def rational_enclosure(self) -> Tuple[Fraction, Fraction]:
        with self._lock:
            return self._enclosure

    @property
    def is_rational(self) -> bool:
        if self.defining_polynomial.degree == 1:
            return True
        lower, upper = self.rational_enclosure
        return lower == upper

    @property
    def rational_value(self) -> Optional[Fraction]:
        p = self.defining_polynomial
        if p.degree == 1:
            return -p.coefficient(0) / p.coefficient(1)
        lower, upper = self.rational_enclosure
        return lower if lower == upper else None

    def _bisect(self, lower: Fraction, upper: Fraction) -> Tuple[Fraction, Fraction]:
        mid = (lower + upper) / 2
        value = self._squarefree(mid)
        if value == 0:
            return mid, mid
        if _sign(value) == _sign(self._squarefree(lower)):
            return mid, upper
        return lower, mid

    def refine(self, width: RationalLike) -> Tuple[Fraction, Fraction]:
        """Narrow the cached enclosure to at most ``width`` and return it."""
        width = as_rational(width)
        if width <= 0:
            raise ValueError("Refinement width must be positive")
        with self._lock:
            lower, upper = self._enclosure
            steps = 0
            while upper - lower > width:
                lower, upper = self._bisect(lower, upper)
                steps += 1
            self._enclosure = (lower, upper)
        if steps:
            logger.debug("Refined %s by %d bisections", self.label, steps)
        return lower, upper

    def enclose(self, width: float) -> Interval:
        if width <= 0:
            raise ValueError("Enclosure width must be positive")
        # half the budget goes to bisection, the rest absorbs outward rounding
        lower, upper = self.refine(Fraction(width) / 2)
        return to_interval(lower, upper)

    def interval(self) -> Interval:
        """Enclosure as tight as the working interval precision allows."""
        return self.enclose(2.0 ** -(iv.prec - 2))

    def to_mp(self):
        prec = mp.prec
        with self._lock:
            cached = self._mp_cache.get(prec)
        if cached is not None:
            return cached
        lower, upper = self.refine(Fraction(1, 2 ** (prec + 8)))
        value = mp_from_rational((lower + upper) / 2)
        with self._lock:
            self._mp_cache[prec] = value
        return value

    def compare(self, r: RationalLike) -> int:
        """Exact sign of (self - r)."""
        r = as_rational(r)
        lower, upper = self.rational_enclosure
        while True:
            if r < lower:
                return 1
            if r > upper:
                return -1
            if self._squarefree(r) == 0:
                return 0
            lower, upper = self.refine((upper - lower) / 2)

    # -- serialization ------------------------------------------------------

    def to_definition(self) -> dict:
        return {
            "defining_poly": self.defining_polynomial.to_strings(),
            "bracket": [str(self.bracket[0]), str(self.bracket[1])],
        }

    @classmethod
    def from_definition(cls, data: dict, label: Optional[str] = None) -> "AlgebraicConstant":
        try:
            poly = RationalPolynomial.from_strings(data["defining_poly"])
            bracket = data["bracket"]
        except KeyError as e:
            raise ValueError(f"Knot definition is missing field {e}")
        return make_constant(poly, bracket, label)


def make_constant(
    defining_polynomial: RationalPolynomial,
    bracket: Sequence[RationalLike],
    label: Optional[str] = None,
) -> AlgebraicConstant:
    return AlgebraicConstant(defining_polynomial, bracket, label)


def enclose(c: AlgebraicConstant, width: float) -> Interval:
    return c.enclose(width)


# -- derived constants -----------------------------------------------------------


Matrix = List[List[Fraction]]


def _identity(n: int) -> Matrix:
    return [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]


def _matmul(a: Matrix, b: Matrix) -> Matrix:
    n = len(a)
    return [[sum((a[i][k] * b[k][j] for k in range(n)), Fraction(0)) for j in range(n)] for i in range(n)]


def _companion(p: RationalPolynomial) -> Matrix:
    monic = p.monic()
    n = monic.degree
    m = [[Fraction(0)] * n for _ in range(n)]
    for i in range(1, n):
        m[i][i - 1] = Fraction(1)
    for i in range(n):
        m[i][n - 1] = -monic.coefficient(i)
    return m


def _characteristic_polynomial(a: Matrix) -> RationalPolynomial:
    """Faddeev-LeVerrier, exact over Q."""
    n = len(a)
    coefficients = [Fraction(0)] * (n + 1)
    coefficients[n] = Fraction(1)
    m = [[Fraction(0)] * n for _ in range(n)]
    for k in range(1, n + 1):
        am = _matmul(a, m)
        m = [[am[i][j] + (coefficients[n - k + 1] if i == j else 0) for j in range(n)] for i in range(n)]
        trace = sum((row[i] for i, row in enumerate(_matmul(a, m))), Fraction(0))
        coefficients[n - k] = -trace / k
    return RationalPolynomial(tuple(coefficients))


def _power_range(lower: Fraction, upper: Fraction, k: int) -> Tuple[Fraction, Fraction]:
    if lower >= 0 or k % 2 == 1:
        return lower**k, upper**k
    if upper <= 0:
        return upper**k, lower**k
    return Fraction(0), max(lower**k, upper**k)


def _root_bound(value: Fraction, k: int, below: bool) -> Fraction:
    """A rational r >= 0 with r**k <= value (below) or r**k >= value."""
    if value <= 0:
        return Fraction(0)
    num = int(mp.nint(mp.root(value.numerator, k)))
    den = int(mp.nint(mp.root(value.denominator, k)))
    if num**k == value.numerator and den**k == value.denominator:
        return Fraction(num, den)
    approx = mp_to_rational(mp.root(mp_from_rational(value), k))
    step = Fraction(1, 2**20) * max(approx, Fraction(1, 2**20))
    candidate = approx - step if below else approx + step
    while candidate > 0 and (candidate**k > value if below else candidate**k < value):
        candidate = candidate - step if below else candidate + step
        step *= 2
    return max(candidate, Fraction(0))


def _derive(
    source: AlgebraicConstant,
    polynomial: RationalPolynomial,
    bracket_for,
    label: str,
) -> Union[Fraction, AlgebraicConstant]:
    """
    Build the constant that ``polynomial`` defines near ``bracket_for(lo, hi)``,
    starting from the source's original bracket and shrinking with the
    source's enclosure until the image bracket isolates one root.
    """
    polynomial = polynomial.square_free_part().primitive()
    if polynomial.degree == 1:
        return -polynomial.coefficient(0) / polynomial.coefficient(1)
    lower, upper = source.bracket
    while True:
        lo, hi = bracket_for(lower, upper)
        if lo == hi:
            return lo
        if len(isolate_roots(polynomial, lo, hi)) == 1:
            return make_constant(polynomial, (lo, hi), label)
        lower, upper = source.refine((source.rational_enclosure[1] - source.rational_enclosure[0]) / 2)


def exact_power(c: AlgebraicConstant, k: int) -> Union[Fraction, AlgebraicConstant]:
    """
    c**k, as an exact rational when it is rational (e.g. x0**4 = 3/5) and
    otherwise as a new constant (e.g. x1**2 is the same handle as x0).
    """
    if k < 1:
        raise ValueError("exact_power needs k >= 1")
    if c.rational_value is not None:
        return c.rational_value**k
    if k == 1:
        return c
    powered = _matmul_power(_companion(c.defining_polynomial), k)
    return _derive(
        c,
        _characteristic_polynomial(powered),
        lambda lo, hi: _power_range(lo, hi, k),
        f"({c.label})^{k}",
    )


def _matmul_power(a: Matrix, k: int) -> Matrix:
    result = _identity(len(a))
    base = a
    while k:
        if k & 1:
            result = _matmul(result, base)
        base = _matmul(base, base)
        k >>= 1
    return result


def nth_root(c: AlgebraicConstant, k: int) -> Union[Fraction, AlgebraicConstant]:
    """Positive k-th root of a nonnegative constant (x1 = nth_root(x0, 2))."""
    if k < 1:
        raise ValueError("nth_root needs k >= 1")
    if c.compare(0) < 0:
        raise ValueError(f"{c.label} is negative; no real positive root of order {k}")
    if k == 1:
        return c
    composed = c.defining_polynomial.compose(RationalPolynomial.monomial(k))
    return _derive(
        c,
        composed,
        lambda lo, hi: (_root_bound(max(lo, Fraction(0)), k, below=True), _root_bound(hi, k, below=False)),
        f"({c.label})^(1/{k})",
    )


# -- the two knots and pi --------------------------------------------------------


@lru_cache(maxsize=None)
def knot_x0() -> AlgebraicConstant:
    """(3/5)^(1/4), the root of 5t^4 - 3 in [0, 1]."""
    return make_constant(RationalPolynomial((-3, 0, 0, 0, 5)), (0, 1), "x0")


@lru_cache(maxsize=None)
def knot_x1() -> AlgebraicConstant:
    """(3/5)^(1/8), the root of 5t^8 - 3 in [0, 1]."""
    return make_constant(RationalPolynomial((-3, 0, 0, 0, 0, 0, 0, 0, 5)), (0, 1), "x1")


@dataclass(frozen=True)
class PiEnclosure:
    enclosure: Interval
    requested_width: float

    @property
    def width(self):
        return interval_width(self.enclosure)


def pi_enclosure(width: float = 1e-30) -> PiEnclosure:
    if width < 1e-30:
        raise ValueError("pi enclosures are validated to 30 digits; width must be >= 1e-30")
    enclosure = iv.mpf(iv.pi)
    if interval_width(enclosure) > width:
        raise ValueError(
            f"Working precision ({iv.dps} digits) cannot enclose pi to width {width}"
        )
    reference = mp.mpf(PI_30)
    if not (interval_lower(enclosure) - mp.mpf("1e-30") <= reference <= interval_upper(enclosure)):
        raise RuntimeError("pi enclosure disagrees with the 30-digit reference value")
    return PiEnclosure(enclosure=enclosure, requested_width=width)
