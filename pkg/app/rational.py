"""
Polynomials and rational functions in u = -log x = 1/l with exact rational coefficients.

Blocks of Dulac germs and of Fatou coordinates are x-powers times such functions,
so this is the coefficient ring of the block algorithm.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Optional, Sequence

import sympy
from sympy import QQ, Poly, Symbol

from .errors import SeriesError

U = Symbol("u")


def to_fraction(value) -> Fraction:
    """Convert a sympy rational (or int / Fraction) to a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    rational = sympy.Rational(value)
    return Fraction(int(rational.p), int(rational.q))


def to_rational(value) -> sympy.Rational:
    value = Fraction(value)
    return sympy.Rational(value.numerator, value.denominator)


def _poly(coefficients: Sequence) -> Poly:
    """Build a Poly in u from ascending coefficients."""
    descending = [to_rational(c) for c in reversed(list(coefficients))] or [sympy.Integer(0)]
    return Poly(descending, U, domain=QQ)


_ONE = Poly(1, U, domain=QQ)
_ZERO = Poly(0, U, domain=QQ)


@dataclass(frozen=True, eq=False)
class RationalU:
    """num(u) / den(u), reduced, with a monic denominator."""

    num: Poly
    den: Poly = _ONE

    def __post_init__(self):
        num = Poly(self.num, U, domain=QQ)
        den = Poly(self.den, U, domain=QQ)
        if den.is_zero:
            raise SeriesError("division by the zero polynomial")
        if num.is_zero:
            num, den = _ZERO, _ONE
        else:
            common = num.gcd(den)
            num = num.exquo(common)
            den = den.exquo(common)
            lead = den.LC()
            num = num.quo_ground(lead)
            den = den.monic()
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    # --- constructors ---

    @classmethod
    def constant(cls, value) -> "RationalU":
        return cls(_poly([Fraction(value)]))

    @classmethod
    def polynomial(cls, coefficients: Iterable) -> "RationalU":
        """Polynomial from ascending coefficients c0 + c1*u + ..."""
        return cls(_poly(list(coefficients)))

    @classmethod
    def from_coefficients(cls, numerator: Iterable, denominator: Iterable = (1,)) -> "RationalU":
        return cls(_poly(list(numerator)), _poly(list(denominator)))

    @classmethod
    def u_power(cls, k: int, coefficient=1) -> "RationalU":
        """coefficient * u^k, k of either sign (u^-1 is l)."""
        if k >= 0:
            return cls(_poly([0] * k + [Fraction(coefficient)]))
        return cls(_poly([Fraction(coefficient)]), _poly([0] * (-k) + [1]))

    @classmethod
    def from_expr(cls, expr) -> "RationalU":
        num, den = sympy.fraction(sympy.together(sympy.sympify(expr)))
        return cls(Poly(num, U, domain=QQ), Poly(den, U, domain=QQ))

    # --- predicates ---

    @property
    def is_zero(self) -> bool:
        return self.num.is_zero

    @property
    def is_polynomial(self) -> bool:
        return self.den.degree() == 0

    @property
    def is_constant(self) -> bool:
        return self.is_polynomial and self.num.degree() <= 0

    @property
    def degree_gap(self) -> int:
        """deg(den) - deg(num): the leading l-exponent of the Laurent expansion in l."""
        if self.is_zero:
            raise SeriesError("zero rational function has no degree gap")
        return self.den.degree() - self.num.degree()

    # --- arithmetic ---

    def __add__(self, other) -> "RationalU":
        other = _coerce(other)
        return RationalU(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other) -> "RationalU":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "RationalU":
        return _coerce(other) - self

    def __neg__(self) -> "RationalU":
        return RationalU(-self.num, self.den)

    def __mul__(self, other) -> "RationalU":
        other = _coerce(other)
        return RationalU(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "RationalU":
        other = _coerce(other)
        if other.is_zero:
            raise SeriesError("division by the zero rational function")
        return RationalU(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other) -> "RationalU":
        return _coerce(other) / self

    def __pow__(self, exponent: int) -> "RationalU":
        if exponent >= 0:
            return RationalU(self.num ** exponent, self.den ** exponent)
        if self.is_zero:
            raise SeriesError("zero rational function raised to a negative power")
        return RationalU(self.den ** (-exponent), self.num ** (-exponent))

    def derivative(self) -> "RationalU":
        """d/du."""
        return RationalU(
            self.num.diff(U) * self.den - self.num * self.den.diff(U),
            self.den ** 2,
        )

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = RationalU.constant(other)
        if not isinstance(other, RationalU):
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self) -> int:
        return hash((tuple(self.numerator_coefficients()), tuple(self.denominator_coefficients())))

    # --- views ---

    def numerator_coefficients(self) -> list[Fraction]:
        """Ascending coefficients of the numerator."""
        return [to_fraction(c) for c in reversed(self.num.all_coeffs())]

    def denominator_coefficients(self) -> list[Fraction]:
        return [to_fraction(c) for c in reversed(self.den.all_coeffs())]

    def to_expr(self):
        return self.num.as_expr() / self.den.as_expr()

    def positive_real_poles(self) -> list:
        """Real roots u > 0 of the denominator, as exact sympy numbers."""
        if self.is_polynomial:
            return []
        return sorted({root for root in self.den.real_roots() if root > 0})

    def __str__(self) -> str:
        return sympy.sstr(self.to_expr())

    def __repr__(self) -> str:
        return f"RationalU({self})"


def _coerce(value) -> RationalU:
    if isinstance(value, RationalU):
        return value
    if isinstance(value, (int, Fraction)):
        return RationalU.constant(value)
    raise TypeError(f"cannot combine RationalU with {type(value).__name__}")


def lcm_denominator(values: Iterable[Fraction]) -> int:
    result = 1
    for value in values:
        result = sympy.ilcm(result, Fraction(value).denominator)
    return int(result)


ZERO = RationalU(_ZERO)
ONE = RationalU(_ONE)


def laurent_coefficients(q: RationalU, count: int, start: Optional[int] = None) -> tuple[int, list[Fraction]]:
    """
    Coefficients of q(1/l) as a Laurent series in l.

    q(1/l) = l^(deg den - deg num) * rev(num)(l) / rev(den)(l), where rev reverses the
    coefficient list. Returns (n0, [c_n0, c_n0+1, ...]) with `count` entries, or more
    entries when `start` asks for coefficients below n0 (these are zero).
    """
    if q.is_zero:
        raise SeriesError("zero rational function has no Laurent expansion")
    n0 = q.degree_gap
    numerator = list(reversed(q.numerator_coefficients()))
    denominator = list(reversed(q.denominator_coefficients()))
    inverse_lead = 1 / denominator[0]
    series: list[Fraction] = []
    for n in range(count):
        value = numerator[n] if n < len(numerator) else Fraction(0)
        for j in range(1, min(n, len(denominator) - 1) + 1):
            value -= denominator[j] * series[n - j]
        series.append(value * inverse_lead)
    if start is not None and start < n0:
        series = [Fraction(0)] * (n0 - start) + series
        n0 = start
    return n0, series
