"""
Truncated power-iterated-logarithm transseries.

A monomial is c * x^g0 * l^g1 * l2^g2 with l = -1/log x and l2 = l(l(x)). Series are finite,
sorted by the lexicographic order on (g0, g1, g2) and carry two cutoffs: an x-cutoff N
(monomials with g0 > N are unknown) and an l-window M (inside one x-block only the M lowest
l-exponents, counted from the block's leading one, are kept).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

from .errors import SeriesError
from .rational import RationalU, laurent_coefficients

logger = logging.getLogger(__name__)

Number = Union[int, Fraction]

# Hard ceiling on geometric-series steps in `inverse`.
INVERSE_STEP_LIMIT = 10_000


@dataclass(frozen=True, order=True)
class ExponentTriple:
    """Exponent (g0, g1, g2) of x^g0 l^g1 l2^g2, ordered lexicographically."""

    g0: Fraction
    g1: int = 0
    g2: int = 0

    def __post_init__(self):
        object.__setattr__(self, "g0", Fraction(self.g0))
        object.__setattr__(self, "g1", int(self.g1))
        object.__setattr__(self, "g2", int(self.g2))

    def __add__(self, other: "ExponentTriple") -> "ExponentTriple":
        return ExponentTriple(self.g0 + other.g0, self.g1 + other.g1, self.g2 + other.g2)

    def __neg__(self) -> "ExponentTriple":
        return ExponentTriple(-self.g0, -self.g1, -self.g2)

    def as_tuple(self) -> tuple[Fraction, int, int]:
        return (self.g0, self.g1, self.g2)


ZERO_EXPONENT = ExponentTriple(Fraction(0))


def min_cutoff(*cutoffs):
    """Minimum ignoring None (None means exact / unbounded)."""
    known = [c for c in cutoffs if c is not None]
    return min(known) if known else None


@dataclass(frozen=True)
class TruncatedTransseries:
    """Immutable truncated transseries; build it with `TruncatedTransseries.build`."""

    terms: tuple[tuple[ExponentTriple, Fraction], ...] = ()
    x_cutoff: Optional[Fraction] = None
    ell_cutoff: Optional[int] = None
    _index: dict = field(default=None, init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", dict(self.terms))

    @classmethod
    def build(
        cls,
        terms: Union[Mapping[ExponentTriple, Number], Iterable[tuple[ExponentTriple, Number]]],
        x_cutoff=None,
        ell_cutoff: Optional[int] = None,
    ) -> "TruncatedTransseries":
        """Normalize raw terms: merge duplicates, drop zeros, apply both cutoffs."""
        items = terms.items() if isinstance(terms, Mapping) else terms
        merged: dict[ExponentTriple, Fraction] = {}
        for exponent, coefficient in items:
            merged[exponent] = merged.get(exponent, Fraction(0)) + Fraction(coefficient)
        x_cutoff = Fraction(x_cutoff) if x_cutoff is not None else None
        kept = {
            e: c for e, c in merged.items()
            if c != 0 and (x_cutoff is None or e.g0 <= x_cutoff)
        }
        if ell_cutoff is not None:
            leads: dict[tuple[Fraction, int], int] = {}
            for e in kept:
                key = (e.g0, e.g2)
                leads[key] = min(leads.get(key, e.g1), e.g1)
            kept = {e: c for e, c in kept.items() if e.g1 < leads[e.g0, e.g2] + ell_cutoff}
        return cls(tuple(sorted(kept.items())), x_cutoff, ell_cutoff)

    # --- basic constructors ---

    @classmethod
    def zero(cls, x_cutoff=None, ell_cutoff=None) -> "TruncatedTransseries":
        return cls.build({}, x_cutoff, ell_cutoff)

    @classmethod
    def constant(cls, value: Number) -> "TruncatedTransseries":
        return cls.build({ZERO_EXPONENT: value})

    @classmethod
    def monomial(cls, g0=0, g1: int = 0, g2: int = 0, coefficient: Number = 1) -> "TruncatedTransseries":
        return cls.build({ExponentTriple(g0, g1, g2): coefficient})

    # --- views ---

    def __len__(self) -> int:
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, g0, g1: int = 0, g2: int = 0) -> Fraction:
        return self._index.get(ExponentTriple(g0, g1, g2), Fraction(0))

    def as_dict(self) -> dict[ExponentTriple, Fraction]:
        return dict(self.terms)

    def blocks(self) -> dict[Fraction, list[tuple[ExponentTriple, Fraction]]]:
        """Group monomials by their x-power, in increasing order."""
        grouped: dict[Fraction, list[tuple[ExponentTriple, Fraction]]] = {}
        for exponent, coefficient in self.terms:
            grouped.setdefault(exponent.g0, []).append((exponent, coefficient))
        return grouped

    @property
    def order(self) -> ExponentTriple:
        return leading_term(self)[0]

    def with_cutoffs(self, x_cutoff=None, ell_cutoff=None) -> "TruncatedTransseries":
        return TruncatedTransseries.build(
            self.terms,
            min_cutoff(self.x_cutoff, x_cutoff),
            min_cutoff(self.ell_cutoff, ell_cutoff),
        )

    # --- operators ---

    def __add__(self, other) -> "TruncatedTransseries":
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other) -> "TruncatedTransseries":
        return add(self, negate(_coerce(other)))

    def __rsub__(self, other) -> "TruncatedTransseries":
        return add(_coerce(other), negate(self))

    def __neg__(self) -> "TruncatedTransseries":
        return negate(self)

    def __mul__(self, other) -> "TruncatedTransseries":
        return mul(self, _coerce(other))

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "TruncatedTransseries":
        return power(self, exponent)

    def __str__(self) -> str:
        return format_transseries(self)


def _coerce(value) -> TruncatedTransseries:
    if isinstance(value, TruncatedTransseries):
        return value
    if isinstance(value, (int, Fraction)):
        return TruncatedTransseries.constant(value)
    raise TypeError(f"cannot combine a transseries with {type(value).__name__}")


def leading_term(t: TruncatedTransseries) -> tuple[ExponentTriple, Fraction]:
    """Smallest monomial of t (its order) and its coefficient."""
    if t.is_zero:
        raise SeriesError("no leading term: the series is zero")
    return t.terms[0]


def add(a: TruncatedTransseries, b: TruncatedTransseries) -> TruncatedTransseries:
    merged = a.as_dict()
    for exponent, coefficient in b.terms:
        merged[exponent] = merged.get(exponent, Fraction(0)) + coefficient
    return TruncatedTransseries.build(
        merged,
        min_cutoff(a.x_cutoff, b.x_cutoff),
        min_cutoff(a.ell_cutoff, b.ell_cutoff),
    )


def negate(t: TruncatedTransseries) -> TruncatedTransseries:
    return TruncatedTransseries.build(((e, -c) for e, c in t.terms), t.x_cutoff, t.ell_cutoff)


def scale(t: TruncatedTransseries, factor: Number) -> TruncatedTransseries:
    return TruncatedTransseries.build(((e, c * factor) for e, c in t.terms), t.x_cutoff, t.ell_cutoff)


def shift(t: TruncatedTransseries, exponent: ExponentTriple, coefficient: Number = 1) -> TruncatedTransseries:
    """Multiply by the exact monomial coefficient * x^g0 l^g1 l2^g2; the x-cutoff moves by g0."""
    x_cutoff = t.x_cutoff + exponent.g0 if t.x_cutoff is not None else None
    return TruncatedTransseries.build(
        ((e + exponent, c * coefficient) for e, c in t.terms), x_cutoff, t.ell_cutoff
    )


def product_cutoff(a: TruncatedTransseries, b: TruncatedTransseries) -> Optional[Fraction]:
    """
    x-cutoff of a*b: never above either operand's cutoff, and lowered to
    N_a + ord(b) when b has negative x-order (and symmetrically).
    """
    candidates = [a.x_cutoff, b.x_cutoff]
    if a.x_cutoff is not None and not b.is_zero:
        candidates.append(a.x_cutoff + b.order.g0)
    if b.x_cutoff is not None and not a.is_zero:
        candidates.append(b.x_cutoff + a.order.g0)
    return min_cutoff(*candidates)


def mul(a: TruncatedTransseries, b: TruncatedTransseries) -> TruncatedTransseries:
    """Cauchy product; exponents add, coefficients multiply."""
    x_cutoff = product_cutoff(a, b)
    products: dict[ExponentTriple, Fraction] = {}
    for ea, ca in a.terms:
        if x_cutoff is not None and ea.g0 + (b.terms[0][0].g0 if b.terms else 0) > x_cutoff:
            break
        for eb, cb in b.terms:
            exponent = ea + eb
            if x_cutoff is not None and exponent.g0 > x_cutoff:
                break
            products[exponent] = products.get(exponent, Fraction(0)) + ca * cb
    return TruncatedTransseries.build(products, x_cutoff, min_cutoff(a.ell_cutoff, b.ell_cutoff))


def power(t: TruncatedTransseries, exponent: int, x_cutoff=None, ell_cutoff=None) -> TruncatedTransseries:
    """Integer power; negative exponents go through series inversion."""
    if exponent < 0:
        return power(inverse(t, x_cutoff, ell_cutoff), -exponent)
    result = TruncatedTransseries.constant(1)
    base = t
    while exponent:
        if exponent & 1:
            result = mul(result, base)
        exponent >>= 1
        if exponent:
            base = mul(base, base)
    return result.with_cutoffs(x_cutoff, ell_cutoff)


def inverse(t: TruncatedTransseries, x_cutoff=None, ell_cutoff: Optional[int] = None) -> TruncatedTransseries:
    """
    1/t = (1/(c m)) * sum_k (-h)^k with t = c m (1 + h), m the leading monomial.

    The geometric sum needs an x-cutoff when h has positive x-order and an l-window when
    h lives partly in the x^0 block; otherwise SeriesError is raised. l2-terms in the x^0
    block of h are rejected outright.
    """
    exponent, coefficient = leading_term(t)
    target = min_cutoff(
        t.x_cutoff - 2 * exponent.g0 if t.x_cutoff is not None else None,
        Fraction(x_cutoff) if x_cutoff is not None else None,
    )
    window = min_cutoff(t.ell_cutoff, ell_cutoff)
    h = shift(t, -exponent, 1 / coefficient) - 1
    if h.is_zero:
        return shift(TruncatedTransseries.constant(1), -exponent, 1 / coefficient).with_cutoffs(target, window)
    h_order = h.order
    if target is None:
        raise SeriesError("inverting a series with more than one monomial needs an x_cutoff")
    if h_order.g0 == 0 and window is None:
        raise SeriesError("inverting a series with l-terms in its leading block needs an ell_cutoff")
    if any(e.g0 == 0 and e.g2 != 0 for e, _ in h.terms):
        # every power of h would open a new l2-power in the leading block
        raise SeriesError("cannot invert a series with l2-terms in its leading block")

    relative = target + exponent.g0
    step = TruncatedTransseries.constant(1)
    total = dict(step.terms)
    minus_h = negate(h).with_cutoffs(relative)
    for count in range(1, INVERSE_STEP_LIMIT + 1):
        step = mul(step, minus_h).with_cutoffs(relative)
        fresh = _inside_window(step, total, window)
        if not fresh:
            break
        for e, c in fresh:
            total[e] = total.get(e, Fraction(0)) + c
        step = TruncatedTransseries.build(fresh, relative)
    else:
        raise SeriesError("series inversion did not converge within the step limit")
    summed = TruncatedTransseries.build(total, relative, window)
    return shift(summed, -exponent, 1 / coefficient).with_cutoffs(target, window)


def _inside_window(step: TruncatedTransseries, total: dict, window: Optional[int]):
    if window is None:
        return list(step.terms)
    leads: dict[tuple[Fraction, int], int] = {}
    for e in total:
        key = (e.g0, e.g2)
        leads[key] = min(leads.get(key, e.g1), e.g1)
    kept = []
    for e, c in step.terms:
        lead = leads.setdefault((e.g0, e.g2), e.g1)
        if e.g1 < lead + window:
            kept.append((e, c))
    return kept


def derive(t: TruncatedTransseries) -> TruncatedTransseries:
    """
    d/dx, using dl/dx = x^-1 l^2 and dl2/dx = x^-1 l l2^2:
    d(x^a l^b l2^c) = a x^(a-1) l^b l2^c + b x^(a-1) l^(b+1) l2^c + c x^(a-1) l^(b+1) l2^(c+1).
    """
    result: dict[ExponentTriple, Fraction] = {}
    for e, c in t.terms:
        for factor, shifted in (
            (e.g0, ExponentTriple(e.g0 - 1, e.g1, e.g2)),
            (e.g1, ExponentTriple(e.g0 - 1, e.g1 + 1, e.g2)),
            (e.g2, ExponentTriple(e.g0 - 1, e.g1 + 1, e.g2 + 1)),
        ):
            if factor:
                result[shifted] = result.get(shifted, Fraction(0)) + factor * c
    x_cutoff = t.x_cutoff - 1 if t.x_cutoff is not None else None
    return TruncatedTransseries.build(result, x_cutoff, t.ell_cutoff)


def antiderive_monomial(alpha, m: int, M: Optional[int] = None) -> TruncatedTransseries:
    """
    Formal antiderivative of x^-alpha l^-m without constant term.

    alpha != 1 integrates by parts:
        int x^-a l^-m = x^(1-a) l^-m / (1-a) + m/(1-a) int x^-a l^(-m+1).
    For m <= 0 this never stops and is cut after M monomials. alpha == 1 has the closed
    forms -l^(-m-1)/(m+1), and -l2^-1 for the integrand x^-1 l.
    """
    alpha = Fraction(alpha)
    m = int(m)
    if alpha == 1:
        if m == -1:
            return TruncatedTransseries.monomial(0, 0, -1, -1)
        return TruncatedTransseries.monomial(0, -m - 1, 0, Fraction(-1, m + 1))

    infinite = m < 0
    if infinite and M is None:
        raise SeriesError("antiderivative with ascending l-powers needs an ell_cutoff M")
    g0 = 1 - alpha
    terms: dict[ExponentTriple, Fraction] = {}
    factor = Fraction(1)
    current = m
    while True:
        terms[ExponentTriple(g0, -current)] = factor / g0
        factor = factor * current / g0
        if factor == 0 or (infinite and len(terms) >= M):
            break
        current -= 1
    return TruncatedTransseries.build(terms, None, M if infinite else None)


def laurent_expand(q: RationalU, M: Optional[int] = None) -> TruncatedTransseries:
    """
    Pure l-series of q(1/l) around l = 0, leading exponent deg(den) - deg(num).

    When the denominator is a power of u the expansion is finite and exact, and M cuts it
    only when it needs more than M coefficients. Otherwise M terms are produced. A cut
    expansion carries the l-window M.
    """
    if q.is_zero:
        raise SeriesError("division by zero polynomial: cannot expand the zero function")
    denominator = q.denominator_coefficients()
    finite = all(c == 0 for c in denominator[:-1])
    if finite:
        n0, coefficients = laurent_coefficients(q, len(q.numerator_coefficients()))
        truncated = M is not None and any(coefficients[M:])
        coefficients = coefficients[:M] if truncated else coefficients
    elif M is None:
        raise SeriesError("Laurent expansion of a non-polynomial needs M terms")
    else:
        n0, coefficients = laurent_coefficients(q, M)
        truncated = True
    terms = {ExponentTriple(0, n0 + i): c for i, c in enumerate(coefficients)}
    return TruncatedTransseries.build(terms, None, M if truncated else None)


def from_block(g0, q: RationalU, M: Optional[int] = None) -> TruncatedTransseries:
    """x^g0 * q(u) as a transseries."""
    expanded = laurent_expand(q, M)
    return TruncatedTransseries.build(
        ((ExponentTriple(Fraction(g0), e.g1, e.g2), c) for e, c in expanded.terms),
        None,
        expanded.ell_cutoff,
    )


# --- canonical text ---

def format_fraction(value: Fraction) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def format_monomial(exponent: ExponentTriple, magnitude: Fraction) -> str:
    factors = []
    if exponent.g0 != 0:
        factors.append("x" if exponent.g0 == 1 else f"x^{format_fraction(exponent.g0)}")
    if exponent.g1 != 0:
        factors.append("l" if exponent.g1 == 1 else f"l^{exponent.g1}")
    if exponent.g2 != 0:
        factors.append("l2" if exponent.g2 == 1 else f"l2^{exponent.g2}")
    if not factors:
        return format_fraction(magnitude)
    if magnitude == 1:
        return "*".join(factors)
    return "*".join([format_fraction(magnitude)] + factors)


def format_transseries(t: TruncatedTransseries) -> str:
    """Canonical text: increasing monomials, reduced fractions, ' + ' / ' - ' separators."""
    if t.is_zero:
        return "0"
    pieces = []
    for index, (exponent, coefficient) in enumerate(t.terms):
        text = format_monomial(exponent, abs(coefficient))
        if index == 0:
            pieces.append(f"-{text}" if coefficient < 0 else text)
        else:
            pieces.append(f" - {text}" if coefficient < 0 else f" + {text}")
    return "".join(pieces)
