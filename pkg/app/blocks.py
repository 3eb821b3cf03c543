"""
Exact block series: finite maps x-order -> RationalU, i.e. sums of x^p R_p(u).

Each block keeps its full l-structure as a rational function of u = -log x, so products,
derivatives and inverses are exact in l; only the x-direction is truncated. `cutoff` is the
largest x-order through which the series is known (None for an exact finite series).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

from .errors import SeriesError
from .rational import ONE, RationalU
from .transseries import (
    ExponentTriple,
    TruncatedTransseries,
    add,
    antiderive_monomial,
    from_block,
    laurent_expand,
    min_cutoff,
    scale,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BlockSeries:
    blocks: tuple[tuple[Fraction, RationalU], ...] = ()
    cutoff: Optional[Fraction] = None

    @classmethod
    def build(cls, blocks: Union[Mapping, Iterable], cutoff=None) -> "BlockSeries":
        items = blocks.items() if isinstance(blocks, Mapping) else blocks
        merged: dict[Fraction, RationalU] = {}
        for order, q in items:
            order = Fraction(order)
            merged[order] = merged[order] + q if order in merged else q
        cutoff = Fraction(cutoff) if cutoff is not None else None
        kept = sorted(
            (order, q) for order, q in merged.items()
            if not q.is_zero and (cutoff is None or order <= cutoff)
        )
        return cls(tuple(kept), cutoff)

    @classmethod
    def monomial(cls, order, q: Union[RationalU, int, Fraction] = 1) -> "BlockSeries":
        if not isinstance(q, RationalU):
            q = RationalU.constant(q)
        return cls.build({Fraction(order): q})

    @classmethod
    def constant(cls, value=1) -> "BlockSeries":
        return cls.monomial(0, value)

    @classmethod
    def zero(cls, cutoff=None) -> "BlockSeries":
        return cls.build({}, cutoff)

    @classmethod
    def identity(cls) -> "BlockSeries":
        return cls.monomial(1, ONE)

    # --- views ---

    @property
    def is_zero(self) -> bool:
        """True when no block is known to be nonzero (up to the cutoff)."""
        return not self.blocks

    @property
    def order(self) -> Fraction:
        if self.is_zero:
            raise SeriesError("no leading term: the block series is zero")
        return self.blocks[0][0]

    @property
    def leading_block(self) -> tuple[Fraction, RationalU]:
        if self.is_zero:
            raise SeriesError("no leading term: the block series is zero")
        return self.blocks[0]

    def block(self, order) -> RationalU:
        return dict(self.blocks).get(Fraction(order), RationalU.constant(0))

    def orders(self) -> list[Fraction]:
        return [order for order, _ in self.blocks]

    def truncate(self, cutoff) -> "BlockSeries":
        return BlockSeries.build(self.blocks, min_cutoff(self.cutoff, cutoff))

    def floor_order(self) -> Optional[Fraction]:
        """Smallest order the series can have: its leading order, or its cutoff when it vanishes."""
        if self.blocks:
            return self.order
        return self.cutoff

    # --- arithmetic ---

    def __add__(self, other) -> "BlockSeries":
        other = _coerce(other)
        return BlockSeries.build(self.blocks + other.blocks, min_cutoff(self.cutoff, other.cutoff))

    __radd__ = __add__

    def __neg__(self) -> "BlockSeries":
        return BlockSeries(tuple((order, -q) for order, q in self.blocks), self.cutoff)

    def __sub__(self, other) -> "BlockSeries":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "BlockSeries":
        return _coerce(other) - self

    def __mul__(self, other) -> "BlockSeries":
        return self.multiply(_coerce(other))

    __rmul__ = __mul__

    def scale(self, factor: Union[int, Fraction, RationalU]) -> "BlockSeries":
        if not isinstance(factor, RationalU):
            factor = RationalU.constant(factor)
        return BlockSeries.build(((order, q * factor) for order, q in self.blocks), self.cutoff)

    def shift(self, order) -> "BlockSeries":
        """Multiply by x^order; the cutoff moves with it."""
        order = Fraction(order)
        cutoff = self.cutoff + order if self.cutoff is not None else None
        return BlockSeries(tuple((p + order, q) for p, q in self.blocks), cutoff)

    def multiply(self, other: "BlockSeries", cap=None) -> "BlockSeries":
        """
        Product known through min(A + ord b, B + ord a), where A, B are the cutoffs;
        orders above `cap` are not computed.
        """
        candidates = [cap]
        if self.cutoff is not None:
            low = other.floor_order()
            candidates.append(self.cutoff + low if low is not None else None)
        if other.cutoff is not None:
            low = self.floor_order()
            candidates.append(other.cutoff + low if low is not None else None)
        cutoff = min_cutoff(*candidates)
        products: dict[Fraction, RationalU] = {}
        for pa, qa in self.blocks:
            for pb, qb in other.blocks:
                order = pa + pb
                if cutoff is not None and order > cutoff:
                    break
                products[order] = products[order] + qa * qb if order in products else qa * qb
        return BlockSeries.build(products, cutoff)

    def power(self, exponent: int, cap=None) -> "BlockSeries":
        if exponent < 0:
            return self.inverse(cap).power(-exponent, cap)
        result = BlockSeries.constant(1)
        for _ in range(exponent):
            result = result.multiply(self, cap)
        return result.truncate(cap)

    def inverse(self, cap=None) -> "BlockSeries":
        """
        1/s = x^-p0 R0^-1 * sum_k (-h)^k with s = x^p0 R0 (1 + h); exact in l because the
        blocks of h are rational in u. A series with several blocks needs a cutoff.
        """
        p0, r0 = self.leading_block
        unit = BlockSeries.monomial(-p0, 1 / r0)
        own = self.cutoff - 2 * p0 if self.cutoff is not None else None
        target = min_cutoff(own, Fraction(cap) if cap is not None else None)
        h = (self.multiply(unit) - 1)
        if h.is_zero:
            return unit.truncate(target)
        if target is None:
            raise SeriesError("inverting a series with several blocks needs a cutoff")
        relative = target + p0
        step = BlockSeries.constant(1)
        total = step
        minus_h = (-h).truncate(relative)
        while True:
            step = step.multiply(minus_h, relative)
            if step.is_zero:
                break
            total = total + step
        return total.truncate(relative).shift(-p0).scale(1 / r0).truncate(target)

    def derive(self) -> "BlockSeries":
        """d/dx [x^p R(u)] = x^(p-1) (p R - R'(u)) since du/dx = -1/x."""
        derived = ((p - 1, q * p - q.derivative()) for p, q in self.blocks)
        cutoff = self.cutoff - 1 if self.cutoff is not None else None
        return BlockSeries.build(derived, cutoff)

    def displacement(self) -> "BlockSeries":
        """x - self: the displacement g of a germ f = x - g."""
        return BlockSeries.identity() - self

    def same_through(self, other: "BlockSeries", order) -> bool:
        """Blockwise equality for all orders <= order."""
        order = Fraction(order)
        mine = [(p, q) for p, q in self.blocks if p <= order]
        theirs = [(p, q) for p, q in other.blocks if p <= order]
        return mine == theirs

    # --- conversions ---

    def to_transseries(self, M: Optional[int] = None) -> TruncatedTransseries:
        """Expand every block in l (M terms per block when the block is not a Laurent polynomial)."""
        result = TruncatedTransseries.zero(self.cutoff)
        for order, q in self.blocks:
            result = add(result, from_block(order, q, M))
        return result

    @classmethod
    def from_transseries(cls, t: TruncatedTransseries) -> "BlockSeries":
        """Exact conversion; every block must be a finite Laurent polynomial in l without l2."""
        blocks: dict[Fraction, RationalU] = {}
        for order, monomials in t.blocks().items():
            q = RationalU.constant(0)
            for exponent, coefficient in monomials:
                if exponent.g2 != 0:
                    raise SeriesError("l2 monomials have no block representation")
                q = q + RationalU.u_power(-exponent.g1, coefficient)
            blocks[order] = q
        if t.ell_cutoff is not None and t.terms:
            logger.warning("converting an l-truncated series to exact blocks keeps only the stored terms")
        return cls.build(blocks, t.x_cutoff)

    def __str__(self) -> str:
        if self.is_zero:
            text = "0"
        else:
            text = " + ".join(f"x^{_fmt(p)}*({q})" for p, q in self.blocks)
        if self.cutoff is not None:
            text += f" + O(x^>{_fmt(self.cutoff)})"
        return text


def _fmt(value: Fraction) -> str:
    return str(value.numerator) if value.denominator == 1 else f"{value.numerator}/{value.denominator}"


def _coerce(value) -> BlockSeries:
    if isinstance(value, BlockSeries):
        return value
    if isinstance(value, (int, Fraction)):
        return BlockSeries.constant(value)
    raise TypeError(f"cannot combine a block series with {type(value).__name__}")


def leading_exponent(q: RationalU, order) -> ExponentTriple:
    """ExponentTriple of the leading monomial of x^order q(u)."""
    return ExponentTriple(order, q.degree_gap)


def taylor_terms(psi_prime_order: Fraction, g_order: Fraction, cap: Fraction) -> int:
    """
    Largest k such that Psi^(k) g^k / k! has x-order <= cap, where ord(Psi' g) grows by
    g_order - 1 per extra term.
    """
    if g_order <= 1:
        raise SeriesError("Taylor increment needs ord_x(g) > 1 (parabolic displacement)")
    base = psi_prime_order + g_order
    if base > cap:
        return 0
    return math.floor((cap - base) / (g_order - 1)) + 1


def taylor_increment_blocks(psi_prime: BlockSeries, g: BlockSeries, cap) -> BlockSeries:
    """
    Psi(x - g) - Psi(x) = sum_{k>=1} Psi^(k)(x) (-g)^k / k!, known through `cap`.

    psi_prime is Psi' as an exact block series; Psi itself never enters, so l2 terms of Psi
    (whose derivative is a block) are handled without special cases.
    """
    cap = Fraction(cap)
    if psi_prime.is_zero:
        return BlockSeries.zero(cap)
    if g.is_zero:
        raise SeriesError("Taylor increment of a zero displacement")
    k_max = taylor_terms(psi_prime.order, g.order, cap)
    minus_g = -g
    derivative = psi_prime
    power = minus_g.truncate(cap - psi_prime.order)
    total = BlockSeries.zero(cap)
    for k in range(1, k_max + 1):
        if k > 1:
            derivative = derivative.derive()
            if derivative.is_zero and derivative.cutoff is None:
                break
            power = power.multiply(minus_g, cap - derivative.floor_order())
        term = derivative.multiply(power, cap).scale(Fraction(1, math.factorial(k)))
        total = total + term
    return total.truncate(cap)


class BlockKind(str, Enum):
    INFINITE = "infinite"
    INFINITESIMAL = "infinitesimal"
    ELL2 = "ell2"


@dataclass(frozen=True)
class IntegralBlock:
    """
    One block x^beta f(l) of a Fatou coordinate together with its generator (beta, q):
    d/dx (x^beta f(l)) = x^(beta-1) q(u). For beta == 0 the l2^-1 monomial produced by the
    l^1 term of q is split off into `rho`.
    """

    beta: Fraction
    q: RationalU
    expansion: TruncatedTransseries
    kind: BlockKind
    rho: Fraction = Fraction(0)
    rhs_order: Optional[Fraction] = None

    @property
    def alpha_int(self) -> Fraction:
        return self.beta

    @property
    def generator(self) -> tuple[Fraction, RationalU]:
        return (self.beta, self.q)

    def derivative_series(self) -> BlockSeries:
        """The block's derivative x^(beta-1) q(u), exact."""
        return BlockSeries.monomial(self.beta - 1, self.q)

    def summable_q(self) -> RationalU:
        """q without the l^1 term whose antiderivative is the l2^-1 monomial."""
        if self.rho == 0:
            return self.q
        return self.q + RationalU.u_power(-1, self.rho)

    @property
    def is_infinite(self) -> bool:
        return self.kind is BlockKind.INFINITE


def antiderive_block(beta, q: RationalU, N=None, M: Optional[int] = None) -> IntegralBlock:
    """
    Integrate x^(beta-1) q(u) termwise after expanding q(1/l) in l, keeping at most M
    l-terms per x-power (all of them when q is a Laurent polynomial in u).
    """
    beta = Fraction(beta)
    if N is not None and beta > Fraction(N):
        raise SeriesError(f"block order {beta} lies beyond the x-truncation {N}")
    if q.is_zero:
        raise SeriesError("cannot build an integral block from a zero generator")

    laurent = laurent_expand(q, M)
    if beta == 0 and laurent.ell_cutoff is not None:
        # make sure the l^1 coefficient is present
        n0 = q.degree_gap
        laurent = laurent_expand(q, max(M, 2 - n0))

    pieces = TruncatedTransseries.zero()
    rho = Fraction(0)
    for exponent, coefficient in laurent.terms:
        n = exponent.g1
        if beta == 0 and n == 1:
            rho = -coefficient
        term = antiderive_monomial(1 - beta, -n, M)
        pieces = add(pieces, scale(term, coefficient))
    # the window is per l2-power, so the l2^-1 monomial survives it
    expansion = pieces.with_cutoffs(None, M if laurent.ell_cutoff is not None else None)

    if beta < 0:
        kind = BlockKind.INFINITE
    elif beta > 0:
        kind = BlockKind.INFINITESIMAL
    elif any(e.g2 == 0 and e.g1 < 0 for e, _ in expansion.terms):
        kind = BlockKind.INFINITE
    elif rho != 0:
        kind = BlockKind.ELL2
    else:
        kind = BlockKind.INFINITESIMAL
    return IntegralBlock(beta=beta, q=q, expansion=expansion, kind=kind, rho=rho)


def taylor_increment(psi_block: IntegralBlock, g: TruncatedTransseries, N, M: Optional[int] = None) -> TruncatedTransseries:
    """Psi(f) - Psi for the single block Psi and f = x - g, through x-order N."""
    increment = taylor_increment_blocks(psi_block.derivative_series(), BlockSeries.from_transseries(g), N)
    return increment.to_transseries(M)
