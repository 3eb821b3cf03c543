"""
Formal Fatou coordinates of parabolic germs.

The solver works block by block: with f = x - g and the right-hand side delta (initially 1),
the leading block x^beta R(u) of delta fixes Psi' = x^(beta - alpha1) * (-R / G1)(u), where
x^alpha1 G1(u) is the leading block of g. Its Taylor increment Psi(f) - Psi cancels that block
and leaves a strictly higher right-hand side. Blocks of Psi are stored with their generator so
they can later be summed numerically.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Union

from .blocks import (
    BlockKind,
    BlockSeries,
    IntegralBlock,
    antiderive_block,
    taylor_increment_blocks,
)
from .errors import SolverError
from .parser import DulacGermSpec
from .rational import RationalU, lcm_denominator
from .transseries import ExponentTriple, TruncatedTransseries, add, min_cutoff

logger = logging.getLogger(__name__)

DEFAULT_MAX_BLOCKS = 200

Germ = Union[DulacGermSpec, BlockSeries]


@dataclass(frozen=True)
class SupportLattice:
    """Nonnegative integer span of `generators`; `members` are the orders observed so far."""

    generators: tuple[Fraction, ...]
    members: tuple[Fraction, ...] = ()

    def contains(self, value) -> bool:
        value = Fraction(value)
        if value < 0:
            return False
        if value == 0:
            return True
        if not self.generators:
            return False
        scale = lcm_denominator(list(self.generators) + [value])
        target = int(value * scale)
        coins = sorted({int(g * scale) for g in self.generators})
        reachable = [False] * (target + 1)
        reachable[0] = True
        for amount in range(1, target + 1):
            reachable[amount] = any(c <= amount and reachable[amount - c] for c in coins)
        return reachable[target]

    def observe(self, value) -> "SupportLattice":
        value = Fraction(value)
        if not self.contains(value):
            raise SolverError(f"order {value} is outside the support lattice {list(map(str, self.generators))}")
        if value in self.members:
            return self
        return SupportLattice(self.generators, self.members + (value,))


def lattice_from_orders(orders) -> SupportLattice:
    """Generators {a_i - a_1} and {a_i - 1} over the displacement orders a_i, positive and deduplicated."""
    orders = sorted(Fraction(o) for o in orders)
    lead = orders[0]
    generators = {a - lead for a in orders} | {a - 1 for a in orders}
    return SupportLattice(tuple(sorted(g for g in generators if g > 0)))


def displacement(f: Germ) -> BlockSeries:
    """g = x - f, checked to be parabolic (x-order > 1)."""
    g = f.displacement()
    if g.is_zero:
        raise SolverError("not parabolic: the germ is the identity")
    if g.order <= 1:
        raise SolverError(f"not parabolic: x - f has x-order {g.order}, needs > 1")
    return g


def support_lattice(f: Germ) -> SupportLattice:
    """Additive lattice spanned by the x-orders of x - f, which holds every block order."""
    return lattice_from_orders(displacement(f).orders())


@dataclass(frozen=True)
class FatouExpansion:
    blocks: tuple[IntegralBlock, ...]
    rho: Fraction
    critical_index: int
    lattice: SupportLattice
    alpha1: Fraction
    N: Fraction
    M: Optional[int]
    known_through: Fraction
    residual_order: Optional[ExponentTriple] = None
    residual_cutoff: Optional[Fraction] = None
    constant: Fraction = Fraction(0)
    source: str = field(default="germ", compare=False)

    @property
    def r0(self) -> int:
        return self.critical_index

    @property
    def principal_blocks(self) -> tuple[IntegralBlock, ...]:
        return self.blocks[: self.critical_index]

    @property
    def infinitesimal_blocks(self) -> tuple[IntegralBlock, ...]:
        return self.blocks[self.critical_index:]

    def block_at(self, beta) -> Optional[IntegralBlock]:
        for block in self.blocks:
            if block.beta == Fraction(beta):
                return block
        return None

    def derivative_series(self, blocks=None) -> BlockSeries:
        """Psi' as an exact block series."""
        total = BlockSeries.zero()
        for block in self.blocks if blocks is None else blocks:
            total = total + block.derivative_series()
        return total

    def generators(self) -> list[tuple[Fraction, RationalU]]:
        return [block.generator for block in self.blocks]

    def to_transseries(self) -> TruncatedTransseries:
        total = TruncatedTransseries.constant(self.constant)
        for block in self.blocks:
            total = add(total, block.expansion)
        return total.with_cutoffs(self.known_through)

    def with_constant(self, constant) -> "FatouExpansion":
        return replace(self, constant=Fraction(constant))


def _critical_index(blocks) -> int:
    count = 0
    for block in blocks:
        if block.beta < 0 or (block.beta == 0 and block.kind in (BlockKind.INFINITE, BlockKind.ELL2)):
            count += 1
        else:
            break
    return count


def _rho(blocks) -> Fraction:
    return sum((block.rho for block in blocks), Fraction(0))


def solve_block_step(delta, f: Germ, N, M: Optional[int] = None) -> tuple[IntegralBlock, BlockSeries]:
    """
    One step of the block algorithm: solve for the block of Psi that cancels the leading
    block of delta and return it with the updated right-hand side delta - (Psi_b(f) - Psi_b).
    """
    if isinstance(delta, TruncatedTransseries):
        delta = BlockSeries.from_transseries(delta)
    if delta.is_zero:
        raise SolverError("the right-hand side is zero: nothing to solve")
    N = Fraction(N)
    g = displacement(f)
    alpha1, g_lead = g.leading_block
    beta, r = delta.leading_block
    alpha_int = beta - alpha1 + 1
    if alpha_int > N:
        raise SolverError(f"RHS order exceeded truncation: block order {alpha_int} > N = {N}")

    q = -r / g_lead
    block = replace(antiderive_block(alpha_int, q, N, M), rhs_order=beta)
    rhs_cap = N + alpha1 - 1
    increment = taylor_increment_blocks(block.derivative_series(), g, rhs_cap)
    updated = delta.truncate(rhs_cap) - increment
    if not updated.block(beta).is_zero and (updated.cutoff is None or beta <= updated.cutoff):
        raise SolverError(f"leading block x^{beta} did not cancel")
    logger.debug("block step: rhs order %s -> block order %s (%s)", beta, alpha_int, block.kind.value)
    poles = q.positive_real_poles()
    if poles:
        # Formal expansion is unaffected; numeric evaluation must avoid x = exp(-u).
        logger.info("block x^%s has generator poles at u = %s", alpha_int, ", ".join(str(p) for p in poles))
    return block, updated


def abel_residual(fexp: FatouExpansion, f: Germ, cap=None) -> BlockSeries:
    """Symbolic residual sum_k Psi^(k) (-g)^k / k! - 1."""
    g = displacement(f)
    if cap is None:
        cap = fexp.N + 2 * (g.order - 1)
    increment = taylor_increment_blocks(fexp.derivative_series(), g, cap)
    return increment - 1


def _residual_fields(residual: BlockSeries) -> tuple[Optional[ExponentTriple], Optional[Fraction]]:
    if residual.is_zero:
        return None, residual.cutoff
    order, q = residual.leading_block
    return ExponentTriple(order, q.degree_gap), residual.cutoff


def formal_fatou(f: Germ, N, M: Optional[int] = 8, max_blocks: int = DEFAULT_MAX_BLOCKS) -> FatouExpansion:
    """
    Formal Fatou coordinate of f through x-order N, with at most M l-terms per block.

    The right-hand side is resolved through order N + alpha1 - 1; f must be known through
    N + 2*alpha1 - 1 for the full range, otherwise the expansion stops early with a warning.
    """
    N = Fraction(N)
    g = displacement(f)
    alpha1 = g.order
    rhs_cap = N + alpha1 - 1
    lattice = support_lattice(f)

    delta = BlockSeries.constant(1)
    blocks: list[IntegralBlock] = []
    while not delta.is_zero and delta.order <= rhs_cap:
        if len(blocks) >= max_blocks:
            raise SolverError(f"did not terminate in budget: more than {max_blocks} blocks")
        lattice = lattice.observe(delta.order)
        block, delta = solve_block_step(delta, f, N, M)
        blocks.append(block)

    rhs_known = min_cutoff(delta.cutoff, rhs_cap)
    known_through = min(N, rhs_known - alpha1 + 1)
    if known_through < N:
        logger.warning(
            "germ truncation limits the Fatou expansion to x-order %s (requested %s)", known_through, N
        )

    expansion = FatouExpansion(
        blocks=tuple(blocks),
        rho=_rho(blocks),
        critical_index=_critical_index(blocks),
        lattice=lattice,
        alpha1=alpha1,
        N=N,
        M=M,
        known_through=known_through,
    )
    residual_order, residual_cutoff = _residual_fields(abel_residual(expansion, f))
    logger.info(
        "formal Fatou coordinate: %d blocks, r0=%d, rho=%s", len(blocks), expansion.critical_index, expansion.rho
    )
    return replace(expansion, residual_order=residual_order, residual_cutoff=residual_cutoff)


# --- vector fields ---

def _as_blocks(xi) -> BlockSeries:
    if isinstance(xi, TruncatedTransseries):
        return BlockSeries.from_transseries(xi)
    return xi


def _check_generator(xi: BlockSeries) -> Fraction:
    if xi.is_zero:
        raise SolverError("zero generator")
    alpha = xi.order
    if alpha <= 1:
        raise SolverError(f"non-parabolic generator: x-order {alpha} must exceed 1")
    return alpha


def time_one_map(xi, N) -> BlockSeries:
    """Exp(xi d/dx) id = x + sum_k (xi d/dx)^k x / k!, through x-order N."""
    xi = _as_blocks(xi)
    _check_generator(xi)
    N = Fraction(N)
    term = BlockSeries.identity()
    total = term
    k = 0
    while True:
        k += 1
        term = xi.multiply(term.derive(), N).scale(Fraction(1, k))
        if term.is_zero:
            break
        total = total + term
    return total.truncate(N)


def lie_exp_time_one(xi, N, M: Optional[int] = None) -> TruncatedTransseries:
    """Time-one map of the vector field xi d/dx as a transseries."""
    return time_one_map(xi, N).to_transseries(M)


def fatou_of_generator(xi, N, M: Optional[int] = 8) -> FatouExpansion:
    """Psi = formal antiderivative of 1/xi, block by block."""
    xi = _as_blocks(xi)
    alpha = _check_generator(xi)
    N = Fraction(N)
    reciprocal = xi.inverse(N - 1)
    lattice = lattice_from_orders(xi.orders())
    blocks = []
    for order, q in reciprocal.blocks:
        lattice = lattice.observe(order + alpha)
        blocks.append(replace(antiderive_block(order + 1, q, N, M), rhs_order=order + alpha))
    known_through = min(N, reciprocal.cutoff + 1) if reciprocal.cutoff is not None else N
    flow_residual = xi.multiply(reciprocal) - 1
    residual_order, residual_cutoff = _residual_fields(flow_residual)
    return FatouExpansion(
        blocks=tuple(blocks),
        rho=_rho(blocks),
        critical_index=_critical_index(blocks),
        lattice=lattice,
        alpha1=alpha,
        N=N,
        M=M,
        known_through=known_through,
        residual_order=residual_order,
        residual_cutoff=residual_cutoff,
        source="generator",
    )


def normal_form_generator(a, alpha, m: int, b, cutoff) -> BlockSeries:
    """
    xi0 = a x^alpha l^m / (1 + (a alpha / 2) x^(alpha-1) l^m - (a m / 2 + b / a) x^(alpha-1) l^(m+1)),
    whose Fatou coordinate carries (m/2 + b/a^2) l2^-1.
    """
    a, alpha, b = Fraction(a), Fraction(alpha), Fraction(b)
    if a == 0:
        raise SolverError("normal form needs a != 0")
    if alpha <= 1:
        raise SolverError("normal form generators need alpha > 1")
    cutoff = Fraction(cutoff)
    bracket = RationalU.u_power(-m, a * alpha / 2) - RationalU.u_power(-m - 1, a * m / 2 + b / a)
    denominator = BlockSeries.constant(1) + BlockSeries.monomial(alpha - 1, bracket)
    numerator = BlockSeries.monomial(alpha, RationalU.u_power(-m, a))
    return numerator.multiply(denominator.inverse(cutoff - alpha), cutoff)


def normal_form_rho(a, m: int, b) -> Fraction:
    return Fraction(m, 2) + Fraction(b) / Fraction(a) ** 2


@dataclass(frozen=True)
class CrossCheck:
    equal: bool
    through: Fraction
    first_difference: Optional[Fraction]
    germ: BlockSeries
    from_germ: FatouExpansion
    from_generator: FatouExpansion


def crosscheck_generator(xi, N, M: Optional[int] = 8) -> CrossCheck:
    """Compare formal_fatou(time-one map of xi) with fatou_of_generator(xi) generator by generator."""
    xi = _as_blocks(xi)
    alpha = _check_generator(xi)
    N = Fraction(N)
    germ = time_one_map(xi, N + 2 * alpha - 1)
    from_germ = formal_fatou(germ, N, M)
    from_generator = fatou_of_generator(xi, N, M)
    through = min(from_germ.known_through, from_generator.known_through)
    first_difference = None
    left = {b.beta: b.q for b in from_germ.blocks if b.beta <= through}
    right = {b.beta: b.q for b in from_generator.blocks if b.beta <= through}
    for beta in sorted(set(left) | set(right)):
        if left.get(beta) != right.get(beta):
            first_difference = beta
            break
    return CrossCheck(
        equal=first_difference is None,
        through=through,
        first_difference=first_difference,
        germ=germ,
        from_germ=from_germ,
        from_generator=from_generator,
    )
