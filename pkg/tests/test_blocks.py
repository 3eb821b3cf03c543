"""Tests for exact block series and integral blocks."""

from fractions import Fraction
from math import factorial

import pytest

from app.blocks import (
    BlockKind,
    BlockSeries,
    antiderive_block,
    leading_exponent,
    taylor_increment,
    taylor_increment_blocks,
    taylor_terms,
)
from app.errors import SeriesError
from app.parser import parse_transseries
from app.rational import RationalU
from app.transseries import ExponentTriple


def block_series(blocks, cutoff=None):
    return BlockSeries.build({order: RationalU.constant(c) for order, c in blocks.items()}, cutoff)


class TestBlockSeries:
    def test_build_merges_and_drops(self):
        series = BlockSeries.build([(1, RationalU.constant(2)), (1, RationalU.constant(-2)), (3, RationalU.constant(1))])
        assert series.orders() == [3]

    def test_cutoff_drops_high_orders(self):
        series = block_series({1: 1, 2: 1, 5: 1}, cutoff=3)
        assert series.orders() == [1, 2]
        assert series.cutoff == 3

    def test_zero_has_no_order(self):
        with pytest.raises(SeriesError, match="no leading term"):
            BlockSeries.zero().order

    def test_floor_order_of_vanishing_series(self):
        assert BlockSeries.zero(4).floor_order() == 4

    def test_product_cutoff(self):
        """(x + x^2 + O(x^>3)) * x is known through x^4."""
        product = block_series({1: 1, 2: 1}, cutoff=3) * BlockSeries.identity()
        assert product.cutoff == 4
        assert product.orders() == [2, 3]

    def test_blocks_keep_log_structure(self):
        """(x u)(x / u) = x^2 exactly."""
        a = BlockSeries.monomial(1, RationalU.u_power(1))
        b = BlockSeries.monomial(1, RationalU.u_power(-1))
        assert a * b == BlockSeries.monomial(2)

    def test_inverse_geometric(self):
        series = BlockSeries.identity() - BlockSeries.monomial(2)
        assert series.inverse(3) == block_series({-1: 1, 0: 1, 1: 1, 2: 1, 3: 1}, cutoff=3)

    def test_inverse_of_single_block_is_exact(self):
        series = BlockSeries.monomial(1, RationalU.u_power(1))
        assert series.inverse() == BlockSeries.monomial(-1, RationalU.u_power(-1))

    def test_inverse_needs_cutoff(self):
        with pytest.raises(SeriesError, match="needs a cutoff"):
            (BlockSeries.identity() - BlockSeries.monomial(2)).inverse()

    def test_power(self):
        series = BlockSeries.identity() + BlockSeries.monomial(2)
        assert series.power(2) == block_series({2: 1, 3: 2, 4: 1})

    @pytest.mark.parametrize("order, q, expected_order, expected_q", [
        (-1, RationalU.constant(1), -2, RationalU.constant(-1)),
        (0, RationalU.u_power(1), -1, RationalU.constant(-1)),
        (1, RationalU.u_power(-1), 0, RationalU.from_coefficients([1, 1], [0, 0, 1])),
    ])
    def test_derive(self, order, q, expected_order, expected_q):
        """d/dx [x^p q(u)] = x^(p-1) (p q - q')."""
        assert BlockSeries.monomial(order, q).derive() == BlockSeries.monomial(expected_order, expected_q)

    def test_same_through(self):
        a = block_series({1: 1, 2: -1, 3: 5})
        b = block_series({1: 1, 2: -1, 3: 7})
        assert a.same_through(b, 2)
        assert not a.same_through(b, 3)

    def test_to_transseries(self):
        series = BlockSeries.monomial(2, RationalU.polynomial([1, 1]))
        assert series.to_transseries() == parse_transseries("x^2*l^-1 + x^2")

    def test_from_transseries(self):
        t = parse_transseries("x - 3*x^2*l^-2 + x^2")
        series = BlockSeries.from_transseries(t)
        assert series.block(2) == RationalU.polynomial([1, 0, -3])
        assert series.to_transseries() == t

    def test_from_transseries_rejects_ell2(self):
        with pytest.raises(SeriesError):
            BlockSeries.from_transseries(parse_transseries("x*l2"))

    def test_str_shows_cutoff(self):
        assert "O(x^>3)" in str(block_series({1: 1}, cutoff=3))
        assert str(BlockSeries.zero()) == "0"

    def test_leading_exponent(self):
        assert leading_exponent(RationalU.u_power(-1), 1) == ExponentTriple(1, 1)


class TestTaylorIncrement:
    @pytest.mark.parametrize("psi_order, g_order, cap, expected", [
        (-2, 3, 6, 3),
        (-2, 2, 5, 6),
        (0, 2, 1, 0),
        (Fraction(-3, 2), Fraction(5, 2), 4, 3),
    ])
    def test_taylor_terms(self, psi_order, g_order, cap, expected):
        assert taylor_terms(Fraction(psi_order), Fraction(g_order), Fraction(cap)) == expected

    def test_taylor_terms_rejects_order_one(self):
        with pytest.raises(SeriesError, match="parabolic"):
            taylor_terms(Fraction(-2), Fraction(1), Fraction(5))

    def test_rational_germ_increment_is_one(self, rational_germ):
        """Psi = 1/x satisfies Psi(x/(1+x)) - Psi(x) = 1 exactly."""
        psi_prime = BlockSeries.monomial(-2, -1)
        increment = taylor_increment_blocks(psi_prime, rational_germ.displacement(), 5)
        assert increment.orders() == [0]
        assert increment.block(0) == RationalU.constant(1)
        assert increment.cutoff == 5

    def test_block_increment_as_transseries(self, rational_germ):
        """The single block 1/x of x/(1+x) increments by exactly 1."""
        block = antiderive_block(-1, RationalU.constant(-1))
        increment = taylor_increment(block, rational_germ.displacement().to_transseries(), 5)
        assert increment.as_dict() == {ExponentTriple(0): Fraction(1)}
        assert increment.x_cutoff == 5

    def test_zero_derivative(self, quadratic_germ):
        increment = taylor_increment_blocks(BlockSeries.zero(), quadratic_germ.displacement(), 3)
        assert increment.is_zero

    def test_zero_displacement(self):
        with pytest.raises(SeriesError):
            taylor_increment_blocks(BlockSeries.monomial(-2, -1), BlockSeries.zero(), 3)


class TestAntideriveBlock:
    def test_inverse_x(self):
        block = antiderive_block(-1, RationalU.constant(-1))
        assert block.expansion == parse_transseries("x^-1")
        assert block.kind is BlockKind.INFINITE
        assert block.rho == 0

    def test_factorial_block(self):
        """d/dx(x^-1 f(l)) = -x^-2 l gives f = sum (n-1)! l^n."""
        block = antiderive_block(-1, RationalU.u_power(-1, -1), M=5)
        assert [block.expansion.coefficient(-1, n) for n in range(1, 6)] == [factorial(n - 1) for n in range(1, 6)]
        assert block.kind is BlockKind.INFINITE

    def test_log_block_is_infinite(self):
        """int x^-1 = log x = -l^-1."""
        block = antiderive_block(0, RationalU.constant(1))
        assert block.expansion == parse_transseries("-l^-1")
        assert block.kind is BlockKind.INFINITE

    def test_ell2_block(self):
        """int x^-1 l = -l2^-1 is split off into rho."""
        block = antiderive_block(0, RationalU.u_power(-1))
        assert block.kind is BlockKind.ELL2
        assert block.rho == -1
        assert block.expansion == parse_transseries("-l2^-1")
        assert block.summable_q().is_zero

    def test_ell2_monomial_survives_window(self):
        """u^5/(u-1) has l^1 coefficient 1; the l-window must keep the l2^-1 term next to rho."""
        q = RationalU.from_coefficients([0, 0, 0, 0, 0, 1], [-1, 1])
        block = antiderive_block(0, q, M=3)
        assert block.rho == -1
        assert block.expansion.coefficient(0, 0, -1) == block.rho
        assert [block.expansion.coefficient(0, n) for n in (-5, -4, -3)] == [Fraction(-1, 5), Fraction(-1, 4), Fraction(-1, 3)]
        assert block.expansion.coefficient(0, -2) == 0
        assert block.kind is BlockKind.INFINITE

    def test_infinitesimal_block(self):
        block = antiderive_block(1, RationalU.constant(Fraction(1, 2)))
        assert block.expansion == parse_transseries("1/2*x")
        assert block.kind is BlockKind.INFINITESIMAL
        assert block.derivative_series() == BlockSeries.constant(Fraction(1, 2))

    def test_beyond_truncation(self):
        with pytest.raises(SeriesError, match="beyond the x-truncation"):
            antiderive_block(5, RationalU.constant(1), N=4)

    def test_zero_generator(self):
        with pytest.raises(SeriesError):
            antiderive_block(1, RationalU.constant(0))
