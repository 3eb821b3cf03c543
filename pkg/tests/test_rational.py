"""Tests for rational functions of u."""

from fractions import Fraction

import pytest

from app.errors import SeriesError
from app.rational import ONE, ZERO, RationalU, laurent_coefficients, lcm_denominator


class TestRationalU:
    """Normalization and arithmetic."""

    def test_reduces_common_factors(self):
        """(u^2 - 1)/(u - 1) reduces to u + 1."""
        q = RationalU.from_coefficients([-1, 0, 1], [-1, 1])
        assert q.is_polynomial
        assert q == RationalU.polynomial([1, 1])

    def test_denominator_is_monic(self):
        q = RationalU.from_coefficients([3], [0, 2])
        assert q.denominator_coefficients() == [0, 1]
        assert q.numerator_coefficients() == [Fraction(3, 2)]

    def test_u_power_negative_is_l(self):
        """u^-1 has degree gap 1 (it is l)."""
        ell = RationalU.u_power(-1)
        assert ell.degree_gap == 1
        assert ell * RationalU.u_power(1) == ONE

    def test_arithmetic(self):
        a = RationalU.polynomial([1, 1])
        b = RationalU.u_power(-1)
        assert (a + b) - b == a
        assert (a / a) == 1
        assert a ** 2 == RationalU.polynomial([1, 2, 1])
        assert a ** -1 * a == ONE

    def test_derivative(self):
        """d/du (1/u) = -1/u^2."""
        assert RationalU.u_power(-1).derivative() == RationalU.u_power(-2, -1)

    def test_zero_division(self):
        with pytest.raises(SeriesError):
            RationalU.polynomial([1]) / ZERO

    def test_zero_has_no_degree_gap(self):
        with pytest.raises(SeriesError):
            ZERO.degree_gap

    def test_hash_matches_equality(self):
        a = RationalU.from_coefficients([2, 2], [1, 1])
        assert hash(a) == hash(RationalU.constant(2))

    def test_positive_real_poles(self):
        """1/((u - 2)(u + 1)) has a single positive pole at u = 2."""
        q = RationalU.from_coefficients([1], [-2, -1, 1])
        assert q.positive_real_poles() == [2]
        assert RationalU.polynomial([1, 1]).positive_real_poles() == []


class TestLaurentCoefficients:
    """Expansion of q(1/l) in powers of l."""

    def test_polynomial_in_u(self):
        """1 + u = l^-1 + 1."""
        n0, coefficients = laurent_coefficients(RationalU.polynomial([1, 1]), 2)
        assert n0 == -1
        assert coefficients == [1, 1]

    def test_geometric(self):
        """1/(u - 1) = l/(1 - l) = l + l^2 + l^3 + ..."""
        n0, coefficients = laurent_coefficients(RationalU.from_coefficients([1], [-1, 1]), 4)
        assert n0 == 1
        assert coefficients == [1, 1, 1, 1]

    def test_start_pads_with_zeros(self):
        n0, coefficients = laurent_coefficients(RationalU.u_power(-2), 1, start=0)
        assert n0 == 0
        assert coefficients == [0, 0, 1]


def test_lcm_denominator():
    assert lcm_denominator([Fraction(1, 2), Fraction(1, 3), 1]) == 6
