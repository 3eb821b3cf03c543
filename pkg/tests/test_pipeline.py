"""Tests for germ loading and the orchestration shared by the CLI and the API."""

from fractions import Fraction

import pytest

from app.errors import SolverError
from app.parser import NumericSource, parse_germ_text
from app.pipeline import load_germ, parse_generator, run_flow
from app.rational import RationalU
from app.settings import RunConfig

QUOTIENT_GENERATOR = "-x^2/(1 - x + x*l)"


class TestLoadGerm:
    def test_ode_generator_with_quotient(self):
        """-x^2/(1 - x + x l) expands to -x^2 + (l - 1) x^3 + ... through N + 2*alpha1 - 1."""
        loaded = load_germ(parse_germ_text(f"# numeric: ode:{QUOTIENT_GENERATOR}\n"), 5)
        assert loaded.alpha1 == 2
        assert loaded.spec is None
        assert loaded.generator.cutoff == 8
        assert loaded.generator.block(2) == RationalU.constant(-1)
        assert loaded.generator.block(3) == RationalU.u_power(-1) - 1
        assert loaded.series.cutoff == 8
        assert loaded.numeric.kind == NumericSource.ODE

    def test_written_germ_depth(self):
        loaded = load_germ(parse_germ_text("x - x^2\n# numeric: x - x^2\n"), 4)
        assert loaded.alpha1 == 2
        assert loaded.spec.cutoff == 7
        assert loaded.numeric.kind == NumericSource.CLOSED_FORM

    def test_missing_trailer_falls_back_to_series(self):
        loaded = load_germ(parse_germ_text("x - x^2\n"), 3)
        assert loaded.numeric.kind == NumericSource.SERIES

    def test_truncation_below_alpha1(self):
        with pytest.raises(SolverError, match="must be at least alpha1"):
            load_germ(parse_germ_text("x - x^3\n"), 2)


class TestParseGenerator:
    def test_depth_follows_alpha(self):
        generator = parse_generator("-x^3/(1 + x)", 4)
        assert generator.order == 3
        assert generator.cutoff == 9
        assert generator.block(4) == RationalU.constant(1)

    @pytest.mark.parametrize("text, message", [
        ("0*x", "zero generator"),
        ("-x", "non-parabolic generator"),
    ])
    def test_rejected(self, text, message):
        with pytest.raises(SolverError, match=message):
            parse_generator(text, 4)


class TestRunFlow:
    def test_xi_with_quotient(self):
        result = run_flow(RunConfig(command="flow", xi=QUOTIENT_GENERATOR, N=5))
        assert result.crosscheck.equal
        assert result.generator.cutoff == 8
        assert result.expected_rho is None

    def test_ode_trailer(self):
        source = parse_germ_text(f"# numeric: ode:{QUOTIENT_GENERATOR}\n")
        result = run_flow(RunConfig(command="flow", N=5), source)
        assert result.crosscheck.equal
        assert result.generator.block(2) == RationalU.constant(Fraction(-1))
