"""
Shared orchestration for the CLI and the HTTP API: germ loading, formal solve, numeric
evaluation, verification and the flow cross-check.
"""

from __future__ import annotations

import logging
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Optional, Sequence

import mpmath

from .blocks import BlockSeries
from .errors import FatouError, ParseError, SolverError
from .formal import (
    CrossCheck,
    FatouExpansion,
    crosscheck_generator,
    formal_fatou,
    normal_form_generator,
    normal_form_rho,
    time_one_map,
)
from .numeric import FatouValue, GermEvaluator, ResidualReport, fatou_components, verify_abel
from .parser import (
    DulacGermSpec,
    GermFile,
    NumericSource,
    load_germ_file,
    parse_block_series,
    parse_dulac,
)
from .settings import RunConfig

logger = logging.getLogger(__name__)


@contextmanager
def precision(digits: int) -> Iterator[None]:
    with mpmath.workdps(digits):
        yield


@dataclass(frozen=True)
class LoadedGerm:
    """The formal germ (a Dulac spec when written out, a time-one map when only ode: is given)."""

    series: BlockSeries
    numeric: NumericSource
    alpha1: Fraction
    spec: Optional[DulacGermSpec] = None
    generator: Optional[BlockSeries] = None


def _check_truncation(N, alpha1: Fraction) -> Fraction:
    N = Fraction(N)
    if N < alpha1:
        raise SolverError(f"truncation N = {N} must be at least alpha1 = {alpha1}")
    return N


def parse_generator(text: str, N) -> BlockSeries:
    """Parse xi through x-order N + 2*alpha - 1, the depth its time-one map needs."""
    provisional = parse_block_series(text, Fraction(N) + 1)
    if provisional.is_zero:
        raise SolverError("zero generator")
    alpha = provisional.order
    if alpha <= 1:
        raise SolverError(f"non-parabolic generator: x-order {alpha} must exceed 1")
    N = _check_truncation(N, alpha)
    return parse_block_series(text, N + 2 * alpha - 1)


def load_germ(source: GermFile, N) -> LoadedGerm:
    """
    Parse the formal germ through order N + 2*alpha1 - 1, the depth the solver consumes.
    A file with only `# numeric: ode:<xi>` gets the time-one map of xi as formal germ.
    """
    if source.expression is None:
        generator = parse_generator(source.numeric.expression, N)
        alpha1 = generator.order
        series = time_one_map(generator, Fraction(N) + 2 * alpha1 - 1)
        return LoadedGerm(series, source.numeric, alpha1, generator=generator)

    provisional = parse_dulac(source.expression, Fraction(N) + 1)
    alpha1 = provisional.displacement().order
    N = _check_truncation(N, alpha1)
    numeric = source.numeric or NumericSource(NumericSource.SERIES)
    spec = parse_dulac(source.expression, N + 2 * alpha1 - 1, numeric)
    return LoadedGerm(spec.series(), numeric, alpha1, spec=spec)


def read_germ(config: RunConfig) -> GermFile:
    if not config.input:
        raise ParseError("no input germ given")
    try:
        return load_germ_file(config.input)
    except OSError as exc:
        raise FatouError(f"cannot read {config.input}: {exc}") from exc


def build_evaluator(loaded: LoadedGerm, tol=None) -> GermEvaluator:
    if loaded.numeric.kind == NumericSource.SERIES:
        logger.info("no numeric trailer: evaluating the truncated series")
    return GermEvaluator.from_source(loaded.numeric, germ=loaded.series, ode_tol=tol)


def solve(loaded: LoadedGerm, config: RunConfig) -> FatouExpansion:
    return formal_fatou(loaded.series, config.N, config.M, config.max_blocks)


def run_formal(source: GermFile, config: RunConfig) -> tuple[LoadedGerm, FatouExpansion]:
    loaded = load_germ(source, config.N)
    fexp = solve(loaded, config)
    logger.info("formal: r0=%d rho=%s generators=%s", fexp.r0, fexp.rho, fexp.lattice.generators)
    return loaded, fexp


def run_eval(source: GermFile, config: RunConfig, points: Sequence) -> list[FatouValue]:
    with precision(config.digits):
        loaded, fexp = run_formal(source, config)
        germ = build_evaluator(loaded)
        values = []
        for x in points:
            x = mpmath.mpf(x)
            germ.check_domain(x, x, samples=1)
            values.append(
                fatou_components(
                    germ,
                    fexp,
                    x,
                    config.tol,
                    anchor=config.anchor,
                    constant=config.constant,
                    orbit_blocks=config.orbit_blocks,
                    max_orbit=config.max_orbit,
                )
            )
        logger.info("eval: %d points", len(values))
        return values


def run_verify(source: GermFile, config: RunConfig) -> tuple[FatouExpansion, ResidualReport]:
    if config.grid is None:
        raise FatouError("verify needs a grid (--grid a:b:n:geom)")
    with precision(config.digits):
        loaded, fexp = run_formal(source, config)
        germ = build_evaluator(loaded)
        report = verify_abel(
            germ,
            fexp,
            config.grid.points(),
            config.tol,
            anchor=config.anchor,
            constant=config.constant,
            orbit_blocks=config.orbit_blocks,
            max_orbit=config.max_orbit,
        )
        return fexp, report


@dataclass(frozen=True)
class FlowResult:
    generator: BlockSeries
    crosscheck: CrossCheck
    expected_rho: Optional[Fraction] = None

    @property
    def germ(self) -> BlockSeries:
        return self.crosscheck.germ

    @property
    def fatou(self) -> FatouExpansion:
        return self.crosscheck.from_generator


def parse_normal_form(text: str) -> tuple[Fraction, Fraction, int, Fraction]:
    """'a,alpha,m,b' with rational entries and integer m."""
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 4:
        raise ParseError(f"normal form needs a,alpha,m,b, got {text!r}")
    try:
        a, alpha, m, b = Fraction(parts[0]), Fraction(parts[1]), Fraction(parts[2]), Fraction(parts[3])
    except ValueError as exc:
        raise ParseError(f"normal form entries must be rationals: {text!r}") from exc
    if m.denominator != 1:
        raise ParseError(f"normal form exponent m must be an integer, got {m}")
    return a, alpha, int(m), b


def run_flow(config: RunConfig, source: Optional[GermFile] = None) -> FlowResult:
    """Time-one map of a generator plus the generator/germ Fatou cross-check."""
    expected_rho = None
    if config.normal_form:
        a, alpha, m, b = parse_normal_form(config.normal_form)
        generator = normal_form_generator(a, alpha, m, b, Fraction(config.N) + 2 * alpha)
        expected_rho = normal_form_rho(a, m, b)
    elif config.xi:
        generator = parse_generator(config.xi, config.N)
    elif source is not None and source.numeric is not None and source.numeric.kind == NumericSource.ODE:
        generator = parse_generator(source.numeric.expression, config.N)
    else:
        raise FatouError("flow needs --normal-form, --xi or an input with an ode: trailer")

    check = crosscheck_generator(generator, config.N, config.M)
    if not check.equal:
        raise SolverError(f"cross-check failed: generators differ at x-order {check.first_difference}")
    if expected_rho is not None and check.from_generator.rho != expected_rho:
        raise SolverError(f"normal form rho {check.from_generator.rho} differs from {expected_rho}")
    logger.info("flow: cross-check agrees through x-order %s, rho=%s", check.through, check.from_generator.rho)
    return FlowResult(generator, check, expected_rho)
