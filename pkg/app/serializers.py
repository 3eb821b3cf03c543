"""Convert engine objects to and from the pydantic documents."""

from __future__ import annotations

from fractions import Fraction
from typing import Optional

import mpmath

from . import schemas
from .blocks import IntegralBlock
from .errors import ParseError
from .formal import FatouExpansion
from .numeric import FatouValue, ResidualReport
from .transseries import ExponentTriple, TruncatedTransseries, format_fraction, format_transseries


def fraction_text(value) -> str:
    value = Fraction(value)
    return f"{value.numerator}/{value.denominator}"


def _optional_fraction(value) -> Optional[str]:
    return None if value is None else fraction_text(value)


def _read_fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"invalid rational {text!r} in document") from exc


def series_document(series: TruncatedTransseries) -> schemas.SeriesDocument:
    return schemas.SeriesDocument(
        terms=[
            schemas.TermDocument(x=fraction_text(e.g0), l=e.g1, l2=e.g2, coefficient=fraction_text(c))
            for e, c in series.terms
        ],
        x_cutoff=_optional_fraction(series.x_cutoff),
        ell_cutoff=series.ell_cutoff,
        text=format_transseries(series),
    )


def transseries_from_document(document: schemas.SeriesDocument) -> TruncatedTransseries:
    terms = [
        (ExponentTriple(_read_fraction(t.x), t.l, t.l2), _read_fraction(t.coefficient))
        for t in document.terms
    ]
    x_cutoff = _read_fraction(document.x_cutoff) if document.x_cutoff is not None else None
    return TruncatedTransseries.build(terms, x_cutoff, document.ell_cutoff)


def block_document(block: IntegralBlock) -> schemas.BlockDocument:
    return schemas.BlockDocument(
        beta=fraction_text(block.beta),
        kind=block.kind.value,
        q=str(block.q),
        q_numerator=[fraction_text(c) for c in block.q.numerator_coefficients()],
        q_denominator=[fraction_text(c) for c in block.q.denominator_coefficients()],
        rho=fraction_text(block.rho),
        rhs_order=_optional_fraction(block.rhs_order),
        expansion=series_document(block.expansion),
    )


def fatou_document(fexp: FatouExpansion) -> schemas.FatouExpansionDocument:
    residual = None
    if fexp.residual_order is not None:
        g0, g1, g2 = fexp.residual_order.as_tuple()
        residual = [fraction_text(g0), str(g1), str(g2)]
    return schemas.FatouExpansionDocument(
        source=fexp.source,
        alpha1=fraction_text(fexp.alpha1),
        N=fraction_text(fexp.N),
        M=fexp.M,
        rho=fraction_text(fexp.rho),
        critical_index=fexp.critical_index,
        lattice_generators=[fraction_text(g) for g in fexp.lattice.generators],
        known_through=fraction_text(fexp.known_through),
        residual_order=residual,
        residual_cutoff=_optional_fraction(fexp.residual_cutoff),
        constant=fraction_text(fexp.constant),
        blocks=[block_document(b) for b in fexp.blocks],
        text=format_transseries(fexp.to_transseries()),
    )


def _number(value, digits: Optional[int] = None) -> str:
    return mpmath.nstr(value, digits or mpmath.mp.dps, min_fixed=1, max_fixed=0, strip_zeros=False)


def fatou_value_response(value: FatouValue, digits: Optional[int] = None) -> schemas.FatouValueResponse:
    return schemas.FatouValueResponse(
        x=_number(value.x, digits),
        value=_number(value.value, digits),
        principal=_number(value.principal, digits),
        infinitesimal=_number(value.blocks + value.orbit.value, digits),
        orbit_terms=value.orbit.terms,
        orbit_method=value.orbit.method,
    )


def residual_report_response(report: ResidualReport) -> schemas.ResidualReportResponse:
    rows = [
        schemas.ResidualRow(
            x=_number(x, report.digits),
            f_x=_number(fx, report.digits),
            psi_x=_number(px, report.digits),
            psi_f_x=_number(pfx, report.digits),
            residual=_number(r, report.digits),
        )
        for x, fx, px, pfx, r in zip(
            report.grid, report.f_values, report.psi_values, report.psi_f_values, report.residuals
        )
    ]
    return schemas.ResidualReportResponse(
        rows=rows,
        max_residual=_number(report.max_residual, report.digits),
        tol=_number(report.tol, 6),
        slope=report.slope,
        r_squared=report.r_squared,
        passed=report.passed,
    )


def summary_lines(fexp: FatouExpansion) -> list[str]:
    """Human summary printed by `fatou formal`."""
    residual = "none" if fexp.residual_order is None else "x^{}*l^{}*l2^{}".format(
        format_fraction(fexp.residual_order.g0), fexp.residual_order.g1, fexp.residual_order.g2
    )
    if fexp.residual_order is None and fexp.residual_cutoff is not None:
        residual = f"none through x^{format_fraction(fexp.residual_cutoff)}"
    return [
        f"r0: {fexp.r0}",
        f"rho: {format_fraction(fexp.rho)}",
        f"lattice generators: {', '.join(format_fraction(g) for g in fexp.lattice.generators)}",
        f"residual order: {residual}",
        f"Psi: {format_transseries(fexp.to_transseries())}",
    ]
