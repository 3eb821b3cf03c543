"""
`fatou` command line.

    fatou formal -i germ.germ -N 6 [-M 8] [-o expansion.json]
    fatou verify -i germ.germ --grid 1e-3:1e-1:20:geom [--tol 1e-9] [-o residuals.csv]
    fatou eval   -i germ.germ --x 0.01 --x 0.05 [--constant c]
    fatou flow   --normal-form 1,2,0,1 | --xi "-x^2*l" [-N 5] [-o flow.json]

Exit codes: 0 ok, 1 usage/config, 2 parse error, 3 formal solver error, 4 numeric or verification failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

import mpmath

from . import pipeline, schemas
from .errors import FatouError
from .serializers import (
    fatou_document,
    fatou_value_response,
    fraction_text,
    residual_report_response,
    summary_lines,
)
from .settings import DEFAULT_SETTINGS, build_run_config
from .transseries import format_fraction, format_transseries

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fatou", description="Fatou coordinates of parabolic Dulac germs.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-i", "--input", help="germ file")
    common.add_argument("-N", type=int, help="x-truncation of the Fatou expansion")
    common.add_argument("-M", type=int, help="l-terms kept per block")
    common.add_argument("--tol", type=float)
    common.add_argument("--digits", type=int)
    common.add_argument("--grid", help="a:b:n[:geom|lin]")
    common.add_argument("-o", "--output")
    common.add_argument("--config", help="JSON file with run settings")
    common.add_argument("--max-blocks", dest="max_blocks", type=int)
    common.add_argument("--max-orbit", dest="max_orbit", type=int)
    common.add_argument("--orbit-blocks", dest="orbit_blocks", type=int,
                        help="infinitesimal blocks summed by quadrature before the orbit sum (default: chosen from alpha1)")
    common.add_argument("--constant", type=float, help="additive constant of the Fatou coordinate")
    common.add_argument("--log-level", dest="log_level", default=None)

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("formal", parents=[common], help="formal Fatou expansion")
    commands.add_parser("verify", parents=[common], help="numeric Abel residual on a grid")
    evaluate = commands.add_parser("eval", parents=[common], help="numeric Fatou coordinate")
    evaluate.add_argument("--x", dest="points", type=float, action="append", default=None)
    flow = commands.add_parser("flow", parents=[common], help="time-one map and generator cross-check")
    flow.add_argument("--xi", help="generator, e.g. -x^2*l")
    flow.add_argument("--normal-form", dest="normal_form", help="a,alpha,m,b")
    return parser


def _write(path: Optional[str], text: str) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_formal(config) -> int:
    source = pipeline.read_germ(config)
    _, fexp = pipeline.run_formal(source, config)
    if config.output:
        _write(config.output, fatou_document(fexp).model_dump_json(indent=2) + "\n")
    print("\n".join(summary_lines(fexp)))
    return 0


def cmd_verify(config) -> int:
    source = pipeline.read_germ(config)
    fexp, report = pipeline.run_verify(source, config)
    _write(config.output, report.to_csv())
    summary = residual_report_response(report)
    if config.output:
        summary_path = Path(config.output).with_suffix(".summary.json")
        payload = summary.model_dump(exclude={"rows"})
        summary_path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    slope = "n/a" if report.slope is None else f"{report.slope:.4f}"
    print(
        f"max residual: {summary.max_residual}  tol: {summary.tol}  slope: {slope}  "
        f"passed: {'yes' if report.passed else 'no'}",
        file=sys.stderr if not config.output else sys.stdout,
    )
    if not report.passed:
        logger.error("verification failed (within tolerance: %s, slope ok: %s)", report.within_tolerance, report.slope_ok)
        return 4
    return 0


def cmd_eval(config) -> int:
    source = pipeline.read_germ(config)
    points = list(config.points) or ([float(p) for p in config.grid.points()] if config.grid else [])
    if not points:
        raise FatouError("eval needs --x or --grid")
    values = pipeline.run_eval(source, config, points)
    responses = [fatou_value_response(v, config.digits) for v in values]
    if config.output:
        _write(config.output, schemas.EvalResponse(values=responses).model_dump_json(indent=2) + "\n")
    for value in responses:
        print(f"{value.x}  {value.value}")
    return 0


def cmd_flow(config) -> int:
    source = pipeline.read_germ(config) if config.input else None
    result = pipeline.run_flow(config, source)
    fexp = result.fatou
    if config.output:
        document = schemas.FlowResponse(
            generator=str(result.generator),
            germ=str(result.germ),
            rho=fraction_text(fexp.rho),
            equal=result.crosscheck.equal,
            through=fraction_text(result.crosscheck.through),
            expansion=fatou_document(fexp),
        )
        _write(config.output, document.model_dump_json(indent=2) + "\n")
    print(f"xi: {result.generator}")
    print(f"f0: {result.germ}")
    print(f"Psi0: {format_transseries(fexp.to_transseries())}")
    print(f"rho: {format_fraction(fexp.rho)}")
    print(f"cross-check: equal through x^{format_fraction(result.crosscheck.through)}")
    return 0


COMMANDS = {"formal": cmd_formal, "verify": cmd_verify, "eval": cmd_eval, "flow": cmd_flow}


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=(args.log_level or DEFAULT_SETTINGS["log_level"]).upper(),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    overrides = {key: value for key, value in vars(args).items() if key not in ("config", "log_level")}
    try:
        config = build_run_config(args.config, **overrides)
        with mpmath.workdps(config.digits):
            return COMMANDS[config.command](config)
    except FatouError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
