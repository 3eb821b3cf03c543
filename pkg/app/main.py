"""
Fatou coordinate service

HTTP front end for the formal solver, the flow cross-check, numeric evaluation and
Abel-equation verification of parabolic Dulac germs.
"""

from fastapi import FastAPI, HTTPException

from . import pipeline, schemas
from .errors import FatouError, ParseError
from .parser import parse_germ_text
from .serializers import (
    fatou_document,
    fatou_value_response,
    fraction_text,
    residual_report_response,
)
from .settings import GridSpec, build_run_config

app = FastAPI(
    title="Fatou Coordinates",
    description="Formal and numeric Fatou coordinates of parabolic Dulac germs",
    version="1.0.0",
)


def _http_error(exc: FatouError) -> HTTPException:
    status = 422 if isinstance(exc, ParseError) else 400
    return HTTPException(status_code=status, detail=str(exc))


# --- Health Check ---

@app.get("/api/health")
async def health_check():
    """Health check endpoint for container orchestration."""
    return {"status": "healthy"}


# --- Formal ---

@app.post("/api/formal", response_model=schemas.FormalResponse)
async def formal(request: schemas.FormalRequest):
    try:
        config = build_run_config(command="formal", N=request.N, M=request.M)
        loaded, fexp = pipeline.run_formal(parse_germ_text(request.germ), config)
    except FatouError as exc:
        raise _http_error(exc)
    return schemas.FormalResponse(germ=str(loaded.series), expansion=fatou_document(fexp))


@app.post("/api/flow", response_model=schemas.FlowResponse)
async def flow(request: schemas.FlowRequest):
    if not request.xi and not request.normal_form:
        raise HTTPException(status_code=422, detail="Provide xi or normal_form")
    try:
        config = build_run_config(command="flow", N=request.N, M=request.M, xi=request.xi, normal_form=request.normal_form)
        result = pipeline.run_flow(config)
    except FatouError as exc:
        raise _http_error(exc)
    return schemas.FlowResponse(
        generator=str(result.generator),
        germ=str(result.germ),
        rho=fraction_text(result.fatou.rho),
        equal=result.crosscheck.equal,
        through=fraction_text(result.crosscheck.through),
        expansion=fatou_document(result.fatou),
    )


# --- Numeric ---

@app.post("/api/eval", response_model=schemas.EvalResponse)
async def evaluate(request: schemas.EvalRequest):
    try:
        config = build_run_config(
            command="eval",
            N=request.N,
            M=request.M,
            tol=request.tol,
            digits=request.digits,
            constant=request.constant,
            orbit_blocks=request.orbit_blocks,
            points=request.points,
        )
        values = pipeline.run_eval(parse_germ_text(request.germ), config, config.points)
    except FatouError as exc:
        raise _http_error(exc)
    return schemas.EvalResponse(values=[fatou_value_response(v, request.digits) for v in values])


@app.post("/api/verify", response_model=schemas.ResidualReportResponse)
async def verify(request: schemas.VerifyRequest):
    try:
        config = build_run_config(
            command="verify",
            N=request.N,
            M=request.M,
            tol=request.tol,
            digits=request.digits,
            constant=request.constant,
            orbit_blocks=request.orbit_blocks,
            grid=GridSpec.parse(request.grid),
        )
        _, report = pipeline.run_verify(parse_germ_text(request.germ), config)
    except FatouError as exc:
        raise _http_error(exc)
    return residual_report_response(report)
