"""Pydantic documents for the machine output format and the HTTP API."""

from typing import Optional

from pydantic import BaseModel, Field


# --- Series documents ---

class TermDocument(BaseModel):
    x: str
    l: int = 0
    l2: int = 0
    coefficient: str


class SeriesDocument(BaseModel):
    terms: list[TermDocument] = []
    x_cutoff: Optional[str] = None
    ell_cutoff: Optional[int] = None
    text: str = ""


class BlockDocument(BaseModel):
    """One block x^beta f(l) and its generator q(u) = numerator / denominator (ascending coefficients)."""

    beta: str
    kind: str
    q: str
    q_numerator: list[str]
    q_denominator: list[str]
    rho: str = "0"
    rhs_order: Optional[str] = None
    expansion: SeriesDocument


class FatouExpansionDocument(BaseModel):
    source: str = "germ"
    alpha1: str
    N: str
    M: Optional[int] = None
    rho: str
    critical_index: int
    lattice_generators: list[str]
    known_through: str
    residual_order: Optional[list[str]] = None
    residual_cutoff: Optional[str] = None
    constant: str = "0"
    blocks: list[BlockDocument]
    text: str


# --- API requests ---

class FormalRequest(BaseModel):
    germ: str = Field(description="Germ text; an optional '# numeric:' trailer is accepted")
    N: int = 6
    M: int = Field(default=8, ge=1)


class FlowRequest(BaseModel):
    xi: Optional[str] = None
    normal_form: Optional[str] = Field(default=None, description="a,alpha,m,b")
    N: int = 5
    M: int = Field(default=8, ge=1)


class EvalRequest(FormalRequest):
    points: list[float]
    tol: float = Field(default=1e-9, gt=0)
    digits: int = Field(default=50, ge=15)
    constant: float = 0.0
    orbit_blocks: Optional[int] = Field(default=None, ge=0)


class VerifyRequest(FormalRequest):
    grid: str = Field(description="a:b:n[:geom|lin]")
    tol: float = Field(default=1e-9, gt=0)
    digits: int = Field(default=50, ge=15)
    constant: float = 0.0
    orbit_blocks: Optional[int] = Field(default=None, ge=0)


# --- API responses ---

class FormalResponse(BaseModel):
    germ: str
    expansion: FatouExpansionDocument


class FlowResponse(BaseModel):
    generator: str
    germ: str
    rho: str
    equal: bool
    through: str
    expansion: FatouExpansionDocument


class FatouValueResponse(BaseModel):
    x: str
    value: str
    principal: str
    infinitesimal: str
    orbit_terms: int
    orbit_method: str


class EvalResponse(BaseModel):
    values: list[FatouValueResponse]


class ResidualRow(BaseModel):
    x: str
    f_x: str
    psi_x: str
    psi_f_x: str
    residual: str


class ResidualReportResponse(BaseModel):
    rows: list[ResidualRow]
    max_residual: str
    tol: str
    slope: Optional[float] = None
    r_squared: Optional[float] = None
    passed: bool
