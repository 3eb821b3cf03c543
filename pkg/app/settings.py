"""Run configuration: environment defaults, optional JSON config file, command-line overrides."""

from __future__ import annotations

import json
import math
import os
from pathlib import Path
from typing import Any, Literal, Optional

import mpmath
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from .errors import FatouError, ParseError

DEFAULT_SETTINGS = {
    "digits": os.environ.get("FATOU_DIGITS", "50"),
    "tol": os.environ.get("FATOU_TOL", "1e-9"),
    "N": os.environ.get("FATOU_N", "6"),
    "M": os.environ.get("FATOU_M", "8"),
    "max_blocks": os.environ.get("FATOU_MAX_BLOCKS", "200"),
    "max_orbit": os.environ.get("FATOU_MAX_ORBIT", "4000"),
    "anchor": os.environ.get("FATOU_ANCHOR", "exp(-1)"),
    "log_level": os.environ.get("FATOU_LOG_LEVEL", "WARNING"),
}

COMMANDS = ("formal", "verify", "eval", "flow")
GRID_UPPER = math.exp(-1)


def parse_anchor(text: str) -> float:
    """Accepts a number or exp(<number>)."""
    text = str(text).strip()
    if text.startswith("exp(") and text.endswith(")"):
        return math.exp(float(text[4:-1]))
    return float(text)


class GridSpec(BaseModel):
    """Sample points a..b (either order), n of them, geometric or linear, emitted decreasing toward 0."""

    start: float
    stop: float
    count: int = Field(ge=2)
    spacing: Literal["geom", "lin"] = "geom"

    @field_validator("start", "stop")
    @classmethod
    def inside_domain(cls, value: float) -> float:
        if not 0 < value < GRID_UPPER:
            raise ValueError(f"grid point {value} is outside (0, 1/e)")
        return value

    @model_validator(mode="after")
    def distinct_ends(self) -> "GridSpec":
        if self.start == self.stop:
            raise ValueError("grid needs two distinct end points")
        return self

    @classmethod
    def parse(cls, text: str) -> "GridSpec":
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ParseError(f"grid must look like a:b:n[:geom|lin], got {text!r}")
        try:
            return cls(
                start=float(parts[0]),
                stop=float(parts[1]),
                count=int(parts[2]),
                spacing=parts[3] if len(parts) == 4 else "geom",
            )
        except (ValueError, ValidationError) as exc:
            raise ParseError(f"invalid grid {text!r}: {exc}") from exc

    def points(self) -> list:
        """Strictly decreasing mpf points at the current working precision."""
        high, low = mpmath.mpf(max(self.start, self.stop)), mpmath.mpf(min(self.start, self.stop))
        if self.spacing == "lin":
            return [high - (high - low) * k / (self.count - 1) for k in range(self.count)]
        ratio = (low / high) ** (mpmath.mpf(1) / (self.count - 1))
        return [high * ratio ** k for k in range(self.count)]

    def __str__(self) -> str:
        return f"{self.start}:{self.stop}:{self.count}:{self.spacing}"


class RunConfig(BaseModel):
    input: Optional[str] = None
    command: Literal["formal", "verify", "eval", "flow"] = "formal"
    N: int = int(DEFAULT_SETTINGS["N"])
    M: int = int(DEFAULT_SETTINGS["M"])
    tol: float = float(DEFAULT_SETTINGS["tol"])
    digits: int = int(DEFAULT_SETTINGS["digits"])
    grid: Optional[GridSpec] = None
    output: Optional[str] = None
    max_blocks: int = int(DEFAULT_SETTINGS["max_blocks"])
    max_orbit: int = int(DEFAULT_SETTINGS["max_orbit"])
    anchor: float = parse_anchor(DEFAULT_SETTINGS["anchor"])
    orbit_blocks: Optional[int] = Field(default=None, ge=0)
    constant: float = 0.0
    points: list[float] = []
    xi: Optional[str] = None
    normal_form: Optional[str] = None
    log_level: str = DEFAULT_SETTINGS["log_level"]

    @field_validator("tol")
    @classmethod
    def positive_tol(cls, value: float) -> float:
        if not value > 0:
            raise ValueError("tol must be > 0")
        return value

    @field_validator("digits")
    @classmethod
    def enough_digits(cls, value: int) -> int:
        if value < 15:
            raise ValueError("digits must be >= 15")
        return value

    @field_validator("M")
    @classmethod
    def positive_m(cls, value: int) -> int:
        if value < 1:
            raise ValueError("M must be >= 1")
        return value

    @field_validator("anchor")
    @classmethod
    def anchor_in_domain(cls, value: float) -> float:
        if not 0 < value <= GRID_UPPER:
            raise ValueError("anchor must lie in (0, 1/e]")
        return value

    @field_validator("grid", mode="before")
    @classmethod
    def grid_from_text(cls, value: Any) -> Any:
        if isinstance(value, str):
            return GridSpec.parse(value)
        return value

    @field_validator("points")
    @classmethod
    def points_in_domain(cls, value: list[float]) -> list[float]:
        for point in value:
            if not 0 < point < GRID_UPPER:
                raise ValueError(f"point {point} is outside (0, 1/e)")
        return value


def load_config_file(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FatouError(f"cannot read config file {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise FatouError(f"config file {path} must hold a JSON object")
    return data


def build_run_config(config_path: Optional[str] = None, **overrides) -> RunConfig:
    """env defaults < JSON config file < explicit overrides (None values are ignored)."""
    values = load_config_file(config_path)
    if isinstance(values.get("anchor"), str):
        values["anchor"] = parse_anchor(values["anchor"])
    values.update({key: value for key, value in overrides.items() if value is not None})
    try:
        return RunConfig(**values)
    except ValidationError as exc:
        raise FatouError(f"invalid configuration: {exc}") from exc
