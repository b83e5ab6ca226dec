# Period Calculus - Data Models Module
"""Run configuration and report models with OOP principles."""

from pathlib import Path
from typing import Any, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

COMMANDS = ("periods", "check-variations", "isothermic", "willmore", "frame", "flow", "probe", "fixtures")
FIXTURES = ("flat-torus", "revolution-torus", "clifford-torus", "genus2")


def parse_complex(value: Any) -> complex:
    """Accept ``0.5+0.8i``, ``0.5+0.8j``, ``[re, im]`` or a number."""
    if isinstance(value, complex):
        return value
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, str):
        text = value.strip().replace(" ", "").replace("i", "j")
        try:
            return complex(text)
        except ValueError as e:
            raise ValueError(f"Not a complex number: {value}") from e
    raise ValueError(f"Not a complex number: {value!r}")


def to_jsonable(value: Any) -> Any:
    """Nested conversion: complex -> [re, im], arrays -> lists, models -> dicts."""
    if isinstance(value, BaseModel):
        return to_jsonable(value.model_dump())
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (complex, np.complexfloating)):
        return [float(value.real), float(value.imag)]
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, Path):
        return str(value)
    return value


class BaseReport(BaseModel):  # Abstraction
    """Base report (Abstraction, Encapsulation)."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    command: str = Field()  # Encapsulation
    passed: bool = Field(default=True)  # Encapsulation

    def to_json_dict(self) -> dict[str, Any]:
        return to_jsonable(self.model_dump())


class RunConfig(BaseModel):  # Encapsulation
    """One CLI invocation after flags and YAML defaults are merged."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    command: str = Field()
    input: Optional[Path] = Field(default=None)
    fixture: Optional[str] = Field(default=None)
    tau: complex = Field(default=complex(0.5, 0.8))
    R: float = Field(default=2.0, gt=0)
    r: float = Field(default=1.0, gt=0)
    N: int = Field(default=32, ge=8)
    amplitude: float = Field(default=0.0)
    genus: Optional[int] = Field(default=None, ge=0)
    tolerances: dict[str, float] = Field(default_factory=dict)
    eps: list[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05])
    profile: str = Field(default="narrow-x1")
    step: float = Field(default=1.0, gt=0)
    max_steps: int = Field(default=200, ge=0)
    tol: float = Field(default=1e-3, gt=0)
    energy: str = Field(default="willmore")
    output: Optional[Path] = Field(default=None)
    seed: int = Field(default=0)

    @field_validator("command")  # Encapsulation
    @classmethod
    def validate_command(cls, v: str) -> str:
        if v not in COMMANDS:
            raise ValueError(f"Unknown command: {v}")
        return v

    @field_validator("fixture")  # Encapsulation
    @classmethod
    def validate_fixture(cls, v: Optional[str]) -> Optional[str]:
        if v is not None and v not in FIXTURES:
            raise ValueError(f"Unknown fixture: {v}")
        return v

    @field_validator("tau", mode="before")  # Encapsulation
    @classmethod
    def validate_tau(cls, v: Any) -> complex:
        tau = parse_complex(v)
        if tau.imag <= 0.0:
            raise ValueError(f"Modulus must lie in the upper half plane: {tau}")
        return tau

    @field_validator("tolerances")  # Encapsulation
    @classmethod
    def validate_tolerances(cls, v: dict[str, float]) -> dict[str, float]:
        bad = sorted(k for k, x in v.items() if not x > 0.0)
        if bad:
            raise ValueError(f"Tolerances must be positive: {', '.join(bad)}")
        return v

    @field_validator("eps")  # Encapsulation
    @classmethod
    def validate_eps(cls, v: list[float]) -> list[float]:
        if not v or any(not 0.0 < e < 1.0 for e in v):
            raise ValueError("Probe radii must lie in (0, 1)")
        return v

    @field_validator("input", mode="before")  # Encapsulation
    @classmethod
    def validate_source(cls, v: Any) -> Any:
        return None if v in (None, "") else v


class PeriodReport(BaseReport):  # Inheritance
    genus: int = Field(ge=1)
    pi0: Any = Field()
    pi1: Any = Field()
    pi1_normalized: Any = Field()
    riemann: dict[str, float] = Field(default_factory=dict)
    tau_reduced: Optional[complex] = Field(default=None)
    tau_expected: Optional[complex] = Field(default=None)
    error: Optional[float] = Field(default=None, ge=0)


class FlowRecord(BaseModel):  # Encapsulation
    step: int = Field(ge=1)
    W: float = Field()
    period_drift: float = Field(ge=0)
    proj_grad_norm: float = Field(ge=0)
    rank: int = Field(ge=0)
    sigma_min: float = Field(ge=0)


class OracleResult(BaseModel):  # Encapsulation
    """One finite-difference or analytic check."""

    name: str = Field()
    value: float = Field()
    bound: Optional[float] = Field(default=None)
    low: Optional[float] = Field(default=None)
    high: Optional[float] = Field(default=None)
    passed: bool = Field()
    details: dict[str, Any] = Field(default_factory=dict)

    @field_validator("details")  # Encapsulation
    @classmethod
    def jsonable_details(cls, v: dict[str, Any]) -> dict[str, Any]:
        return to_jsonable(v)


class CheckReport(BaseReport):  # Inheritance
    fixture: str = Field()
    N: int = Field(ge=8)
    results: list[OracleResult] = Field(default_factory=list)

    @property
    def failures(self) -> list[OracleResult]:
        return [r for r in self.results if not r.passed]


class CommandReport(BaseReport):  # Inheritance
    """Reports of the remaining commands: a free-form payload plus pass/fail."""

    payload: dict[str, Any] = Field(default_factory=dict)

    @field_validator("payload")  # Encapsulation
    @classmethod
    def jsonable_payload(cls, v: dict[str, Any]) -> dict[str, Any]:
        return to_jsonable(v)
