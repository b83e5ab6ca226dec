# Period Calculus - Exceptions Module
"""Error hierarchy with OOP principles."""

from typing import Any, Optional


class PeriodCalculusError(Exception):  # Abstraction
    """Base error; carries the CLI exit code and optional detail payload."""

    exit_code = 3

    def __init__(self, message: str, details: Optional[dict[str, Any]] = None):
        super().__init__(message)
        self._details = details or {}  # Encapsulation

    @property
    def details(self) -> dict[str, Any]:
        return dict(self._details)

    def to_dict(self) -> dict[str, Any]:
        return {
            "error": self.__class__.__name__,
            "message": str(self),
            "details": self.details,
        }


class MeshError(PeriodCalculusError):  # Inheritance
    exit_code = 3


class NumericalError(PeriodCalculusError):  # Inheritance
    exit_code = 3


class ContractError(PeriodCalculusError):  # Inheritance
    exit_code = 3


class ToleranceError(PeriodCalculusError):  # Inheritance
    """A declared tolerance was violated."""

    exit_code = 1


# Mesh
class NonManifold(MeshError):
    pass


class OrientationMismatch(MeshError):
    pass


class DegenerateFace(MeshError):
    pass


class GenusZero(MeshError):
    pass


class OpenPath(MeshError):
    pass


class MeshMismatch(MeshError):
    pass


class MetricMeshMismatch(MeshMismatch):
    pass


class MeshFormatError(MeshError):
    exit_code = 2


# Numerical
class SolverFailure(NumericalError):
    pass


class SingularPiZero(NumericalError):
    pass


class RankAmbiguity(NumericalError):
    pass


class LineSearchFailure(NumericalError):
    pass


class NewtonCorrectionFailure(NumericalError):
    pass


class FrameResidualTooLarge(NumericalError):
    pass


class NonZeroDegreeSeed(NumericalError):
    pass


# Contracts
class UnsupportedGenus(ContractError):
    pass


class SupportViolation(ContractError):
    pass


class NotConformalChart(ContractError):
    pass


class NotIsothermic(ContractError):
    pass


class ChartUnavailable(ContractError):
    pass


class NotIndefinite(ContractError):
    pass


class FrameMissing(ContractError):
    pass


class BadConfig(ContractError):
    exit_code = 2
