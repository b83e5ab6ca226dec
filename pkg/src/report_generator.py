# Period Calculus - Report Generator Module
"""Report assembly with OOP principles."""

from abc import ABC, abstractmethod
from typing import Any, Optional

import numpy as np

from .hodge import PeriodMatrix, reduce_modulus, riemann_defects
from .models import BaseReport, CommandReport, PeriodReport


class BaseReportGenerator(ABC):  # Abstraction
    def __init__(self, command: str, tolerances: dict[str, float]):
        self._command = command  # Encapsulation
        self._tolerances = tolerances  # Encapsulation

    @abstractmethod  # Abstraction
    def generate(self, data: dict[str, Any]) -> BaseReport:
        pass


class PeriodReportGenerator(BaseReportGenerator):  # Inheritance
    """``{"pi0", "pi1", "pi1_normalized"}`` plus Riemann defects and the modulus error."""

    def generate(self, data: dict[str, Any]) -> PeriodReport:  # Polymorphism
        periods: PeriodMatrix = data["periods"]
        expected: Optional[complex] = data.get("tau_expected")
        tau = periods.pi1_normalized
        reduced = reduce_modulus(complex(tau[0, 0])) if periods.genus == 1 else None
        error = abs(complex(tau[0, 0]) - expected) if expected is not None and periods.genus == 1 else None
        passed = error is None or error <= self._tolerances["period"]
        return PeriodReport(
            command=self._command,
            passed=passed,
            genus=periods.genus,
            pi0=periods.pi0,
            pi1=periods.pi1,
            pi1_normalized=tau,
            riemann=riemann_defects(periods),
            tau_reduced=reduced,
            tau_expected=expected,
            error=error,
        )


class PayloadReportGenerator(BaseReportGenerator):  # Inheritance
    """Wraps a result payload; ``checks`` maps a name to (value, bound)."""

    def generate(self, data: dict[str, Any]) -> CommandReport:  # Polymorphism
        checks: dict[str, tuple[float, float]] = data.get("checks", {})
        failed = sorted(name for name, (value, bound) in checks.items() if not np.isfinite(value) or value > bound)
        payload = dict(data.get("payload", {}))
        payload["checks"] = {name: {"value": value, "bound": bound} for name, (value, bound) in checks.items()}
        payload["failed_checks"] = failed
        return CommandReport(command=self._command, passed=not failed, payload=payload)


class ReportFactory:  # Factory pattern
    @staticmethod
    def create_generator(command: str, tolerances: dict[str, float]) -> BaseReportGenerator:
        clean = command.strip().lower()
        if not clean:
            raise ValueError("Report type must be a non-empty string")
        if clean == "periods":
            return PeriodReportGenerator(clean, tolerances)  # Polymorphism
        return PayloadReportGenerator(clean, tolerances)  # Polymorphism
