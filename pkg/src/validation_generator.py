# Period Calculus - Validation Generator Module
"""Finite-difference oracle suites with OOP principles."""

import logging
from abc import ABC, abstractmethod
from typing import Any, Callable, Optional

import numpy as np

from .constrained import dPeriod_immersion, willmore_gradient
from .energies import EnergyFactory
from .exceptions import NotConformalChart, NotIsothermic
from .fixtures import FixtureSurface
from .hodge import corrected_harmonic, harmonic_basis, period_matrix, riemann_defects
from .immersion import ImmersionState
from .models import CheckReport, OracleResult
from .perturbation import GridChartMetric, chart_forms, d2Period_metric, dPeriod_metric, periods_along
from .second_variation import d2Period_immersion, d2Period_immersion_chart

STEPS = (1e-2, 5e-3, 2.5e-3)
SECOND_STEPS = (5e-2, 2.5e-2, 1.25e-2)


def _stack(pi0: np.ndarray, pi1: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(pi0).reshape(-1), np.asarray(pi1).reshape(-1)])


def taylor_ratios(path: Callable[[float], np.ndarray], first: np.ndarray, steps=STEPS) -> tuple[list[float], list[float]]:
    """Remainders ``|f(t) - f(0) - t f'(0)|`` and their successive ratios (≈ 4)."""
    base = path(0.0)
    rem = [float(np.max(np.abs(path(t) - base - t * first))) for t in steps]
    return rem, [rem[i] / rem[i + 1] for i in range(len(rem) - 1)]


def central_ratios(path: Callable[[float], np.ndarray], second: np.ndarray, steps=STEPS) -> tuple[list[float], list[float]]:
    """Errors of the central second difference against ``f''(0)`` and their ratios (≈ 4)."""
    base = path(0.0)
    err = [float(np.max(np.abs((path(t) - 2.0 * base + path(-t)) / t**2 - second))) for t in steps]
    return err, [err[i] / err[i + 1] for i in range(len(err) - 1)]


def smooth_field(positions: np.ndarray, rng: np.random.Generator, amplitude: float = 0.1) -> np.ndarray:
    """Low-frequency vector field ``A cos(Φ B + c)``."""
    m = positions.shape[1]
    scale = 1.0 / max(float(np.ptp(positions, axis=0).max()), 1e-12)
    b = rng.normal(size=(m, m)) * scale
    phase = rng.uniform(0.0, 2.0 * np.pi, size=m)
    coeff = rng.uniform(0.5, 1.0, size=m) * amplitude
    return coeff * np.cos(positions @ b + phase)


def unit_strain(state: ImmersionState, w: np.ndarray) -> np.ndarray:
    """Rescale w so that its largest face differential has unit Frobenius norm."""
    metric = state.metric
    dw = np.einsum("fia,fim->fma", metric.hat_gradients, w[state.mesh.faces])
    return w / max(float(np.max(np.linalg.norm(dw, axis=(1, 2)))), 1e-300)


def normal_field(state: ImmersionState, rng: np.random.Generator) -> np.ndarray:
    """Smooth field projected onto the vertex normal spaces, at unit strain."""
    w = smooth_field(state.positions, rng, amplitude=1.0)
    return unit_strain(state, np.einsum("vmn,vn->vm", state.normal_projectors, w))


def smooth_node_nu(n: int, rng: np.random.Generator) -> np.ndarray:
    s, t = np.meshgrid(np.arange(n) / n, np.arange(n) / n, indexing="xy")
    s, t = s.reshape(-1), t.reshape(-1)
    amp = rng.uniform(0.2, 0.5, size=3)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=3)
    nu = np.zeros((n * n, 2, 2))
    nu[:, 0, 0] = amp[0] * np.cos(2 * np.pi * s + phase[0])
    nu[:, 1, 1] = amp[1] * np.sin(2 * np.pi * t + phase[1])
    nu[:, 0, 1] = nu[:, 1, 0] = amp[2] * np.cos(2 * np.pi * (s + t) + phase[2])
    return nu


def ratio_result(name: str, values: list[float], ratios: list[float], low: float, high: float) -> OracleResult:
    worst = max(ratios, key=lambda r: abs(np.log(max(r, 1e-300) / 4.0)), default=0.0)
    passed = bool(ratios) and all(low <= r <= high for r in ratios)
    return OracleResult(name=name, value=float(worst), low=low, high=high, passed=passed, details={"errors": values, "ratios": ratios})


def bound_result(name: str, value: float, bound: float, **details: Any) -> OracleResult:
    return OracleResult(name=name, value=float(value), bound=bound, passed=bool(value <= bound), details=details)


class BaseOracleSuite(ABC):  # Abstraction
    """A group of oracle checks on one fixture."""

    def __init__(self, surface: FixtureSurface, tolerances: dict[str, float], seed: int = 0):
        self._logger = logging.getLogger(self.__class__.__name__)
        self._surface = surface  # Encapsulation
        self._tol = tolerances  # Encapsulation
        self._rng = np.random.default_rng(seed)  # Encapsulation

    @abstractmethod  # Abstraction
    def applies(self) -> bool:
        pass

    @abstractmethod  # Abstraction
    def run(self) -> list[OracleResult]:
        pass


class PeriodSuite(BaseOracleSuite):  # Inheritance
    def applies(self) -> bool:  # Polymorphism
        return self._surface.basis.genus >= 1

    def run(self) -> list[OracleResult]:  # Polymorphism
        s = self._surface
        holo = harmonic_basis(s.mesh, s.metric, s.basis)
        periods = period_matrix(s.mesh, s.metric, holo, s.basis)
        defects = riemann_defects(periods)
        results = [
            bound_result("riemann-symmetry", defects["symmetry_defect"], 1e-8),
            OracleResult(
                name="riemann-positivity",
                value=defects["min_imag_eigenvalue"],
                low=0.0,
                passed=defects["min_imag_eigenvalue"] > 0.0,
            ),
            bound_result("a-normalization", float(np.max(np.abs(periods.pi0 - np.eye(s.basis.genus)))), 1e-10),
        ]
        if s.tau_exact is not None and s.basis.genus == 1:
            error = abs(complex(periods.pi1_normalized[0, 0]) - s.tau_exact)
            results.append(bound_result("modulus", error, self._tol["period"], tau=periods.pi1_normalized[0, 0]))
        return results


class MetricVariationSuite(BaseOracleSuite):  # Inheritance
    """Metric perturbations on the grid chart of a flat torus."""

    def applies(self) -> bool:  # Polymorphism
        s = self._surface
        return s.name == "flat-torus" and s.chart is not None and s.chart.grid[0] == s.chart.grid[1]

    def run(self) -> list[OracleResult]:  # Polymorphism
        s = self._surface
        n = s.chart.grid[0]
        chart = GridChartMetric(s.metric, n, np.zeros(n * n), smooth_node_nu(n, self._rng))
        h0 = harmonic_basis(s.mesh, chart.metric(0.0), s.basis)
        forms = chart_forms(chart, h0)
        d_pi0, d_pi1 = dPeriod_metric(chart, forms)
        second = d2Period_metric(chart, forms)

        def path(t: float) -> np.ndarray:
            p = periods_along(chart, h0, s.basis, t)
            return _stack(p.pi0, p.pi1)

        first = _stack(d_pi0, d_pi1)
        low, high = self._tol["ratio_low"], self._tol["ratio_high"]
        rem, ratios = taylor_ratios(path, first)
        err, ratios2 = central_ratios(path, _stack(second["pi0"], second["pi1"]))
        conformal = chart.node_to_face(np.cos(np.arange(n * n))[:, None, None] * np.eye(2))
        c0, c1 = dPeriod_metric(chart, forms, conformal)
        real_drift = float(np.max(np.abs((path(STEPS[0]) - path(-STEPS[0])).real))) / (2.0 * STEPS[0])
        return [
            ratio_result("metric-first-taylor", rem, ratios, low, high),
            ratio_result("metric-second-central", err, ratios2, low, high),
            bound_result("metric-conformal-annihilation", float(np.max(np.abs(_stack(c0, c1)))), self._tol["conformal"]),
            bound_result("metric-real-part", max(float(np.max(np.abs(first.real))), real_drift), 1e-10),
        ]


class ImmersionVariationSuite(BaseOracleSuite):  # Inheritance
    """Taylor remainders on normal fields and central second differences on general fields."""

    FIRST_FIELDS = 10
    SECOND_FIELDS = 5

    def applies(self) -> bool:  # Polymorphism
        return self._surface.basis.genus >= 1

    def run(self) -> list[OracleResult]:  # Polymorphism
        s = self._surface
        state = ImmersionState(s.mesh, s.mesh.positions)
        h0 = harmonic_basis(s.mesh, state.metric, s.basis)

        def along(w: np.ndarray) -> Callable[[float], np.ndarray]:
            def path(t: float) -> np.ndarray:
                metric = state.with_positions(state.positions + t * w).metric
                p = period_matrix(s.mesh, metric, corrected_harmonic(s.mesh, h0, metric), s.basis)
                return _stack(p.pi0, p.pi1)

            return path

        rem, ratios = [], []
        for _ in range(self.FIRST_FIELDS):
            w = normal_field(state, self._rng)
            values, r = taylor_ratios(along(w), _stack(*dPeriod_immersion(state, h0, w)))
            rem.extend(values)
            ratios.extend(r)
        err, ratios2 = [], []
        for _ in range(self.SECOND_FIELDS):
            w = unit_strain(state, smooth_field(state.positions, self._rng, amplitude=1.0))
            second = d2Period_immersion(state, h0, w)
            values, r = central_ratios(along(w), _stack(second["pi0"], second["pi1"]), SECOND_STEPS)
            err.extend(values)
            ratios2.extend(r)

        m = state.ambient_dim
        skew = self._rng.normal(size=(m, m))
        rigid = state.positions @ (skew - skew.T).T + self._rng.normal(size=m)
        r0, r1 = dPeriod_immersion(state, h0, rigid)
        low, high = self._tol["ratio_low"], self._tol["ratio_high"]
        return [
            ratio_result("immersion-first-taylor", rem, ratios, low, high),
            ratio_result("immersion-second-central", err, ratios2, low, high),
            bound_result("immersion-rigid-motion", float(np.max(np.abs(_stack(r0, r1)))), self._tol["rigid"]),
        ]


class ChartVariationSuite(BaseOracleSuite):  # Inheritance
    """The chart assembly of the second derivative on isothermic tori with a conformal chart."""

    def applies(self) -> bool:  # Polymorphism
        s = self._surface
        if s.chart is None or s.basis.genus != 1:
            return False
        return ImmersionState(s.mesh, s.mesh.positions, s.chart).chart_conformality <= 0.1

    def run(self) -> list[OracleResult]:  # Polymorphism
        s = self._surface
        state = ImmersionState(s.mesh, s.mesh.positions, s.chart)
        h0 = harmonic_basis(s.mesh, state.metric, s.basis)
        w = unit_strain(state, smooth_field(state.positions, self._rng, amplitude=1.0))
        try:
            chart = d2Period_immersion_chart(state, h0, w, threshold=self._tol["isothermic"])
        except (NotIsothermic, NotConformalChart) as e:
            self._logger.info(f"Chart assembly skipped: {e}")
            return []
        layout = d2Period_immersion(state, h0, w)
        expected = _stack(layout["pi0"], layout["pi1"])
        found = _stack(chart["pi0"], chart["pi1"])
        gap = float(np.max(np.abs(found - expected)) / max(float(np.max(np.abs(expected))), 1e-300))
        results = [
            bound_result("chart-layout-agreement", gap, self._tol["chart"], l_residual=chart["workspace"].l_residual)
        ]
        if chart["workspace"].l_residual <= 1e-8:

            def path(t: float) -> np.ndarray:
                metric = state.with_positions(state.positions + t * w).metric
                p = period_matrix(s.mesh, metric, corrected_harmonic(s.mesh, h0, metric), s.basis)
                return _stack(p.pi0, p.pi1)

            err, ratios = central_ratios(path, found, SECOND_STEPS)
            results.append(ratio_result("chart-second-central", err, ratios, self._tol["ratio_low"], self._tol["ratio_high"]))
        return results


class EnergySuite(BaseOracleSuite):  # Inheritance
    def applies(self) -> bool:  # Polymorphism
        return True

    def run(self) -> list[OracleResult]:  # Polymorphism
        s = self._surface
        state = ImmersionState(s.mesh, s.mesh.positions)
        willmore = EnergyFactory.create("willmore", s.mesh.faces)
        v = smooth_field(state.positions, self._rng)
        t = 1e-5
        fd = (willmore.value(state.positions + t * v) - willmore.value(state.positions - t * v)) / (2.0 * t)
        exact = float(np.sum(willmore_gradient(state) * v))
        error = abs(fd - exact) / max(1.0, abs(exact))
        return [bound_result("willmore-gradient", error, self._tol["energy_fd"], fd=fd, exact=exact)]


class ValidationGenerator:  # Encapsulation
    """Runs every applicable suite and assembles a :class:`CheckReport`."""

    _SUITES = (PeriodSuite, MetricVariationSuite, ImmersionVariationSuite, ChartVariationSuite, EnergySuite)

    def __init__(self, surface: FixtureSurface, tolerances: dict[str, float], seed: int = 0):
        self._logger = logging.getLogger(self.__class__.__name__)
        self._surface = surface
        self._tolerances = tolerances
        self._seed = seed

    def generate(self, n: Optional[int] = None) -> CheckReport:
        results: list[OracleResult] = []
        for suite_cls in self._SUITES:
            suite = suite_cls(self._surface, self._tolerances, self._seed)
            if not suite.applies():
                self._logger.info(f"{suite_cls.__name__} does not apply to {self._surface.name}")
                continue
            for result in suite.run():
                level = logging.INFO if result.passed else logging.WARNING
                self._logger.log(level, f"{result.name}: {result.value:.3e} ({'ok' if result.passed else 'FAILED'})")
                results.append(result)
        size = n if n is not None else int(self._surface.params.get("N", 8))
        return CheckReport(
            command="check-variations",
            fixture=self._surface.name,
            N=max(size, 8),
            results=results,
            passed=all(r.passed for r in results),
        )
