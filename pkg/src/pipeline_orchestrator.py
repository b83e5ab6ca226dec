# Period Calculus - Pipeline Orchestrator Module
"""Per-command orchestration with OOP principles."""

import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, Callable, Optional

import numpy as np

from .constrained import ConstraintSpec, projected_flow
from .exceptions import BadConfig, NotConformalChart
from .fixtures import FixtureFactory, FixtureSurface
from .hodge import DiscreteMetric, harmonic_basis, period_matrix
from .immersion import (
    ImmersionState,
    coordinate_frame,
    energy,
    gauss_bonnet_gap,
    isothermic_defect,
    isothermic_l_field,
    minimal_frame,
    quadratic_basis,
    vertex_fields,
    weingarten_normality,
)
from .mesh import canonical_homology_basis
from .mesh_io import read_mesh, write_mesh
from .models import BaseReport, RunConfig
from .output_writer import JSONLWriter, WriterFactory
from .report_generator import ReportFactory
from .second_variation import second_variation_probe
from .validation_generator import ValidationGenerator


class BasePipeline(ABC):  # Abstraction
    def __init__(self, run: RunConfig, tolerances: dict[str, float]):
        self._logger = logging.getLogger(self.__class__.__name__)
        self._run = run  # Encapsulation
        self._tolerances = {**tolerances, **run.tolerances}  # Encapsulation
        self._surface: Optional[FixtureSurface] = None

    @abstractmethod  # Abstraction
    def run(self) -> BaseReport:
        pass

    @property
    def surface(self) -> FixtureSurface:
        if self._surface is None:
            self._surface = self._load_surface()
        return self._surface

    def _load_surface(self) -> FixtureSurface:  # Encapsulation
        run = self._run
        if run.fixture is not None:
            params = {"N": run.N, "tau": run.tau, "R": run.R, "r": run.r, "amplitude": run.amplitude, "n": max(run.N // 16, 1)}
            try:
                surface = FixtureFactory.create(run.fixture, **params)
            except ValueError as e:
                raise BadConfig(f"Cannot build fixture {run.fixture}: {e}") from e
        elif run.input is not None:
            if not Path(run.input).exists():
                raise FileNotFoundError(f"Mesh file not found: {run.input}")
            mesh = read_mesh(Path(run.input))
            surface = FixtureSurface(Path(run.input).stem, mesh, canonical_homology_basis(mesh), DiscreteMetric.induced(mesh))
        else:
            raise BadConfig("Either a fixture or an input mesh is required")
        if run.genus is not None and surface.mesh.genus != run.genus:
            raise BadConfig(f"Expected genus {run.genus}, mesh has genus {surface.mesh.genus}")
        self._logger.info(
            f"Surface {surface.name}: {surface.mesh.n_vertices} vertices, {surface.mesh.n_faces} faces, genus {surface.mesh.genus}"
        )
        return surface

    def _state(self) -> ImmersionState:
        s = self.surface
        return ImmersionState(s.mesh, s.mesh.positions, s.chart)


class PipelineOrchestrator(BasePipeline):  # Inheritance
    """Dispatches a :class:`RunConfig` to its command handler."""

    def run(self) -> BaseReport:  # Polymorphism
        handlers: dict[str, Callable[[], BaseReport]] = {
            "periods": self.run_periods,
            "check-variations": self.run_check_variations,
            "isothermic": self.run_isothermic,
            "willmore": self.run_willmore,
            "frame": self.run_frame,
            "flow": self.run_flow,
            "probe": self.run_probe,
            "fixtures": self.run_fixtures,
        }
        self._logger.info(f"Running command {self._run.command}")
        report = handlers[self._run.command]()
        self._logger.info(f"Command {self._run.command} finished: {'passed' if report.passed else 'FAILED'}")
        return report

    def _payload(self, payload: dict[str, Any], checks: Optional[dict[str, tuple[float, float]]] = None) -> BaseReport:
        generator = ReportFactory.create_generator(self._run.command, self._tolerances)
        return generator.generate({"payload": payload, "checks": checks or {}})

    def run_periods(self) -> BaseReport:
        s = self.surface
        holo = harmonic_basis(s.mesh, s.metric, s.basis)
        periods = period_matrix(s.mesh, s.metric, holo, s.basis)
        expected = s.tau_exact if s.basis.genus == 1 else None
        return ReportFactory.create_generator("periods", self._tolerances).generate({"periods": periods, "tau_expected": expected})

    def run_check_variations(self) -> BaseReport:
        return ValidationGenerator(self.surface, self._tolerances, self._run.seed).generate(self._run.N)

    def run_isothermic(self) -> BaseReport:
        s = self.surface
        state = self._state()
        holo = harmonic_basis(s.mesh, state.metric, s.basis)
        report = isothermic_defect(state, quadratic_basis(state, holo))
        payload: dict[str, Any] = {"fixture": s.name, **report.to_dict()}
        payload["isothermic"] = report.ratio <= self._tolerances["isothermic"]
        checks: dict[str, tuple[float, float]] = {}
        if payload["isothermic"] and state.chart is not None:
            try:
                lfield = isothermic_l_field(state, report.q_opt, s.basis)
            except NotConformalChart as e:
                payload["l_field_error"] = str(e)
            else:
                payload["l_field_residual"] = lfield["residual"]
                payload["l_field_curl"] = lfield["curl"]
                payload["l_field_periods"] = lfield["periods"].tolist()
                checks["l_field_residual"] = (lfield["residual"], self._tolerances["l_field"])
                payload["isothermic"] = lfield["residual"] <= self._tolerances["l_field"]
        return self._payload(payload, checks)

    def run_willmore(self) -> BaseReport:
        state = self._state()
        payload = {
            "fixture": self.surface.name,
            "area": energy(state, "area"),
            "willmore": energy(state, "willmore"),
            "second_fundamental": energy(state, "second_fundamental"),
            "gauss_bonnet_gap": gauss_bonnet_gap(state),
            "weingarten_normality": weingarten_normality(state),
        }
        self._write_fields(state)
        return self._payload(payload)

    def run_frame(self) -> BaseReport:
        s = self.surface
        state = self._state()
        holo = harmonic_basis(s.mesh, state.metric, s.basis)
        frame = minimal_frame(state, holo, s.basis.loops)
        payload = {
            "fixture": s.name,
            "residual": frame.residual,
            "degrees": list(frame.degrees),
            "frame_energy": energy(state, "frame", frame),
        }
        if state.chart is not None:
            payload["coordinate_frame_energy"] = energy(state, "frame", coordinate_frame(state))
        return self._payload(payload, {"frame_residual": (frame.residual, self._tolerances["frame_residual"])})

    def run_flow(self) -> BaseReport:
        s = self.surface
        run = self._run
        state = self._state()
        writer = JSONLWriter(run.output.with_suffix(".jsonl")) if run.output is not None else None
        frame = None
        if run.energy == "frame":
            frame = minimal_frame(state, harmonic_basis(s.mesh, state.metric, s.basis), s.basis.loops)
        result = projected_flow(
            state,
            s.basis,
            ConstraintSpec.full_periods(s.basis.genus),
            step=run.step,
            max_steps=run.max_steps,
            tol=run.tol,
            energy_kind=run.energy,
            frame=frame,
            drop=self._tolerances["isothermic"],
            gap_min=self._tolerances["rank_gap"],
            on_record=None if writer is None else writer.append,
        )
        payload = {"fixture": s.name, **result.summary(), "tau_initial": result.tau_initial, "tau_final": result.tau_final}
        checks = {"period_drift": (result.period_drift, self._tolerances["drift"])}
        if result.multiplier is not None:
            checks["multiplier_residual"] = (result.multiplier.relative_residual, self._tolerances["multiplier"])
        return self._payload(payload, checks)

    def run_probe(self) -> BaseReport:
        s = self.surface
        state = self._state()
        if state.chart is None:
            raise BadConfig("The probe needs a fixture with chart coordinates")
        n_u, n_v = state.chart.grid
        center = (n_v // 2) * n_u
        holo = harmonic_basis(s.mesh, state.metric, s.basis)
        result = second_variation_probe(state, holo, center, self._run.eps, self._run.profile)
        last = result["rows"][-1]
        error = max(float(np.max(np.abs(last["second"][k] - last["prediction"][k]))) for k in ("pi0", "pi1"))
        scale = max(float(np.max(np.abs(last["prediction"][k]))) for k in ("pi0", "pi1"))
        relative = error / scale if scale > 0.0 else float("inf")
        return self._payload({"fixture": s.name, **result, "relative_error": relative}, {"probe": (relative, self._tolerances["probe"])})

    def run_fixtures(self) -> BaseReport:
        s = self.surface
        payload: dict[str, Any] = {
            "fixture": s.name,
            "vertices": s.mesh.n_vertices,
            "faces": s.mesh.n_faces,
            "genus": s.mesh.genus,
            "tau_exact": s.tau_exact,
        }
        if self._run.output is not None:
            suffix = ".obj" if s.mesh.ambient_dim == 3 else ".ext"
            payload["mesh_path"] = str(write_mesh(s.mesh, self._run.output.with_suffix(suffix)))
        return self._payload(payload)

    def _write_fields(self, state: ImmersionState) -> None:
        output = self._run.output
        if output is not None and output.suffix.lower() == ".csv":
            WriterFactory.create(output).write(vertex_fields(state))
