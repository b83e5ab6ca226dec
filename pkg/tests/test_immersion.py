# Period Calculus - Immersion Tests
"""Weingarten form, isothermicity and frame tests with OOP principles."""

import logging
from abc import ABC, abstractmethod

import numpy as np
import pytest

from src.exceptions import NotConformalChart, UnsupportedGenus
from src.fixtures import SphereBuilder
from src.hodge import harmonic_basis
from src.immersion import (
    ImmersionState,
    coordinate_frame,
    energy,
    frame_divergence,
    isothermic_defect,
    isothermic_l_field,
    minimal_frame,
    quadratic_basis,
    vertex_fields,
    weingarten_normality,
    wp_pairing,
)


class BaseTest(ABC):  # Abstraction
    def __init__(self, name: str, surface):
        self._name = name  # Encapsulation
        self._state = ImmersionState(surface.mesh, surface.mesh.positions, surface.chart)
        self._holo = harmonic_basis(surface.mesh, self._state.metric, surface.basis)
        self._surface = surface

    @property
    def name(self) -> str:
        return self._name

    @abstractmethod  # Abstraction
    def run(self) -> bool:
        pass


class IsothermicTest(BaseTest):  # Inheritance
    def run(self) -> bool:  # Polymorphism
        report = isothermic_defect(self._state, quadratic_basis(self._state, self._holo))
        return report.ratio <= 1e-2


class LFieldTest(BaseTest):  # Inheritance
    def __init__(self, name: str, surface, bound: float):
        super().__init__(name, surface)
        self._bound = bound
        self.residual = float("nan")

    def run(self) -> bool:  # Polymorphism
        report = isothermic_defect(self._state, quadratic_basis(self._state, self._holo))
        result = isothermic_l_field(self._state, report.q_opt, self._surface.basis)
        self.residual = result["residual"]
        return abs(np.sin(result["phase"])) <= 0.1 and self.residual <= self._bound


class NormalityTest(BaseTest):  # Inheritance
    def run(self) -> bool:  # Polymorphism
        return weingarten_normality(self._state) <= 1e-10


class OrthonormalBasisTest(BaseTest):  # Inheritance
    def run(self) -> bool:  # Polymorphism
        qbasis = quadratic_basis(self._state, self._holo)
        gram = np.array([[wp_pairing(p, q, self._state)[1].real for q in qbasis.elements] for p in qbasis.elements])
        expected = 2 if self._holo.genus == 1 else 6
        return qbasis.dimension == expected and np.allclose(gram, np.eye(expected), atol=1e-8)


class MinimalFrameTest(BaseTest):  # Inheritance
    def run(self) -> bool:  # Polymorphism
        frame = minimal_frame(self._state, self._holo, self._surface.basis.loops)
        return frame.residual <= 1e-8 and frame.degrees == (0, 0)


class ImmersionTestRunner:  # Encapsulation
    def __init__(self):
        self._tests: list[BaseTest] = []  # Encapsulation

    def add(self, test: BaseTest) -> None:  # Polymorphism
        self._tests.append(test)

    def run_all(self) -> dict[str, bool]:  # Abstraction
        return {test.name: test.run() for test in self._tests}


def test_torus_geometry(fixture_factory, tmp_path):
    runner = ImmersionTestRunner()
    clifford = fixture_factory.create("clifford-torus", tmp_path)
    revolution = fixture_factory.create("revolution-torus", tmp_path)
    runner.add(IsothermicTest("clifford-isothermic", clifford))
    runner.add(LFieldTest("clifford-l-field", clifford, bound=1e-10))
    runner.add(NormalityTest("clifford-normality", clifford))
    runner.add(NormalityTest("revolution-normality", revolution))
    runner.add(OrthonormalBasisTest("clifford-basis", clifford))
    runner.add(MinimalFrameTest("clifford-frame", clifford))
    runner.add(MinimalFrameTest("revolution-frame", revolution))
    results = runner.run_all()
    assert all(results.values()), results


def test_genus_two_quadratic_basis(fixture_factory, tmp_path):
    assert OrthonormalBasisTest("genus2", fixture_factory.create("genus2", tmp_path)).run()


def test_clifford_weingarten_is_nonzero(fixture_factory, tmp_path):
    surface = fixture_factory.create("clifford-torus", tmp_path)
    state = ImmersionState(surface.mesh, surface.mesh.positions, surface.chart)
    assert np.min(np.linalg.norm(state.weingarten_vertices, axis=1)) > 0.1


def test_area_energy_matches_face_areas(fixture_factory, tmp_path):
    surface = fixture_factory.create("revolution-torus", tmp_path)
    state = ImmersionState(surface.mesh, surface.mesh.positions)
    assert np.isclose(energy(state, "area"), np.sum(state.face_areas), rtol=1e-12)


def test_l_field_on_clifford_torus(fixture_factory, tmp_path):
    surface = fixture_factory.create("clifford-torus", tmp_path)
    state = ImmersionState(surface.mesh, surface.mesh.positions, surface.chart)
    holo = harmonic_basis(surface.mesh, state.metric, surface.basis)
    report = isothermic_defect(state, quadratic_basis(state, holo))
    result = isothermic_l_field(state, report.q_opt, surface.basis)
    assert abs(np.sin(result["phase"])) <= 0.1
    assert result["residual"] <= 1e-10
    assert result["curl"] <= 1e-10
    assert result["periods"].shape == (2, 4)


def test_l_field_on_revolution_torus_refines(fixture_factory, tmp_path):
    residuals = []
    for name in ("revolution-torus-24", "revolution-torus-48"):
        test = LFieldTest(name, fixture_factory.create(name, tmp_path), bound=5e-2)
        assert test.run(), name
        residuals.append(test.residual)
    assert residuals[1] < residuals[0]


def test_minimal_frame_on_bumped_torus(fixture_factory, tmp_path):
    surface = fixture_factory.create("bumped-clifford", tmp_path)
    state = ImmersionState(surface.mesh, surface.mesh.positions, surface.chart)
    holo = harmonic_basis(surface.mesh, state.metric, surface.basis)
    minimal = minimal_frame(state, holo, surface.basis.loops)
    assert np.max(np.abs(frame_divergence(state, minimal))) <= 1e-8
    assert energy(state, "frame", minimal) <= energy(state, "frame", coordinate_frame(state)) * (1.0 + 1e-8)


def test_chartless_state_has_no_coordinate_frame(fixture_factory, tmp_path):
    surface = fixture_factory.create("clifford-torus", tmp_path)
    with pytest.raises(NotConformalChart):
        coordinate_frame(ImmersionState(surface.mesh, surface.mesh.positions))


def test_minimal_frame_needs_a_torus(fixture_factory, tmp_path):
    surface = fixture_factory.create("genus2", tmp_path)
    state = ImmersionState(surface.mesh, surface.mesh.positions)
    with pytest.raises(UnsupportedGenus):
        minimal_frame(state, harmonic_basis(surface.mesh, state.metric, surface.basis))


def test_minimal_frame_without_generators_logs_warning(fixture_factory, tmp_path, caplog):
    surface = fixture_factory.create("bumped-clifford", tmp_path)
    state = ImmersionState(surface.mesh, surface.mesh.positions, surface.chart)
    holo = harmonic_basis(surface.mesh, state.metric, surface.basis)
    with caplog.at_level(logging.WARNING, logger="src.immersion"):
        frame = minimal_frame(state, holo)
    assert "degree is not checked" in caplog.text
    assert np.max(np.abs(frame_divergence(state, frame))) <= 1e-8


def test_round_sphere_geometry():
    mesh = SphereBuilder(level=3, radius=2.0).build_mesh()
    state = ImmersionState(mesh)
    fields = vertex_fields(state)
    assert np.max(np.abs(fields["mean_curvature"] - 0.5)) <= 0.5 * 2e-2
    assert np.max(fields["h0_abs"]) <= 0.5 * 0.1
    assert energy(state, "willmore") == pytest.approx(4.0 * np.pi, rel=5e-2)


@pytest.mark.parametrize("name", ["revolution-torus", "clifford-torus", "genus2"])
def test_tangent_projectors_are_rank_two_projectors(fixture_factory, tmp_path, name):
    surface = fixture_factory.create(name, tmp_path)
    state = ImmersionState(surface.mesh, surface.mesh.positions)
    proj = state.tangent_projectors
    assert proj.shape == (surface.mesh.n_vertices, state.ambient_dim, state.ambient_dim)
    assert np.allclose(proj @ proj, proj, atol=1e-10)
    assert np.allclose(np.swapaxes(proj, 1, 2), proj, atol=1e-12)
    assert np.allclose(np.trace(proj, axis1=1, axis2=2), 2.0, atol=1e-10)
    if state.ambient_dim == 3:
        assert np.max(np.abs(np.einsum("vmn,vn->vm", proj, state.normals))) <= 1e-12


def test_genus_two_frames_at_corners_and_edges(fixture_factory, tmp_path):
    surface = fixture_factory.create("genus2", tmp_path)
    state = ImmersionState(surface.mesh, surface.mesh.positions)
    frames = state.vertex_frames
    assert np.all(np.isfinite(frames))
    gram = np.einsum("vma,vmb->vab", frames, frames)
    assert np.allclose(gram, np.eye(2), atol=1e-12)
    assert np.allclose(np.einsum("vmn,vna->vma", state.tangent_projectors, frames), frames, atol=1e-10)
    assert np.all(np.isfinite(state.weingarten_vertices))
