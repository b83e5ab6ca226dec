# Period Calculus - Hodge Tests
"""Harmonic basis and period matrix tests with OOP principles."""

from abc import ABC, abstractmethod

import numpy as np
import pytest

from src.exceptions import MetricMeshMismatch
from src.hodge import (
    OneForm,
    harmonic_basis,
    hodge_star,
    period_matrix,
    reduce_modulus,
    riemann_defects,
)


class BaseTest(ABC):  # Abstraction
    def __init__(self, name: str, surface):
        self._name = name  # Encapsulation
        self._surface = surface  # Encapsulation

    @property
    def name(self) -> str:
        return self._name

    def periods(self):
        s = self._surface
        return period_matrix(s.mesh, s.metric, harmonic_basis(s.mesh, s.metric, s.basis), s.basis)

    @abstractmethod  # Abstraction
    def run(self) -> bool:
        pass


class NormalizationTest(BaseTest):  # Inheritance
    def run(self) -> bool:  # Polymorphism
        p = self.periods()
        return float(np.max(np.abs(p.pi0 - np.eye(p.genus)))) <= 1e-10


class RiemannTest(BaseTest):  # Inheritance
    def run(self) -> bool:  # Polymorphism
        defects = riemann_defects(self.periods())
        return defects["symmetry_defect"] <= 1e-8 and defects["min_imag_eigenvalue"] > 0.0


class HarmonicityTest(BaseTest):  # Inheritance
    def run(self) -> bool:  # Polymorphism
        s = self._surface
        holo = harmonic_basis(s.mesh, s.metric, s.basis)
        closed = np.max(np.abs(s.mesh.d1 @ holo.alpha))
        coclosed = np.max(np.abs(s.mesh.d0.T @ holo.star_alpha)) / np.max(np.abs(holo.star_alpha))
        return closed <= 1e-10 and coclosed <= 1e-8


class HodgeTestRunner:  # Encapsulation
    def __init__(self):
        self._tests: list[BaseTest] = []  # Encapsulation

    def add(self, test: BaseTest) -> None:  # Polymorphism
        self._tests.append(test)

    def run_all(self) -> dict[str, bool]:  # Abstraction
        return {test.name: test.run() for test in self._tests}


def test_period_invariants(fixture_factory, tmp_path):
    runner = HodgeTestRunner()
    for name in ("flat-torus", "revolution-torus", "genus2"):
        surface = fixture_factory.create(name, tmp_path)
        runner.add(NormalizationTest(f"{name}-normalization", surface))
        runner.add(RiemannTest(f"{name}-riemann", surface))
        runner.add(HarmonicityTest(f"{name}-harmonic", surface))
    results = runner.run_all()
    assert all(results.values()), results


def test_flat_torus_modulus(fixture_factory, tmp_path):
    surface = fixture_factory.create("flat-torus-fine", tmp_path)
    p = NormalizationTest("fine", surface).periods()
    assert abs(complex(p.pi1_normalized[0, 0]) - surface.tau_exact) <= 1e-2


def test_genus_two_shapes(fixture_factory, tmp_path):
    p = NormalizationTest("g2", fixture_factory.create("genus2", tmp_path)).periods()
    assert p.genus == 2
    assert p.pi1_normalized.shape == (2, 2)


def test_reduce_modulus_lands_in_fundamental_domain():
    for tau in (2.3 + 0.1j, -0.7 + 0.4j, 0.2 + 3.0j):
        reduced = reduce_modulus(tau)
        assert abs(reduced.real) <= 0.5 + 1e-12
        assert abs(reduced) >= 1.0 - 1e-12
        assert reduced.imag > 0.0


def test_metric_from_other_mesh(fixture_factory, tmp_path):
    flat = fixture_factory.create("flat-torus", tmp_path)
    other = fixture_factory.create("revolution-torus", tmp_path)
    holo = harmonic_basis(flat.mesh, flat.metric, flat.basis)
    with pytest.raises(MetricMeshMismatch):
        period_matrix(flat.mesh, other.metric, holo, flat.basis)


def test_star_rejects_dual_forms(fixture_factory, tmp_path):
    flat = fixture_factory.create("flat-torus", tmp_path)
    with pytest.raises(MetricMeshMismatch):
        hodge_star(flat.metric, OneForm(np.zeros(flat.mesh.n_edges), dual=True))
