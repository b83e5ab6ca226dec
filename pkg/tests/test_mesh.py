# Period Calculus - Mesh Tests
"""Halfedge mesh, homology basis and mesh I/O tests with OOP principles."""

from abc import ABC, abstractmethod

import numpy as np
import pytest

from src.exceptions import GenusZero, MeshFormatError, NonManifold, OrientationMismatch
from src.mesh import (
    build_mesh,
    canonical_homology_basis,
    intersection_matrix,
    loop_chain,
    symplectic_form,
)
from src.mesh_io import read_mesh, write_mesh

TETRA = np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
TETRA_FACES = np.array([[0, 2, 1], [0, 1, 3], [0, 3, 2], [1, 2, 3]])


class BaseTest(ABC):  # Abstraction
    def __init__(self, name: str):
        self._name = name  # Encapsulation

    @property
    def name(self) -> str:
        return self._name

    @abstractmethod  # Abstraction
    def run(self) -> bool:
        pass


class EulerTest(BaseTest):  # Inheritance
    def __init__(self, name: str, surface, genus: int):
        super().__init__(name)
        self._surface = surface
        self._genus = genus

    def run(self) -> bool:  # Polymorphism
        mesh = self._surface.mesh
        return mesh.genus == self._genus and mesh.euler_char == 2 - 2 * self._genus


class ExactnessTest(BaseTest):  # Inheritance
    def __init__(self, name: str, mesh):
        super().__init__(name)
        self._mesh = mesh

    def run(self) -> bool:  # Polymorphism
        product = self._mesh.d1 @ self._mesh.d0
        return product.count_nonzero() == 0 or float(abs(product).max()) == 0.0


class MeshTestRunner:  # Encapsulation
    def __init__(self):
        self._tests: list[BaseTest] = []  # Encapsulation

    def add(self, test: BaseTest) -> None:  # Polymorphism
        self._tests.append(test)

    def run_all(self) -> dict[str, bool]:  # Abstraction
        return {test.name: test.run() for test in self._tests}


def test_fixture_topology(fixture_factory, tmp_path):
    runner = MeshTestRunner()
    flat = fixture_factory.create("flat-torus", tmp_path)
    runner.add(EulerTest("flat", flat, 1))
    runner.add(EulerTest("revolution", fixture_factory.create("revolution-torus", tmp_path), 1))
    runner.add(EulerTest("genus2", fixture_factory.create("genus2", tmp_path), 2))
    runner.add(ExactnessTest("d1-d0", flat.mesh))
    results = runner.run_all()
    assert all(results.values()), results


def test_halfedge_convention():
    mesh = build_mesh(TETRA, TETRA_FACES)
    for h in range(3 * mesh.n_faces):
        u, v = mesh.tail[h], mesh.head[h]
        assert mesh.tail[mesh.twin[h]] == v and mesh.head[mesh.twin[h]] == u
        assert mesh.halfedge_sign[h] == (1 if u < v else -1)
    assert np.all(mesh.edges[:, 0] < mesh.edges[:, 1])


def test_canonical_basis_is_symplectic(fixture_factory, tmp_path):
    surface = fixture_factory.create("revolution-torus", tmp_path)
    basis = canonical_homology_basis(surface.mesh)
    assert basis.genus == 1
    assert np.array_equal(intersection_matrix(surface.mesh, basis.loops), symplectic_form(1))


def test_genus_two_basis(fixture_factory, tmp_path):
    surface = fixture_factory.create("genus2", tmp_path)
    assert np.array_equal(surface.basis.intersection_matrix, symplectic_form(2))


def test_exact_forms_vanish_on_loops(fixture_factory, tmp_path):
    surface = fixture_factory.create("flat-torus", tmp_path)
    f = np.random.default_rng(3).normal(size=surface.mesh.n_vertices)
    df = surface.mesh.d0 @ f
    for loop in surface.basis.loops:
        assert abs(loop_chain(surface.mesh, loop) @ df) < 1e-10


def test_genus_zero_has_no_basis():
    with pytest.raises(GenusZero):
        canonical_homology_basis(build_mesh(TETRA, TETRA_FACES))


def test_open_mesh_is_rejected():
    with pytest.raises(NonManifold):
        build_mesh(TETRA, TETRA_FACES[:3])


def test_inconsistent_orientation_is_rejected():
    faces = TETRA_FACES.copy()
    faces[3] = faces[3, ::-1]
    with pytest.raises(OrientationMismatch):
        build_mesh(TETRA, faces)


def test_off_reader(fixture_factory, tmp_path):
    mesh = read_mesh(fixture_factory.create("tetra-off", tmp_path))
    assert mesh.n_vertices == 4 and mesh.n_faces == 4 and mesh.genus == 0


def test_extended_format_keeps_ambient_dimension(fixture_factory, tmp_path):
    surface = fixture_factory.create("flat-torus", tmp_path)
    path = write_mesh(surface.mesh, tmp_path / "flat.ext")
    mesh = read_mesh(path)
    assert mesh.ambient_dim == 4
    assert np.array_equal(mesh.faces, surface.mesh.faces)
    assert np.allclose(mesh.positions, surface.mesh.positions)


def test_obj_needs_three_dimensions(fixture_factory, tmp_path):
    surface = fixture_factory.create("flat-torus", tmp_path)
    with pytest.raises(MeshFormatError):
        write_mesh(surface.mesh, tmp_path / "flat.obj")


def test_unknown_suffix(tmp_path):
    path = tmp_path / "mesh.stl"
    path.write_text("solid")
    with pytest.raises(MeshFormatError):
        read_mesh(path)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_mesh(tmp_path / "missing.off")
