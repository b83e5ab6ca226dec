# Period Calculus - Fixtures Module
"""Analytic fixture surfaces with OOP principles."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from .hodge import DiscreteMetric
from .mesh import (
    HomologyBasis,
    Loop,
    TriangleMesh,
    build_mesh,
    intersection_number,
    loop_from_vertices,
    reverse_loop,
)


@dataclass(frozen=True)
class ConformalChart:
    """Chart coordinates per vertex with unwrapped per-face corners.

    ``lattice`` holds the two period vectors; ``grid`` the node counts (n_u, n_v)
    when vertex ``i + n_u j`` sits at node (i, j).
    """

    coords: np.ndarray
    face_corners: np.ndarray
    lattice: np.ndarray
    grid: tuple[int, int]


@dataclass(frozen=True)
class FixtureSurface:
    name: str
    mesh: TriangleMesh
    basis: HomologyBasis
    metric: DiscreteMetric
    chart: Optional[ConformalChart] = None
    tau_exact: Optional[complex] = None
    params: dict[str, Any] = field(default_factory=dict)


def grid_faces(n_u: int, n_v: int, checkerboard: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Periodic grid triangles and their unwrapped node corners (F, 3, 2)."""
    faces, corners = [], []

    def vid(i: int, j: int) -> int:
        return (i % n_u) + n_u * (j % n_v)

    for j in range(n_v):
        for i in range(n_u):
            c00, c10, c11, c01 = (i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)
            if checkerboard and (i + j) % 2 == 1:
                tris = [(c00, c10, c01), (c10, c11, c01)]
            else:
                tris = [(c00, c10, c11), (c00, c11, c01)]
            for tri in tris:
                faces.append([vid(*c) for c in tri])
                corners.append(tri)
    return np.array(faces, dtype=np.int64), np.array(corners, dtype=float)


def _grid_loops(mesh: TriangleMesh, n_u: int, n_v: int) -> tuple[Loop, Loop]:
    loop_a = loop_from_vertices(mesh, [i for i in range(n_u)])
    loop_b = loop_from_vertices(mesh, [n_u * j for j in range(n_v)])
    if intersection_number(mesh, loop_a, loop_b) < 0:
        loop_b = reverse_loop(mesh, loop_b)
    return loop_a, loop_b


class BaseFixtureBuilder(ABC):  # Abstraction
    def __init__(self):
        self._logger = logging.getLogger(self.__class__.__name__)

    @abstractmethod  # Abstraction
    def build(self) -> FixtureSurface:
        pass


class FlatTorusBuilder(BaseFixtureBuilder):  # Inheritance
    """Flat torus with lattice (1, 0), (Re τ, Im τ) on an N×N grid."""

    def __init__(self, n: int, tau: complex = 1j):
        super().__init__()
        if complex(tau).imag <= 0.0:
            raise ValueError(f"Modulus must lie in the upper half plane, got {tau}")
        self._n = n
        self._tau = complex(tau)

    def build(self) -> FixtureSurface:  # Polymorphism
        n = self._n
        lattice = np.array([[1.0, 0.0], [self._tau.real, self._tau.imag]])
        faces, nodes = grid_faces(n, n)
        s, t = np.meshgrid(np.arange(n) / n, np.arange(n) / n, indexing="xy")
        s, t = s.reshape(-1), t.reshape(-1)
        positions = np.stack(
            [np.cos(2 * np.pi * s), np.sin(2 * np.pi * s), np.cos(2 * np.pi * t), np.sin(2 * np.pi * t)],
            axis=1,
        ) / (2 * np.pi)
        mesh = build_mesh(positions, faces)
        coords = np.stack([s, t], axis=1) @ lattice
        face_corners = (nodes / n) @ lattice
        metric = DiscreteMetric.from_tensors(mesh, face_corners, np.broadcast_to(np.eye(2), (mesh.n_faces, 2, 2)).copy())
        loop_a, loop_b = _grid_loops(mesh, n, n)
        basis = HomologyBasis.from_loops(mesh, [loop_a], [loop_b])
        chart = ConformalChart(coords, face_corners, lattice, (n, n))
        self._logger.debug(f"Flat torus fixture: N={n}, tau={self._tau}")
        return FixtureSurface("flat-torus", mesh, basis, metric, chart, self._tau, {"N": n, "tau": self._tau})


class RevolutionTorusBuilder(BaseFixtureBuilder):  # Inheritance
    """Torus of revolution sampled on a conformal (u, v) grid with checkerboard diagonals."""

    def __init__(self, n: int, big_r: float = 2.0, small_r: float = 1.0):
        super().__init__()
        if not big_r > small_r > 0.0:
            raise ValueError(f"Need R > r > 0, got R={big_r}, r={small_r}")
        if n % 2:
            raise ValueError("Revolution torus needs an even N")
        self._n = n
        self._big_r = big_r
        self._small_r = small_r

    @property
    def v_period(self) -> float:
        return 2.0 * np.pi * self._small_r / np.sqrt(self._big_r**2 - self._small_r**2)

    def theta_of_v(self, v: np.ndarray) -> np.ndarray:
        big_r, small_r = self._big_r, self._small_r
        s = v * np.sqrt(big_r**2 - small_r**2) / (2.0 * small_r)
        return np.mod(2.0 * np.arctan2(np.sqrt(big_r + small_r) * np.sin(s), np.sqrt(big_r - small_r) * np.cos(s)), 2 * np.pi)

    def build(self) -> FixtureSurface:  # Polymorphism
        n_u = self._n
        n_v = max(2 * int(round(0.5 * n_u * self.v_period / (2 * np.pi))), 4)
        h_u, h_v = 2 * np.pi / n_u, self.v_period / n_v
        faces, nodes = grid_faces(n_u, n_v, checkerboard=True)
        i, j = np.meshgrid(np.arange(n_u), np.arange(n_v), indexing="xy")
        u, v = (i * h_u).reshape(-1), (j * h_v).reshape(-1)
        theta = self.theta_of_v(v)
        rho = self._big_r + self._small_r * np.cos(theta)
        positions = np.stack([rho * np.cos(u), rho * np.sin(u), self._small_r * np.sin(theta)], axis=1)
        mesh = build_mesh(positions, faces)
        scale = np.array([h_u, h_v])
        lattice = np.array([[2 * np.pi, 0.0], [0.0, self.v_period]])
        chart = ConformalChart(np.stack([u, v], axis=1), nodes * scale, lattice, (n_u, n_v))
        loop_a, loop_b = _grid_loops(mesh, n_u, n_v)
        basis = HomologyBasis.from_loops(mesh, [loop_a], [loop_b])
        tau = 1j * self.v_period / (2 * np.pi)
        params = {"N": n_u, "N_v": n_v, "R": self._big_r, "r": self._small_r}
        self._logger.debug(f"Revolution torus fixture: {params}")
        return FixtureSurface("revolution-torus", mesh, basis, DiscreteMetric.induced(mesh), chart, tau, params)


class CliffordTorusBuilder(BaseFixtureBuilder):  # Inheritance
    """Product torus in R^4, optionally bumped along its position vector."""

    def __init__(self, n: int, amplitude: float = 0.0):
        super().__init__()
        self._n = n
        self._amplitude = amplitude

    def build(self) -> FixtureSurface:  # Polymorphism
        n = self._n
        h = 2 * np.pi / n
        faces, nodes = grid_faces(n, n)
        x, y = np.meshgrid(np.arange(n) * h, np.arange(n) * h, indexing="xy")
        x, y = x.reshape(-1), y.reshape(-1)
        base = np.stack([np.cos(x), np.sin(x), np.cos(y), np.sin(y)], axis=1) / np.sqrt(2.0)
        bump = self._amplitude * (np.cos(2 * x) + np.cos(2 * y))
        positions = base * (1.0 + bump)[:, None]
        mesh = build_mesh(positions, faces)
        lattice = np.array([[2 * np.pi, 0.0], [0.0, 2 * np.pi]])
        chart = ConformalChart(np.stack([x, y], axis=1), nodes * h, lattice, (n, n))
        loop_a, loop_b = _grid_loops(mesh, n, n)
        basis = HomologyBasis.from_loops(mesh, [loop_a], [loop_b])
        params = {"N": n, "amplitude": self._amplitude}
        return FixtureSurface("clifford-torus", mesh, basis, DiscreteMetric.induced(mesh), chart, 1j, params)


class SphereBuilder(BaseFixtureBuilder):  # Inheritance
    """Subdivided icosahedron projected to the sphere of radius R (genus 0)."""

    def __init__(self, level: int = 3, radius: float = 1.0):
        super().__init__()
        self._level = level
        self._radius = radius

    def build_mesh(self) -> TriangleMesh:
        phi = 0.5 * (1.0 + np.sqrt(5.0))
        verts = [
            (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
            (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
            (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
        ]
        faces = [
            (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
            (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
            (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
            (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
        ]
        points = [np.array(p, dtype=float) / np.linalg.norm(p) for p in verts]
        for _ in range(self._level):
            cache: dict[tuple[int, int], int] = {}

            def midpoint(a: int, b: int) -> int:
                key = (min(a, b), max(a, b))
                if key not in cache:
                    mid = points[a] + points[b]
                    points.append(mid / np.linalg.norm(mid))
                    cache[key] = len(points) - 1
                return cache[key]

            refined = []
            for a, b, c in faces:
                ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
                refined += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
            faces = refined
        return build_mesh(self._radius * np.array(points), np.array(faces))

    def build(self) -> FixtureSurface:  # Polymorphism
        raise ValueError("The sphere has genus 0 and carries no homology basis; use build_mesh()")


class GenusTwoSlabBuilder(BaseFixtureBuilder):  # Inheritance
    """Boundary of a 6×4×1 slab with two square holes, n lattice cells per unit."""

    _HOLES = ((-2.0, -1.0), (1.0, 2.0))

    def __init__(self, n: int = 2):
        super().__init__()
        self._n = n

    def _solid(self, ci: int, cj: int, ck: int) -> bool:
        n = self._n
        if not (0 <= ci < 6 * n and 0 <= cj < 4 * n and 0 <= ck < n):
            return False
        x = (ci + 0.5) / n - 3.0
        y = (cj + 0.5) / n - 2.0
        in_hole_y = -0.5 < y < 0.5
        return not (in_hole_y and any(lo < x < hi for lo, hi in self._HOLES))

    def _point(self, key: tuple[int, int, int]) -> np.ndarray:
        n = self._n
        return np.array([key[0] / n - 3.0, key[1] / n - 2.0, key[2] / n - 0.5])

    def build(self) -> FixtureSurface:  # Polymorphism
        n = self._n
        quads = []
        for ci in range(6 * n):
            for cj in range(4 * n):
                for ck in range(n):
                    if not self._solid(ci, cj, ck):
                        continue
                    cell = np.array([ci, cj, ck])
                    for d in range(3):
                        d1, d2 = (d + 1) % 3, (d + 2) % 3
                        e1, e2 = np.eye(3, dtype=int)[d1], np.eye(3, dtype=int)[d2]
                        for sign in (1, -1):
                            nbr = cell.copy()
                            nbr[d] += sign
                            if self._solid(*nbr):
                                continue
                            if sign > 0:
                                p0 = cell + np.eye(3, dtype=int)[d]
                                corners = [p0, p0 + e1, p0 + e1 + e2, p0 + e2]
                            else:
                                p0 = cell
                                corners = [p0, p0 + e2, p0 + e1 + e2, p0 + e1]
                            quads.append([tuple(int(x) for x in c) for c in corners])
        keys = sorted({c for quad in quads for c in quad})
        index = {k: i for i, k in enumerate(keys)}
        positions = np.array([self._point(k) for k in keys])

        def weight(key: tuple[int, int, int]) -> float:
            p = self._point(key)
            return float(p[0] * p[1] * p[2])

        faces = []
        for q0, q1, q2, q3 in quads:
            if weight(q0) + weight(q2) > weight(q1) + weight(q3):
                tris = [(q0, q1, q2), (q0, q2, q3)]
            else:
                tris = [(q0, q1, q3), (q1, q2, q3)]
            faces += [[index[c] for c in tri] for tri in tris]
        mesh = build_mesh(positions, np.array(faces))
        basis = self._basis(mesh, index)
        self._logger.debug(f"Genus-2 slab fixture: n={n}, V={mesh.n_vertices}, F={mesh.n_faces}")
        return FixtureSurface("genus2", mesh, basis, DiscreteMetric.induced(mesh), params={"n": n})

    def _lattice(self, x: float, y: float, z: float) -> tuple[int, int, int]:
        n = self._n
        return (int(round((x + 3.0) * n)), int(round((y + 2.0) * n)), int(round((z + 0.5) * n)))

    def _path(self, index: dict, waypoints: list[tuple[float, float, float]]) -> list[int]:
        """Vertex walk through axis-aligned waypoints (closed: last joins first)."""
        walk: list[int] = []
        pts = [self._lattice(*w) for w in waypoints]
        for start, end in zip(pts, pts[1:] + pts[:1]):
            axis = next(a for a in range(3) if start[a] != end[a])
            step = 1 if end[axis] > start[axis] else -1
            for s in range(start[axis], end[axis], step):
                key = list(start)
                key[axis] = s
                walk.append(index[tuple(key)])
        return walk

    def _basis(self, mesh: TriangleMesh, index: dict) -> HomologyBasis:
        loops_a, loops_b = [], []
        for lo, hi in self._HOLES:
            loop_a = loop_from_vertices(
                mesh, self._path(index, [(lo, -0.5, 0.5), (hi, -0.5, 0.5), (hi, 0.5, 0.5), (lo, 0.5, 0.5)])
            )
            outer = -3.0 if lo < 0 else 3.0
            wall = lo if lo < 0 else hi
            loop_b = loop_from_vertices(
                mesh,
                self._path(index, [(wall, 0.0, 0.5), (outer, 0.0, 0.5), (outer, 0.0, -0.5), (wall, 0.0, -0.5)]),
            )
            if intersection_number(mesh, loop_a, loop_b) < 0:
                loop_b = reverse_loop(mesh, loop_b)
            loops_a.append(loop_a)
            loops_b.append(loop_b)
        return HomologyBasis.from_loops(mesh, loops_a, loops_b)


class FixtureFactory:  # Abstraction
    """Named fixture construction for the command line and tests."""

    @staticmethod
    def create(name: str, **params: Any) -> FixtureSurface:
        n = int(params.get("N", 32))
        if name == "flat-torus":
            return FlatTorusBuilder(n, complex(params.get("tau", 1j))).build()
        if name == "revolution-torus":
            return RevolutionTorusBuilder(n, float(params.get("R", 2.0)), float(params.get("r", 1.0))).build()
        if name == "clifford-torus":
            return CliffordTorusBuilder(n, float(params.get("amplitude", 0.0))).build()
        if name == "genus2":
            return GenusTwoSlabBuilder(int(params.get("n", 2))).build()
        raise ValueError(f"Unknown fixture: {name}")

    @staticmethod
    def names() -> list[str]:
        return ["flat-torus", "revolution-torus", "clifford-torus", "genus2"]
