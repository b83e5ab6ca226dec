# Period Calculus - Mesh Module
"""Halfedge triangle meshes and canonical homology bases with OOP principles."""

import logging
from abc import ABC, abstractmethod
from collections import deque
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp

from .exceptions import (
    DegenerateFace,
    GenusZero,
    MeshFormatError,
    NonManifold,
    OpenPath,
    OrientationMismatch,
    SolverFailure,
)

Loop = tuple[int, ...]


class TriangleMesh:  # Encapsulation
    """Closed oriented triangle mesh.

    Halfedge ``3f + i`` runs from ``faces[f, i]`` to ``faces[f, (i + 1) % 3]``.
    Edges are the undirected pairs ``(u, v)`` with ``u < v``; a halfedge reads an
    edge cochain with its ``halfedge_sign``.
    """

    def __init__(
        self,
        positions: np.ndarray,
        faces: np.ndarray,
        twin: np.ndarray,
        edges: np.ndarray,
        edge_of_halfedge: np.ndarray,
        halfedge_sign: np.ndarray,
        directed: dict[tuple[int, int], int],
    ):
        self._positions = positions
        self._faces = faces
        self._twin = twin
        self._edges = edges
        self._edge_of_halfedge = edge_of_halfedge
        self._halfedge_sign = halfedge_sign
        self._directed = directed
        for array in (positions, faces, twin, edges, edge_of_halfedge, halfedge_sign):
            array.flags.writeable = False

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    @property
    def faces(self) -> np.ndarray:
        return self._faces

    @property
    def twin(self) -> np.ndarray:
        return self._twin

    @property
    def edges(self) -> np.ndarray:
        return self._edges

    @property
    def edge_of_halfedge(self) -> np.ndarray:
        return self._edge_of_halfedge

    @property
    def halfedge_sign(self) -> np.ndarray:
        return self._halfedge_sign

    @property
    def n_vertices(self) -> int:
        return int(self._positions.shape[0])

    @property
    def n_edges(self) -> int:
        return int(self._edges.shape[0])

    @property
    def n_faces(self) -> int:
        return int(self._faces.shape[0])

    @property
    def ambient_dim(self) -> int:
        return int(self._positions.shape[1])

    @property
    def euler_char(self) -> int:
        return self.n_vertices - self.n_edges + self.n_faces

    @property
    def genus(self) -> int:
        return (2 - self.euler_char) // 2

    @cached_property
    def tail(self) -> np.ndarray:
        return self._faces.reshape(-1)

    @cached_property
    def head(self) -> np.ndarray:
        return self._faces[:, [1, 2, 0]].reshape(-1)

    def next(self, h: int) -> int:
        return 3 * (h // 3) + (h % 3 + 1) % 3

    def prev(self, h: int) -> int:
        return 3 * (h // 3) + (h % 3 + 2) % 3

    def rotate(self, h: int) -> int:
        """Next outgoing halfedge counterclockwise around the tail of ``h``."""
        return int(self._twin[self.prev(h)])

    def halfedge(self, u: int, v: int) -> int:
        try:
            return self._directed[(u, v)]
        except KeyError:
            raise OpenPath(f"No mesh edge from vertex {u} to vertex {v}") from None

    @cached_property
    def outgoing(self) -> np.ndarray:
        first = np.full(self.n_vertices, -1, dtype=np.int64)
        for h in range(3 * self.n_faces - 1, -1, -1):
            first[self.tail[h]] = h
        return first

    def vertex_star(self, v: int) -> list[int]:
        """Outgoing halfedges of ``v`` in counterclockwise order."""
        start = int(self.outgoing[v])
        star = [start]
        h = self.rotate(start)
        while h != start:
            star.append(h)
            h = self.rotate(h)
        return star

    @cached_property
    def neighbors(self) -> list[list[int]]:
        return [sorted(int(self.head[h]) for h in self.vertex_star(v)) for v in range(self.n_vertices)]

    @cached_property
    def d0(self) -> sp.csr_matrix:
        rows = np.repeat(np.arange(self.n_edges), 2)
        cols = self._edges.reshape(-1)
        vals = np.tile([-1.0, 1.0], self.n_edges)
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n_edges, self.n_vertices))

    @cached_property
    def d1(self) -> sp.csr_matrix:
        rows = np.repeat(np.arange(self.n_faces), 3)
        return sp.csr_matrix(
            (self._halfedge_sign.astype(float), (rows, self._edge_of_halfedge)),
            shape=(self.n_faces, self.n_edges),
        )

    def halfedge_values(self, cochain: np.ndarray) -> np.ndarray:
        """Edge cochain read along every halfedge, shape (F, 3)."""
        values = self._halfedge_sign * cochain[self._edge_of_halfedge]
        return values.reshape(self.n_faces, 3)

    def face_areas(self, positions: Optional[np.ndarray] = None) -> np.ndarray:
        p = self._positions if positions is None else positions
        e1 = p[self._faces[:, 1]] - p[self._faces[:, 0]]
        e2 = p[self._faces[:, 2]] - p[self._faces[:, 0]]
        g11 = np.einsum("ij,ij->i", e1, e1)
        g22 = np.einsum("ij,ij->i", e2, e2)
        g12 = np.einsum("ij,ij->i", e1, e2)
        return 0.5 * np.sqrt(np.maximum(g11 * g22 - g12 * g12, 0.0))

    def with_positions(self, positions: np.ndarray) -> "TriangleMesh":
        """Same connectivity, new vertex positions."""
        positions = np.array(positions, dtype=float)
        if positions.shape != self._positions.shape:
            raise MeshFormatError(
                f"Position array shape {positions.shape} does not match {self._positions.shape}"
            )
        _check_degenerate(self, positions)
        return TriangleMesh(
            positions,
            self._faces.copy(),
            self._twin.copy(),
            self._edges.copy(),
            self._edge_of_halfedge.copy(),
            self._halfedge_sign.copy(),
            self._directed,
        )


def _check_degenerate(mesh: TriangleMesh, positions: np.ndarray, rel_tol: float = 1e-12) -> None:
    areas = mesh.face_areas(positions)
    lengths = np.linalg.norm(positions[mesh.edges[:, 1]] - positions[mesh.edges[:, 0]], axis=1)
    scale = float(np.mean(lengths) ** 2) if lengths.size else 1.0
    bad = np.flatnonzero(areas <= rel_tol * scale)
    if bad.size:
        raise DegenerateFace(
            f"{bad.size} degenerate face(s), first at index {int(bad[0])}",
            {"faces": bad[:10].tolist()},
        )


class BaseMeshBuilder(ABC):  # Abstraction
    def __init__(self):
        self._logger = logging.getLogger(self.__class__.__name__)

    @abstractmethod  # Abstraction
    def build(self, positions: np.ndarray, faces: np.ndarray) -> TriangleMesh:
        pass


class HalfedgeMeshBuilder(BaseMeshBuilder):  # Inheritance
    def build(self, positions: np.ndarray, faces: np.ndarray) -> TriangleMesh:  # Polymorphism
        positions = np.array(positions, dtype=float)
        faces = np.array(faces, dtype=np.int64)
        self._validate_arrays(positions, faces)

        tail = faces.reshape(-1)
        head = faces[:, [1, 2, 0]].reshape(-1)
        n_half = tail.size

        undirected: dict[tuple[int, int], int] = {}
        for u, v in zip(tail.tolist(), head.tolist()):
            key = (u, v) if u < v else (v, u)
            undirected[key] = undirected.get(key, 0) + 1
        bad = [key for key, count in undirected.items() if count != 2]
        if bad:
            raise NonManifold(
                f"{len(bad)} edge(s) without exactly two incident faces, e.g. {bad[0]}",
                {"edges": [list(e) for e in bad[:10]]},
            )

        directed: dict[tuple[int, int], int] = {}
        for h, (u, v) in enumerate(zip(tail.tolist(), head.tolist())):
            if (u, v) in directed:
                raise OrientationMismatch(
                    f"Directed edge ({u}, {v}) used by faces {directed[(u, v)] // 3} and {h // 3}"
                )
            directed[(u, v)] = h
        twin = np.array([directed[(v, u)] for u, v in zip(tail.tolist(), head.tolist())], dtype=np.int64)

        edges = np.array(sorted(undirected), dtype=np.int64).reshape(-1, 2)
        index = {(int(u), int(v)): e for e, (u, v) in enumerate(edges)}
        lo = np.minimum(tail, head)
        hi = np.maximum(tail, head)
        edge_of_halfedge = np.array([index[(int(a), int(b))] for a, b in zip(lo, hi)], dtype=np.int64)
        halfedge_sign = np.where(tail < head, 1, -1).astype(np.int64)

        mesh = TriangleMesh(positions, faces, twin, edges, edge_of_halfedge, halfedge_sign, directed)
        self._check_vertex_fans(mesh, n_half)
        _check_degenerate(mesh, positions)
        self._logger.debug(
            f"Built mesh: V={mesh.n_vertices} E={mesh.n_edges} F={mesh.n_faces} "
            f"chi={mesh.euler_char} genus={mesh.genus}"
        )
        return mesh

    def _validate_arrays(self, positions: np.ndarray, faces: np.ndarray) -> None:  # Encapsulation
        if positions.ndim != 2 or positions.shape[1] < 3:
            raise MeshFormatError(f"Positions must be (V, m) with m >= 3, got {positions.shape}")
        if faces.ndim != 2 or faces.shape[1] != 3 or faces.shape[0] == 0:
            raise MeshFormatError(f"Faces must be a non-empty (F, 3) array, got {faces.shape}")
        if faces.min() < 0 or faces.max() >= positions.shape[0]:
            raise MeshFormatError("Face references a vertex index out of range")
        if np.any(faces[:, 0] == faces[:, 1]) or np.any(faces[:, 1] == faces[:, 2]) or np.any(
            faces[:, 0] == faces[:, 2]
        ):
            raise DegenerateFace("Face with a repeated vertex index")
        if not np.all(np.isfinite(positions)):
            raise MeshFormatError("Positions contain non-finite values")

    def _check_vertex_fans(self, mesh: TriangleMesh, n_half: int) -> None:  # Encapsulation
        counts = np.bincount(mesh.tail, minlength=mesh.n_vertices)
        isolated = np.flatnonzero(counts == 0)
        if isolated.size:
            raise NonManifold(f"Vertex {int(isolated[0])} is not used by any face")
        for v in range(mesh.n_vertices):
            if len(mesh.vertex_star(v)) != counts[v]:
                raise NonManifold(f"Faces around vertex {v} do not form a single fan")


def build_mesh(positions: np.ndarray, faces: np.ndarray) -> TriangleMesh:
    return HalfedgeMeshBuilder().build(positions, faces)


@dataclass(frozen=True)
class HomologyBasis:
    loops_a: tuple[Loop, ...]
    loops_b: tuple[Loop, ...]
    intersection_matrix: np.ndarray

    @property
    def genus(self) -> int:
        return len(self.loops_a)

    @property
    def loops(self) -> tuple[Loop, ...]:
        return self.loops_a + self.loops_b

    @classmethod
    def from_loops(
        cls, mesh: TriangleMesh, loops_a: Sequence[Loop], loops_b: Sequence[Loop]
    ) -> "HomologyBasis":
        """Wrap given loops, checking the canonical intersection form."""
        loops = [tuple(int(h) for h in loop) for loop in list(loops_a) + list(loops_b)]
        g = len(loops_a)
        if g == 0 or len(loops_b) != g:
            raise GenusZero("A homology basis needs g >= 1 pairs of loops")
        matrix = intersection_matrix(mesh, loops)
        if not np.array_equal(matrix, symplectic_form(g)):
            raise SolverFailure(
                "Loops do not have the canonical intersection form",
                {"intersection_matrix": matrix.tolist()},
            )
        return cls(tuple(loops[:g]), tuple(loops[g:]), matrix)


def symplectic_form(g: int) -> np.ndarray:
    eye = np.eye(g, dtype=np.int64)
    zero = np.zeros((g, g), dtype=np.int64)
    return np.block([[zero, eye], [-eye, zero]])


def validate_loop(mesh: TriangleMesh, loop: Sequence[int]) -> Loop:
    if len(loop) == 0:
        raise OpenPath("Empty loop")
    loop = tuple(int(h) for h in loop)
    for h, nxt in zip(loop, loop[1:] + loop[:1]):
        if mesh.head[h] != mesh.tail[nxt]:
            raise OpenPath(f"Loop is not closed between halfedges {h} and {nxt}")
    return loop


def loop_from_vertices(mesh: TriangleMesh, vertices: Sequence[int]) -> Loop:
    """Closed vertex walk (last vertex joins back to the first) as halfedges."""
    vertices = [int(v) for v in vertices]
    if len(vertices) < 2:
        raise OpenPath("A loop needs at least two vertices")
    return tuple(mesh.halfedge(u, v) for u, v in zip(vertices, vertices[1:] + vertices[:1]))


def reverse_loop(mesh: TriangleMesh, loop: Loop) -> Loop:
    return tuple(int(mesh.twin[h]) for h in reversed(loop))


def cancel_backtracks(mesh: TriangleMesh, walk: Sequence[int]) -> Loop:
    stack: list[int] = []
    for h in walk:
        if stack and stack[-1] == mesh.twin[h]:
            stack.pop()
        else:
            stack.append(int(h))
    while len(stack) >= 2 and stack[0] == mesh.twin[stack[-1]]:
        stack = stack[1:-1]
    return tuple(stack)


def loop_chain(mesh: TriangleMesh, loop: Loop) -> np.ndarray:
    """Edge chain of a loop, so that ``chain @ cochain`` is the loop integral."""
    loop = validate_loop(mesh, loop)
    chain = np.zeros(mesh.n_edges)
    idx = np.asarray(loop)
    np.add.at(chain, mesh.edge_of_halfedge[idx], mesh.halfedge_sign[idx])
    return chain


def loop_integral(mesh: TriangleMesh, loop: Loop, cochain: np.ndarray) -> complex:
    value = loop_chain(mesh, loop) @ cochain
    return complex(value) if np.iscomplexobj(cochain) else float(value)


def left_wedge_cochain(mesh: TriangleMesh, loop: Loop) -> np.ndarray:
    """Integer edge cochain counting, at every corner, the edges on the loop's left."""
    loop = validate_loop(mesh, loop)
    omega = np.zeros(mesh.n_edges, dtype=np.int64)
    for k, h_out in enumerate(loop):
        h_in = loop[k - 1]
        stop = int(mesh.twin[h_in])
        h = mesh.rotate(h_out)
        while h != stop:
            omega[mesh.edge_of_halfedge[h]] += mesh.halfedge_sign[h]
            h = mesh.rotate(h)
    return omega


def dual_cochain(mesh: TriangleMesh, loop: Loop) -> np.ndarray:
    """Closed integer cochain with ``loop_chain(c) @ zeta == c . loop`` for closed ``c``."""
    return -left_wedge_cochain(mesh, loop)


def intersection_number(mesh: TriangleMesh, loop1: Loop, loop2: Loop) -> int:
    omega = left_wedge_cochain(mesh, loop1)
    return int(round(loop_chain(mesh, loop2) @ omega))


def intersection_matrix(mesh: TriangleMesh, loops: Sequence[Loop]) -> np.ndarray:
    wedges = [left_wedge_cochain(mesh, loop) for loop in loops]
    chains = [loop_chain(mesh, loop) for loop in loops]
    n = len(loops)
    matrix = np.zeros((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            matrix[i, j] = int(round(chains[j] @ wedges[i]))
    return matrix


class TreeCotreeBasisBuilder:  # Encapsulation
    """Tree-cotree generators followed by symplectic reduction over the integers."""

    def __init__(self, mesh: TriangleMesh):
        self._mesh = mesh
        self._logger = logging.getLogger(self.__class__.__name__)

    def build(self) -> HomologyBasis:
        mesh = self._mesh
        if mesh.genus < 1:
            raise GenusZero(f"Mesh has genus {mesh.genus}; period operations need genus >= 1")
        parent = self._primal_tree()
        generators = self._generators(parent)
        if len(generators) != 2 * mesh.genus:
            raise SolverFailure(
                f"Tree-cotree produced {len(generators)} generators, expected {2 * mesh.genus}"
            )
        raw = [self._generator_walk(parent, e) for e in generators]
        loops = [cancel_backtracks(mesh, walk) for walk in raw]
        omega = intersection_matrix(mesh, loops)
        coeffs_a, coeffs_b = self._symplectic_reduction(omega)
        loops_a = [self._combine(raw, c) for c in coeffs_a]
        loops_b = [self._combine(raw, c) for c in coeffs_b]
        basis = HomologyBasis.from_loops(mesh, loops_a, loops_b)
        self._logger.debug(f"Canonical basis: genus {mesh.genus}, loop lengths {[len(l) for l in basis.loops]}")
        return basis

    def _primal_tree(self) -> np.ndarray:  # Encapsulation
        mesh = self._mesh
        parent = np.full(mesh.n_vertices, -1, dtype=np.int64)
        parent[0] = 0
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in mesh.neighbors[u]:
                if parent[v] < 0:
                    parent[v] = u
                    queue.append(v)
        return parent

    def _generators(self, parent: np.ndarray) -> list[int]:  # Encapsulation
        mesh = self._mesh
        in_tree = np.zeros(mesh.n_edges, dtype=bool)
        for v in range(1, mesh.n_vertices):
            in_tree[mesh.edge_of_halfedge[mesh.halfedge(int(parent[v]), v)]] = True
        in_cotree = np.zeros(mesh.n_edges, dtype=bool)
        seen = np.zeros(mesh.n_faces, dtype=bool)
        seen[0] = True
        queue = deque([0])
        while queue:
            f = queue.popleft()
            for i in range(3):
                h = 3 * f + i
                e = mesh.edge_of_halfedge[h]
                if in_tree[e]:
                    continue
                g = int(mesh.twin[h]) // 3
                if not seen[g]:
                    seen[g] = True
                    in_cotree[e] = True
                    queue.append(g)
        return [int(e) for e in np.flatnonzero(~in_tree & ~in_cotree)]

    def _root_path(self, parent: np.ndarray, v: int) -> list[int]:  # Encapsulation
        path = [v]
        while path[-1] != 0:
            path.append(int(parent[path[-1]]))
        return path

    def _generator_walk(self, parent: np.ndarray, edge: int) -> Loop:  # Encapsulation
        u, v = (int(x) for x in self._mesh.edges[edge])
        vertices = list(reversed(self._root_path(parent, u))) + self._root_path(parent, v)
        return tuple(self._mesh.halfedge(a, b) for a, b in zip(vertices, vertices[1:]))

    @staticmethod
    def _symplectic_reduction(omega: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray]]:
        n = omega.shape[0]

        def form(x: np.ndarray, y: np.ndarray) -> int:
            return int(x @ omega @ y)

        vecs = [row.copy() for row in np.eye(n, dtype=np.int64)]
        a_list: list[np.ndarray] = []
        b_list: list[np.ndarray] = []
        while vecs:
            p = vecs.pop(0)
            while True:
                vals = [form(p, r) for r in vecs]
                nonzero = [i for i, val in enumerate(vals) if val != 0]
                if not nonzero:
                    raise SolverFailure("Intersection form is degenerate on the generators")
                i = min(nonzero, key=lambda j: (abs(vals[j]), j))
                if abs(vals[i]) == 1:
                    break
                if len(nonzero) == 1:
                    raise SolverFailure("Intersection form is not unimodular")
                for j in nonzero:
                    if j != i:
                        vecs[j] = vecs[j] - (vals[j] // vals[i]) * vecs[i]
            q = vecs.pop(i)
            if form(p, q) < 0:
                q = -q
            vecs = [r - form(r, q) * p + form(r, p) * q for r in vecs]
            a_list.append(p)
            b_list.append(q)
        return a_list, b_list

    def _combine(self, raw: list[Loop], coeffs: np.ndarray) -> Loop:  # Encapsulation
        walk: list[int] = []
        for loop, c in zip(raw, coeffs):
            piece = loop if c > 0 else reverse_loop(self._mesh, loop)
            walk.extend(list(piece) * abs(int(c)))
        return cancel_backtracks(self._mesh, walk)


def canonical_homology_basis(mesh: TriangleMesh) -> HomologyBasis:
    return TreeCotreeBasisBuilder(mesh).build()
