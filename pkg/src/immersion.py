# Period Calculus - Immersion Module
"""Immersed-surface geometry, Weingarten form and quadratic differentials with OOP principles."""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Any, Optional, Sequence

import numpy as np
import torch

from .exceptions import (
    FrameMissing,
    MeshMismatch,
    NonZeroDegreeSeed,
    NotConformalChart,
    UnsupportedGenus,
)
from .face_calculus import edge_matrices, scatter_to_vertices
from .fixtures import ConformalChart
from .hodge import DiscreteMetric, HolomorphicBasis, loop_chains, poincare_duals
from .energies import EnergyFactory, MeshGeometry
from .mesh import HomologyBasis, Loop, TriangleMesh, canonical_homology_basis

_logger = logging.getLogger(__name__)


def circumcentric_areas(positions: np.ndarray, faces: np.ndarray, n_vertices: int) -> np.ndarray:
    """Dual vertex areas ``sum (1/8) |e|² cot`` over the corners opposite each edge."""
    out = np.zeros(n_vertices)
    for k in range(3):
        i, j, o = faces[:, (k + 1) % 3], faces[:, (k + 2) % 3], faces[:, k]
        u = positions[i] - positions[o]
        v = positions[j] - positions[o]
        dot = np.einsum("ij,ij->i", u, v)
        cross = np.sqrt(np.maximum(np.einsum("ij,ij->i", u, u) * np.einsum("ij,ij->i", v, v) - dot**2, 0.0))
        contrib = 0.125 * np.einsum("ij,ij->i", u - v, u - v) * dot / cross
        np.add.at(out, i, contrib)
        np.add.at(out, j, contrib)
    return out


class ImmersionState:  # Encapsulation
    """Immersion Φ of a mesh in R^m with its induced metric and vertex geometry.

    Face quantities live in the orthonormal face frames of the induced layout,
    vertex quantities in tangent frames spanning the eigenplanes of the
    vertex projectors.
    """

    def __init__(self, mesh: TriangleMesh, positions: Optional[np.ndarray] = None, chart: Optional[ConformalChart] = None):
        self._logger = logging.getLogger(self.__class__.__name__)
        positions = mesh.positions if positions is None else np.asarray(positions, dtype=float)
        self._mesh = mesh if positions is mesh.positions else mesh.with_positions(positions)
        self._positions = self._mesh.positions
        self._chart = chart
        self._metric = DiscreteMetric.induced(self._mesh)

    @property
    def mesh(self) -> TriangleMesh:
        return self._mesh

    @property
    def positions(self) -> np.ndarray:
        return self._positions

    @property
    def chart(self) -> Optional[ConformalChart]:
        return self._chart

    @property
    def metric(self) -> DiscreteMetric:
        return self._metric

    @property
    def ambient_dim(self) -> int:
        return self._positions.shape[1]

    def with_positions(self, positions: np.ndarray) -> "ImmersionState":
        return ImmersionState(self._mesh, positions, self._chart)

    @property
    def face_frames(self) -> np.ndarray:
        """(F, m, 2) orthonormal face frames T_f."""
        return self._metric.frames

    @cached_property
    def face_areas(self) -> np.ndarray:
        return self._metric.areas

    @cached_property
    def face_lambda(self) -> np.ndarray:
        return np.zeros(self._mesh.n_faces)

    @cached_property
    def vertex_lambda(self) -> np.ndarray:
        """Vertex-averaged ``λ`` (zero in orthonormal frames, chart value otherwise)."""
        if self._chart is None:
            return np.zeros(self._mesh.n_vertices)
        return 0.5 * np.log(self.chart_conformal_factor_vertices)

    @cached_property
    def dual_areas(self) -> np.ndarray:
        return circumcentric_areas(self._positions, self._mesh.faces, self._mesh.n_vertices)

    @cached_property
    def tangent_projectors(self) -> np.ndarray:
        """(V, m, m) vertex tangent projectors, shared with the differentiable energies."""
        with torch.no_grad():
            geometry = MeshGeometry(
                torch.from_numpy(np.array(self._positions, dtype=np.float64)),
                torch.from_numpy(np.array(self._mesh.faces, dtype=np.int64)),
            )
            return geometry.tangent_projectors().numpy().copy()

    @cached_property
    def normal_projectors(self) -> np.ndarray:
        return np.eye(self.ambient_dim) - self.tangent_projectors

    @cached_property
    def _first_face(self) -> np.ndarray:
        first = np.full(self._mesh.n_vertices, -1, dtype=np.int64)
        for f, face in enumerate(self._mesh.faces):
            for v in face:
                if first[v] < 0:
                    first[v] = f
        return first

    @cached_property
    def vertex_frames(self) -> np.ndarray:
        """(V, m, 2) oriented orthonormal tangent frames.

        The top two eigenvectors of the vertex projector span the plane; the
        frame is the orthonormal basis of that plane closest to the first
        incident face frame.
        """
        _, vecs = np.linalg.eigh(self.tangent_projectors)
        plane = vecs[:, :, -2:]
        ref = self.face_frames[self._first_face]
        overlap = np.einsum("vmi,vma->via", plane, ref)
        u, _, vt = np.linalg.svd(overlap)
        return np.einsum("vmi,vij,vja->vma", plane, u, vt)

    @cached_property
    def normals(self) -> np.ndarray:
        """Area-weighted unit vertex normals (m = 3 only)."""
        if self.ambient_dim != 3:
            raise MeshMismatch("Unit normals are defined for surfaces in R^3 only")
        p = self._positions
        f = self._mesh.faces
        fn = 0.5 * np.cross(p[f[:, 1]] - p[f[:, 0]], p[f[:, 2]] - p[f[:, 0]])
        vn = scatter_to_vertices(f, np.repeat(fn[:, None, :], 3, axis=1), self._mesh.n_vertices)
        return vn / np.linalg.norm(vn, axis=1, keepdims=True)

    @cached_property
    def normal_bases(self) -> np.ndarray:
        """(V, m, m-2) orthonormal bases of the normal spaces."""
        _, vecs = np.linalg.eigh(self.normal_projectors)
        basis = vecs[:, :, 2:]
        if self.ambient_dim == 3:
            sign = np.sign(np.einsum("vm,vm->v", basis[:, :, 0], self.normals))
            basis = basis * sign[:, None, None]
        return basis

    @cached_property
    def mean_curvature(self) -> np.ndarray:
        """Mean-curvature vectors ``H_v = -(LΦ)_v / (2 A_v)``."""
        return -(self._metric.laplacian @ self._positions) / (2.0 * self.dual_areas[:, None])

    @cached_property
    def weingarten_vertices(self) -> np.ndarray:
        """(V, m) complex ``h0 = ½ π_n (B11 - B22 - 2i B12)`` from a quadratic fit."""
        mesh = self._mesh
        rings = mesh.neighbors
        frames = self.vertex_frames
        out = np.zeros((mesh.n_vertices, self.ambient_dim), dtype=complex)
        for v in range(mesh.n_vertices):
            stencil = list(rings[v])
            if len(stencil) < 6:
                second = {u for w in stencil for u in rings[w]}
                stencil = sorted((second | set(stencil)) - {v})
            diff = self._positions[stencil] - self._positions[v]
            s = diff @ frames[v]
            design = np.column_stack([s[:, 0], s[:, 1], 0.5 * s[:, 0] ** 2, s[:, 0] * s[:, 1], 0.5 * s[:, 1] ** 2])
            coeffs, *_ = np.linalg.lstsq(design, diff, rcond=None)
            b11, b12, b22 = coeffs[2], coeffs[3], coeffs[4]
            out[v] = 0.5 * self.normal_projectors[v] @ (b11 - b22 - 2j * b12)
        return out

    def face_rotation(self) -> np.ndarray:
        """Angle θ of each face frame against the vertex frames at its corners, (F, 3)."""
        frames = self.vertex_frames[self._mesh.faces]
        e1f = self.face_frames[:, :, 0]
        cos = np.einsum("fm,fkm->fk", e1f, frames[:, :, :, 0])
        sin = np.einsum("fm,fkm->fk", e1f, frames[:, :, :, 1])
        return np.arctan2(sin, cos)

    @cached_property
    def weingarten_faces(self) -> np.ndarray:
        """(F, m) complex face coefficients: transported corner values, averaged, normal-projected."""
        theta = self.face_rotation()
        corner = self.weingarten_vertices[self._mesh.faces] * np.exp(2j * theta)[:, :, None]
        mean = corner.mean(axis=1)
        frames = self.face_frames
        tangential = np.einsum("fma,fna,fn->fm", frames, frames, mean)
        return mean - tangential

    @cached_property
    def chart_jacobians(self) -> np.ndarray:
        """``∂Φ/∂x`` per face in chart coordinates, (F, m, 2)."""
        if self._chart is None:
            raise NotConformalChart("State carries no chart coordinates")
        e_inv = np.linalg.inv(edge_matrices(self._chart.face_corners))
        p = self._positions[self._mesh.faces]
        d = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=2)
        return np.einsum("fmk,fkc->fmc", d, e_inv)

    @cached_property
    def chart_conformal_factor(self) -> np.ndarray:
        """Per-face ``e^{2λ} = ½ (|∂1Φ|² + |∂2Φ|²)`` in chart coordinates."""
        jac = self.chart_jacobians
        return 0.5 * np.einsum("fmc,fmc->f", jac, jac)

    @cached_property
    def chart_conformality(self) -> float:
        """Largest relative deviation of the chart Jacobians from a conformal map."""
        jac = self.chart_jacobians
        mixed = np.abs(np.einsum("fm,fm->f", jac[:, :, 0], jac[:, :, 1]))
        stretch = 0.5 * np.abs(np.einsum("fm,fm->f", jac[:, :, 0], jac[:, :, 0]) - np.einsum("fm,fm->f", jac[:, :, 1], jac[:, :, 1]))
        return float(np.max((mixed + stretch) / self.chart_conformal_factor))

    @cached_property
    def chart_conformal_factor_vertices(self) -> np.ndarray:
        f = self._mesh.faces
        acc = scatter_to_vertices(f, np.repeat(self.chart_conformal_factor[:, None], 3, axis=1), self._mesh.n_vertices)
        count = scatter_to_vertices(f, np.ones((f.shape[0], 3)), self._mesh.n_vertices)
        return acc / count

    @cached_property
    def chart_metric(self) -> DiscreteMetric:
        """Flat metric on the chart corners, whose Laplacian is the chart Laplacian."""
        if self._chart is None:
            raise NotConformalChart("State carries no chart coordinates")
        n = self._mesh.n_faces
        return DiscreteMetric.from_tensors(self._mesh, self._chart.face_corners, np.broadcast_to(np.eye(2), (n, 2, 2)).copy())

    @cached_property
    def chart_angles(self) -> np.ndarray:
        """Angle of the chart x1 direction in each face frame."""
        d1 = np.einsum("fma,fm->fa", self.face_frames, self.chart_jacobians[:, :, 0])
        return np.arctan2(d1[:, 1], d1[:, 0])

    def vertex_covectors(self, cochain: np.ndarray) -> np.ndarray:
        """Area-averaged covectors of closed cochains in the vertex frames, (V, 2, k)."""
        cochain = cochain.reshape(self._mesh.n_edges, -1)
        cov = self._metric.face_covectors(cochain)
        ambient = np.einsum("fma,fak->fmk", self.face_frames, cov) * self.face_areas[:, None, None]
        acc = scatter_to_vertices(self._mesh.faces, np.repeat(ambient[:, None], 3, axis=1), self._mesh.n_vertices)
        weights = scatter_to_vertices(self._mesh.faces, np.repeat(self.face_areas[:, None], 3, axis=1), self._mesh.n_vertices)
        return np.einsum("vma,vmk->vak", self.vertex_frames, acc) / weights[:, None, None]


@dataclass(frozen=True)
class HolomorphicCoefficients:
    """Coefficients of ω^k and σ^γ against dz in vertex frames (V, ·) and face frames (F, ·)."""

    omega_vertices: np.ndarray
    omega_faces: np.ndarray
    sigma_vertices: np.ndarray
    sigma_faces: np.ndarray


def _dz_coefficient(covectors: np.ndarray) -> np.ndarray:
    return covectors[:, 0] - 1j * covectors[:, 1]


def holomorphic_coefficients(state: ImmersionState, holobasis: HolomorphicBasis) -> HolomorphicCoefficients:
    """Coefficients ``a = A1 - i A2`` of ``ω = α + i∗α`` for α and for the harmonic duals."""
    if holobasis.metric.mesh.n_faces != state.mesh.n_faces:
        raise MeshMismatch("Holomorphic basis and immersion live on different meshes")
    if holobasis.duals is None:
        raise MeshMismatch("Holomorphic coefficients need a basis with Poincare duals")
    alpha = holobasis.alpha
    eta = holobasis.duals.eta
    metric = state.metric
    return HolomorphicCoefficients(
        _dz_coefficient(state.vertex_covectors(alpha)),
        _dz_coefficient(metric.face_covectors(alpha)),
        _dz_coefficient(state.vertex_covectors(eta)),
        _dz_coefficient(metric.face_covectors(eta)),
    )


@dataclass(frozen=True)
class QuadraticDifferential:
    """Coefficient ψ of ``ψ dz⊗dz`` in vertex frames and in face frames."""

    vertices: np.ndarray
    faces: np.ndarray
    n_vertices: int

    def __add__(self, other: "QuadraticDifferential") -> "QuadraticDifferential":
        return QuadraticDifferential(self.vertices + other.vertices, self.faces + other.faces, self.n_vertices)

    def scale(self, c: complex) -> "QuadraticDifferential":
        return QuadraticDifferential(c * self.vertices, c * self.faces, self.n_vertices)

    def rotate_frames(self, vertex_theta: np.ndarray, face_theta: np.ndarray) -> "QuadraticDifferential":
        """Coefficients after rotating every frame by θ: ψ picks up ``e^{2iθ}``."""
        return QuadraticDifferential(
            self.vertices * np.exp(2j * vertex_theta), self.faces * np.exp(2j * face_theta), self.n_vertices
        )


def product_differential(coeffs: HolomorphicCoefficients, k: int, l: int, dual: bool = False) -> QuadraticDifferential:
    """``ω^k ⊗ ω^l`` or, with ``dual``, ``ω^k ⊗ σ^l``."""
    right_v = coeffs.sigma_vertices if dual else coeffs.omega_vertices
    right_f = coeffs.sigma_faces if dual else coeffs.omega_faces
    return QuadraticDifferential(
        coeffs.omega_vertices[:, k] * right_v[:, l],
        coeffs.omega_faces[:, k] * right_f[:, l],
        coeffs.omega_vertices.shape[0],
    )


def wp_pairing(q1: QuadraticDifferential, q2: QuadraticDifferential, state: ImmersionState) -> tuple[np.ndarray, complex]:
    """Pointwise ``e^{-4λ} conj(ψ1) ψ2`` at vertices and its dual-area integral.

    Frames are orthonormal, so λ = 0. The real part of the integral is the real
    inner product used for orthonormalization; the imaginary part is the one
    that enters the constraint equations.
    """
    if q1.n_vertices != state.mesh.n_vertices or q2.n_vertices != state.mesh.n_vertices:
        raise MeshMismatch("Quadratic differentials and state live on different meshes")
    pointwise = np.conj(q1.vertices) * q2.vertices
    return pointwise, complex(np.sum(state.dual_areas * pointwise))


@dataclass(frozen=True)
class QuadraticBasis:
    """WP-orthonormal real basis of the span of products of abelian differentials."""

    elements: tuple[QuadraticDifferential, ...]
    raw: tuple[QuadraticDifferential, ...]
    transform: np.ndarray
    gram_raw: np.ndarray

    @property
    def dimension(self) -> int:
        return len(self.elements)

    def combine(self, coefficients: np.ndarray) -> QuadraticDifferential:
        out = self.elements[0].scale(float(coefficients[0]))
        for c, q in zip(coefficients[1:], self.elements[1:]):
            out = out + q.scale(float(c))
        return out

    def vertex_matrix(self) -> np.ndarray:
        return np.stack([q.vertices for q in self.elements], axis=1)


def quadratic_basis(state: ImmersionState, holobasis: HolomorphicBasis, rank_tol: float = 1e-10) -> QuadraticBasis:
    g = holobasis.genus
    if g not in (1, 2):
        raise UnsupportedGenus(f"Quadratic differential basis supports genus 1 and 2, got {g}")
    coeffs = holomorphic_coefficients(state, holobasis)
    pairs = [(0, 0)] if g == 1 else [(0, 0), (0, 1), (1, 1)]
    products = [product_differential(coeffs, k, l) for k, l in pairs]
    raw = tuple(products + [q.scale(1j) for q in products])
    values = np.stack([q.vertices for q in raw], axis=1)
    gram = np.real(np.einsum("v,vi,vj->ij", state.dual_areas, np.conj(values), values))
    eig = np.linalg.eigvalsh(gram)
    if eig.min() <= rank_tol * eig.max():
        raise UnsupportedGenus(f"Products of abelian differentials are dependent (Gram eigenvalues {eig.tolist()})")
    chol = np.linalg.cholesky(gram)
    transform = np.linalg.inv(chol).T
    elements = []
    for j in range(len(raw)):
        q = raw[0].scale(transform[0, j])
        for i in range(1, len(raw)):
            q = q + raw[i].scale(transform[i, j])
        elements.append(q)
    _logger.debug(f"Quadratic basis: genus {g}, dimension {len(elements)}")
    return QuadraticBasis(tuple(elements), raw, transform, gram)


@dataclass(frozen=True)
class IsothermicReport:
    ratio: float
    sigma_min: float
    singular_values: np.ndarray
    q_opt_coefficients: np.ndarray
    q_opt: QuadraticDifferential

    def to_dict(self) -> dict[str, Any]:
        return {
            "ratio": self.ratio,
            "sigma_min": self.sigma_min,
            "singular_values": self.singular_values.tolist(),
            "q_opt_coefficients": self.q_opt_coefficients.tolist(),
        }


def multiplier_fields(state: ImmersionState, qbasis: QuadraticBasis) -> np.ndarray:
    """``R(q)_v = A_v Im(conj ψ_q h0_v)`` for every basis element, (V, m, d)."""
    psi = qbasis.vertex_matrix()
    h0 = state.weingarten_vertices
    return state.dual_areas[:, None, None] * np.imag(np.conj(psi)[:, None, :] * h0[:, :, None])


def isothermic_defect(state: ImmersionState, qbasis: QuadraticBasis) -> IsothermicReport:
    """Smallest singular value of ``q ↦ sqrt(A_v) Im(q, h0)_wp`` relative to the largest."""
    if qbasis.dimension not in (2, 6):
        raise UnsupportedGenus("Isothermic defect needs a genus 1 or genus 2 basis")
    fields = multiplier_fields(state, qbasis) / np.sqrt(state.dual_areas)[:, None, None]
    matrix = fields.reshape(-1, qbasis.dimension)
    _, sigma, vt = np.linalg.svd(matrix, full_matrices=False)
    coeffs = vt[-1] * np.sign(vt[-1][np.argmax(np.abs(vt[-1]))])
    ratio = float(sigma[-1] / sigma[0])
    _logger.info(f"Isothermic defect: σ_min/σ_max = {ratio:.3e}")
    return IsothermicReport(ratio, float(sigma[-1]), sigma, coeffs, qbasis.combine(coeffs))


def isothermic_l_field(
    state: ImmersionState,
    q_opt: QuadraticDifferential,
    basis: Optional[HomologyBasis] = None,
    phase_tol: float = 0.1,
) -> dict[str, Any]:
    """L with ``∂1 L = e^{-2λ} ∂1Φ`` and ``∂2 L = -e^{-2λ} ∂2Φ`` in chart coordinates.

    The target 1-form is integrated along every edge from both adjacent faces
    and split for the flat chart metric into an exact part ``dL``, a harmonic
    part carrying the periods of L, and a remainder. The residual is the
    relative size of the remainder, read through face covectors; ``curl`` is
    the largest relative circulation of the sampled form around a face.
    """
    if state.chart is None:
        raise NotConformalChart("The L-field needs global conformal chart coordinates")
    mesh = state.mesh
    conf = state.chart_conformal_factor
    chart_coeff = q_opt.faces * conf * np.exp(2j * state.chart_angles)
    mean = np.sum(state.metric.coord_areas * chart_coeff)
    phase = float(np.angle(mean))
    off_axis = abs(np.sin(phase))
    if off_axis > phase_tol:
        raise NotConformalChart(
            f"q_opt is not a real multiple of dz² in the chart (phase {phase:.3f})", {"phase": phase}
        )
    jac = state.chart_jacobians
    target = np.stack([jac[:, :, 0], -jac[:, :, 1]], axis=2) / conf[:, None, None]
    corners = state.chart.face_corners
    along = np.einsum("fma,fia->fim", target, np.roll(corners, -1, axis=1) - corners)
    theta = np.zeros((mesh.n_edges, state.ambient_dim))
    np.add.at(theta, mesh.edge_of_halfedge, 0.5 * mesh.halfedge_sign[:, None] * along.reshape(-1, state.ambient_dim))

    flat = state.chart_metric
    weights = flat.edge_weights[:, None]
    field = flat.poisson.solve(mesh.d0.T @ (weights * theta))
    rest = theta - mesh.d0 @ field
    basis = canonical_homology_basis(mesh) if basis is None else basis
    harmonic = poincare_duals(mesh, flat, basis).eta
    coeffs = np.linalg.solve(harmonic.T @ (weights * harmonic), harmonic.T @ (weights * rest))
    closed = mesh.d0 @ field + harmonic @ coeffs

    grads = np.swapaxes(flat.face_covectors(closed), 1, 2)
    areas = flat.coord_areas
    misfit = np.sqrt(np.sum(areas[:, None, None] * (grads - target) ** 2))
    scale = np.sqrt(np.sum(areas[:, None, None] * target**2))
    residual = float(misfit / scale)
    circulation = np.linalg.norm(mesh.d1 @ theta, axis=1) / np.linalg.norm(along, axis=(1, 2))
    curl = float(np.max(circulation))
    periods = loop_chains(mesh, basis.loops) @ closed
    _logger.info(f"L-field relative residual {residual:.3e}, curl {curl:.3e}")
    return {"L": field, "periods": periods, "residual": residual, "curl": curl, "gradients": grads, "phase": phase}


@dataclass(frozen=True)
class Frame:
    """Orthonormal tangent frame (e1, e2) per vertex."""

    e1: np.ndarray
    e2: np.ndarray
    degrees: tuple[int, ...] = ()
    residual: float = float("nan")

    @property
    def vectors(self) -> np.ndarray:
        return np.stack([self.e1, self.e2], axis=2)

    def rotated(self, theta: np.ndarray) -> "Frame":
        c, s = np.cos(theta)[:, None], np.sin(theta)[:, None]
        return Frame(c * self.e1 + s * self.e2, -s * self.e1 + c * self.e2, self.degrees)


def connection_angles(mesh: TriangleMesh, frame: Frame) -> np.ndarray:
    """Rotation angle of the frame from tail to head of each edge."""
    i, j = mesh.edges[:, 0], mesh.edges[:, 1]
    e1i, e2i, e1j, e2j = frame.e1[i], frame.e2[i], frame.e1[j], frame.e2[j]
    num = np.einsum("em,em->e", e2i, e1j) - np.einsum("em,em->e", e1i, e2j)
    den = np.einsum("em,em->e", e1i, e1j) + np.einsum("em,em->e", e2i, e2j)
    return np.arctan2(num, den)


def frame_divergence(state: ImmersionState, frame: Frame) -> np.ndarray:
    """Discrete ``d∗(e2·de1)`` per vertex."""
    angles = connection_angles(state.mesh, frame)
    return state.mesh.d0.T @ (state.metric.edge_weights * angles)


def reference_frame(state: ImmersionState, holobasis: HolomorphicBasis, min_norm: float = 1e-8) -> Frame:
    """Frame spanned by the tangent gradient of α¹ and its rotation."""
    cov = state.vertex_covectors(holobasis.alpha[:, 0])[:, :, 0]
    norm = np.linalg.norm(cov, axis=1)
    if norm.min() <= min_norm * np.median(norm):
        raise NonZeroDegreeSeed(f"The harmonic reference field vanishes at vertex {int(np.argmin(norm))}")
    frames = state.vertex_frames
    e1 = np.einsum("vma,va->vm", frames, cov / norm[:, None])
    e2 = np.einsum("vma,va->vm", frames, np.stack([-cov[:, 1], cov[:, 0]], axis=1) / norm[:, None])
    return Frame(e1, e2)


def frame_degree(state: ImmersionState, frame: Frame, loop: Loop, reference: Frame) -> int:
    """Winding number of e1 against the reference frame along a loop."""
    mesh = state.mesh
    theta = np.arctan2(np.einsum("vm,vm->v", frame.e1, reference.e2), np.einsum("vm,vm->v", frame.e1, reference.e1))
    total = 0.0
    for h in loop:
        step = theta[mesh.head[h]] - theta[mesh.tail[h]]
        total += (step + np.pi) % (2 * np.pi) - np.pi
    return int(round(total / (2 * np.pi)))


def minimal_frame(
    state: ImmersionState,
    holobasis: HolomorphicBasis,
    generators: Optional[Sequence[Loop]] = None,
    seed: Optional[Frame] = None,
) -> Frame:
    """Rotate a zero-degree seed frame by the harmonic angle solving ``L θ = -d0ᵀ W A``."""
    if holobasis.genus != 1:
        raise UnsupportedGenus(f"Minimal frames are defined on tori, got genus {holobasis.genus}")
    reference = reference_frame(state, holobasis)
    seed = reference if seed is None else seed
    if generators is None:
        _logger.warning("No homology generators given; the seed frame degree is not checked")
    loops = list(generators) if generators is not None else []
    degrees = tuple(frame_degree(state, seed, loop, reference) for loop in loops)
    if any(degrees):
        raise NonZeroDegreeSeed(f"Seed frame has degrees {degrees} along the generators")
    angles = connection_angles(state.mesh, seed)
    rhs = -(state.mesh.d0.T @ (state.metric.edge_weights * angles))
    theta = state.metric.poisson.solve(rhs)
    frame = seed.rotated(theta)
    residual = float(np.max(np.abs(frame_divergence(state, frame))))
    _logger.info(f"Minimal frame residual {residual:.3e}")
    return Frame(frame.e1, frame.e2, degrees, residual)


def coordinate_frame(state: ImmersionState) -> Frame:
    """Tangent frame from the chart x1 direction (zero degree on grid tori)."""
    if state.chart is None:
        raise NotConformalChart("Coordinate frames need chart coordinates")
    jac = state.chart_jacobians[:, :, 0] * state.face_areas[:, None]
    acc = scatter_to_vertices(state.mesh.faces, np.repeat(jac[:, None], 3, axis=1), state.mesh.n_vertices)
    frames = state.vertex_frames
    cov = np.einsum("vma,vm->va", frames, acc)
    cov /= np.linalg.norm(cov, axis=1, keepdims=True)
    e1 = np.einsum("vma,va->vm", frames, cov)
    e2 = np.einsum("vma,va->vm", frames, np.stack([-cov[:, 1], cov[:, 0]], axis=1))
    return Frame(e1, e2)


def require_frame(frame: Optional[Frame]) -> Frame:
    if frame is None:
        raise FrameMissing("The frame energy needs a tangent frame")
    return frame


def vertex_fields(state: ImmersionState) -> dict[str, np.ndarray]:
    """Plot-ready per-vertex table."""
    h0 = state.weingarten_vertices
    fields = {
        "lambda": state.vertex_lambda,
        "dual_area": state.dual_areas,
        "mean_curvature": np.linalg.norm(state.mean_curvature, axis=1),
        "h0_abs": np.sqrt(np.sum(np.abs(h0) ** 2, axis=1)),
    }
    if state.ambient_dim == 3:
        for c, name in enumerate(("nx", "ny", "nz")):
            fields[name] = state.normals[:, c]
    return fields


def face_fields(state: ImmersionState) -> dict[str, np.ndarray]:
    """Plot-ready per-face table."""
    h0 = state.weingarten_faces
    return {
        "lambda": state.face_lambda,
        "area": state.face_areas,
        "h0_abs": np.sqrt(np.sum(np.abs(h0) ** 2, axis=1)),
        "h0_tangential": np.sqrt(np.sum(np.abs(np.einsum("fma,fm->fa", state.face_frames, h0)) ** 2, axis=1)),
    }


def immersion_state(mesh: TriangleMesh, positions: Optional[np.ndarray] = None, chart: Optional[ConformalChart] = None) -> ImmersionState:
    return ImmersionState(mesh, positions, chart)


def weingarten_normality(state: ImmersionState) -> float:
    """Largest ratio of tangential to total magnitude of the face Weingarten coefficients."""
    h0 = state.weingarten_faces
    frames = state.face_frames
    tangential = np.einsum("fma,fm->fa", frames, h0)
    num = np.sqrt(np.sum(np.abs(tangential) ** 2, axis=1))
    den = np.maximum(np.sqrt(np.sum(np.abs(h0) ** 2, axis=1)), 1e-300)
    return float(np.max(num / den))


def energy(state: ImmersionState, kind: str, frame: Optional[Frame] = None) -> float:
    """Discrete area, Willmore, second-fundamental-form or frame energy."""
    vectors = require_frame(frame).vectors if kind == "frame" else None
    return EnergyFactory.create(kind, state.mesh.faces, vectors).value(state.positions)


def gauss_bonnet_gap(state: ImmersionState) -> float:
    """``W - ¼ 𝕀 - π χ``, which vanishes in the continuum."""
    willmore = energy(state, "willmore")
    second = energy(state, "second_fundamental")
    return willmore - 0.25 * second - np.pi * state.mesh.euler_char
