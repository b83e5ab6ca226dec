# Period Calculus - Hodge Module
"""Discrete Hodge theory and period matrices with OOP principles."""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .exceptions import (
    DegenerateFace,
    GenusZero,
    MetricMeshMismatch,
    SingularPiZero,
    SolverFailure,
)
from .face_calculus import (
    J0,
    PinnedPoissonSolver,
    covectors_from_halfedges,
    edge_matrices,
    face_frames,
    hat_gradients,
    layout_from_lengths,
)
from .mesh import HomologyBasis, TriangleMesh, dual_cochain, loop_chain

_logger = logging.getLogger(__name__)


class DiscreteMetric:  # Encapsulation
    """Per-face metric tensors ``G_f`` in per-face corner coordinates.

    ``representation`` is ``"lengths"`` when the metric came from edge lengths
    or an immersion (``G = I`` in an isometric layout) and ``"tensor"`` otherwise.
    """

    def __init__(
        self,
        mesh: TriangleMesh,
        corners: np.ndarray,
        tensors: np.ndarray,
        representation: str = "tensor",
        frames: Optional[np.ndarray] = None,
        solver_tol: float = 1e-10,
    ):
        if corners.shape != (mesh.n_faces, 3, 2) or tensors.shape != (mesh.n_faces, 2, 2):
            raise MetricMeshMismatch(
                f"Metric arrays {corners.shape}/{tensors.shape} do not match {mesh.n_faces} faces"
            )
        if not np.allclose(tensors, np.swapaxes(tensors, 1, 2), rtol=0.0, atol=1e-14):
            raise DegenerateFace("Metric tensors must be symmetric")
        det = tensors[:, 0, 0] * tensors[:, 1, 1] - tensors[:, 0, 1] * tensors[:, 1, 0]
        if np.any(tensors[:, 0, 0] <= 0.0) or np.any(det <= 0.0):
            raise DegenerateFace(f"Metric tensor not positive definite on face {int(np.argmin(det))}")
        self._mesh = mesh
        self._corners = corners
        self._tensors = tensors
        self._representation = representation
        self._frames = frames
        self._solver_tol = solver_tol

    @classmethod
    def induced(cls, mesh: TriangleMesh, positions: Optional[np.ndarray] = None) -> "DiscreteMetric":
        p = mesh.positions if positions is None else positions
        frames, corners = face_frames(p, mesh.faces)
        tensors = np.broadcast_to(np.eye(2), (mesh.n_faces, 2, 2)).copy()
        return cls(mesh, corners, tensors, "lengths", frames)

    @classmethod
    def from_lengths(cls, mesh: TriangleMesh, lengths: np.ndarray) -> "DiscreteMetric":
        lengths = np.asarray(lengths, dtype=float)
        if lengths.shape != (mesh.n_edges,):
            raise MetricMeshMismatch(f"Expected {mesh.n_edges} edge lengths, got {lengths.shape}")
        per_half = lengths[mesh.edge_of_halfedge].reshape(mesh.n_faces, 3)
        corners = layout_from_lengths(per_half[:, 0], per_half[:, 1], per_half[:, 2])
        tensors = np.broadcast_to(np.eye(2), (mesh.n_faces, 2, 2)).copy()
        return cls(mesh, corners, tensors, "lengths")

    @classmethod
    def from_tensors(cls, mesh: TriangleMesh, corners: np.ndarray, tensors: np.ndarray) -> "DiscreteMetric":
        return cls(mesh, np.asarray(corners, float), np.asarray(tensors, float), "tensor")

    def with_tensors(self, tensors: np.ndarray) -> "DiscreteMetric":
        return DiscreteMetric(self._mesh, self._corners, np.asarray(tensors, float), "tensor", self._frames)

    @property
    def mesh(self) -> TriangleMesh:
        return self._mesh

    @property
    def corners(self) -> np.ndarray:
        return self._corners

    @property
    def tensors(self) -> np.ndarray:
        return self._tensors

    @property
    def representation(self) -> str:
        return self._representation

    @property
    def frames(self) -> Optional[np.ndarray]:
        return self._frames

    @cached_property
    def edge_matrices(self) -> np.ndarray:
        return edge_matrices(self._corners)

    @cached_property
    def inverse_edges(self) -> np.ndarray:
        det = np.linalg.det(self.edge_matrices)
        if np.any(det <= 0.0):
            raise DegenerateFace("Face layout is degenerate or negatively oriented")
        return np.linalg.inv(self.edge_matrices)

    @cached_property
    def coord_areas(self) -> np.ndarray:
        return 0.5 * np.linalg.det(self.edge_matrices)

    @cached_property
    def sqrt_det(self) -> np.ndarray:
        return np.sqrt(np.linalg.det(self._tensors))

    @cached_property
    def areas(self) -> np.ndarray:
        """Metric face areas."""
        return self.coord_areas * self.sqrt_det

    @cached_property
    def star_tensors(self) -> np.ndarray:
        """``M = sqrt(det G) G^-1`` per face."""
        return self.sqrt_det[:, None, None] * np.linalg.inv(self._tensors)

    @cached_property
    def hat_gradients(self) -> np.ndarray:
        return hat_gradients(self.inverse_edges)

    @cached_property
    def stiffness(self) -> np.ndarray:
        g = self.hat_gradients
        return self.coord_areas[:, None, None] * np.einsum("fia,fab,fjb->fij", g, self.star_tensors, g)

    @cached_property
    def edge_weights(self) -> np.ndarray:
        k = self.stiffness
        per_half = -np.stack([k[:, 0, 1], k[:, 1, 2], k[:, 2, 0]], axis=1).reshape(-1)
        weights = np.zeros(self._mesh.n_edges)
        np.add.at(weights, self._mesh.edge_of_halfedge, per_half)
        return weights

    @cached_property
    def laplacian(self) -> sp.csr_matrix:
        d0 = self._mesh.d0
        return (d0.T @ sp.diags(self.edge_weights) @ d0).tocsr()

    @cached_property
    def poisson(self) -> PinnedPoissonSolver:
        return PinnedPoissonSolver(self.laplacian, self._solver_tol)

    def face_covectors(self, cochain: np.ndarray) -> np.ndarray:
        """Per-face covectors of closed cochains: (E,) -> (F, 2), (E, k) -> (F, 2, k)."""
        mesh = self._mesh
        if cochain.shape[0] != mesh.n_edges:
            raise MetricMeshMismatch(f"Cochain has {cochain.shape[0]} entries, mesh has {mesh.n_edges} edges")
        if cochain.ndim == 1:
            return covectors_from_halfedges(self.inverse_edges, mesh.halfedge_values(cochain))
        cols = [self.face_covectors(cochain[:, k]) for k in range(cochain.shape[1])]
        return np.stack(cols, axis=2)

    def vertex_divergence(self, face_fields: np.ndarray) -> np.ndarray:
        """``sum_f |f| g_v^T Y_f`` per vertex for face covector fields ``Y`` (F, 2)."""
        corner = self.coord_areas[:, None] * np.einsum("fia,fa->fi", self.hat_gradients, face_fields)
        out = np.zeros(self._mesh.n_vertices)
        np.add.at(out, self._mesh.faces.reshape(-1), corner.reshape(-1))
        return out


@dataclass(frozen=True)
class OneForm:
    values: np.ndarray
    dual: bool = False

    def __neg__(self) -> "OneForm":
        return OneForm(-self.values, self.dual)


@dataclass(frozen=True)
class PoincareDuals:
    zeta: np.ndarray
    eta: np.ndarray
    gram: np.ndarray
    pairing: np.ndarray

    @property
    def genus(self) -> int:
        return self.eta.shape[1] // 2

    @property
    def eta_a(self) -> np.ndarray:
        return self.eta[:, : self.genus]

    @property
    def eta_b(self) -> np.ndarray:
        return self.eta[:, self.genus :]


@dataclass(frozen=True)
class HolomorphicBasis:
    alpha: np.ndarray
    star_alpha: np.ndarray
    c: np.ndarray
    metric: DiscreteMetric
    duals: Optional[PoincareDuals] = None

    @property
    def genus(self) -> int:
        return self.alpha.shape[1]

    @property
    def omega(self) -> np.ndarray:
        return self.alpha + 1j * self.star_alpha


@dataclass(frozen=True)
class PeriodMatrix:
    pi0: np.ndarray
    pi1: np.ndarray
    pi1_normalized: np.ndarray

    @property
    def genus(self) -> int:
        return self.pi0.shape[0]


def _check_metric(mesh: TriangleMesh, metric: DiscreteMetric) -> None:
    if metric.mesh is not mesh and not (
        metric.mesh.n_faces == mesh.n_faces and np.array_equal(metric.mesh.faces, mesh.faces)
    ):
        raise MetricMeshMismatch("Metric was built on a different mesh")


def dual_cochains(mesh: TriangleMesh, basis: HomologyBasis) -> np.ndarray:
    """Integer Poincare-dual cochains of all basis loops, columns ordered (a, b)."""
    return np.stack([dual_cochain(mesh, loop) for loop in basis.loops], axis=1).astype(float)


def loop_chains(mesh: TriangleMesh, loops) -> np.ndarray:
    return np.stack([loop_chain(mesh, loop) for loop in loops], axis=0)


def hodge_star(metric: DiscreteMetric, form: OneForm) -> OneForm:
    """Diagonal star of a primal cochain; the result is a dual cochain."""
    if form.values.shape[0] != metric.mesh.n_edges:
        raise MetricMeshMismatch("Form and metric live on different meshes")
    if form.dual:
        raise MetricMeshMismatch("hodge_star expects a primal cochain")
    weights = metric.edge_weights if form.values.ndim == 1 else metric.edge_weights[:, None]
    return OneForm(weights * form.values, dual=True)


def face_hodge_star(metric: DiscreteMetric, covectors: np.ndarray) -> np.ndarray:
    """Face-wise star ``J(h) X`` with ``J(h) = J0 sqrt(det G) G^-1``."""
    jh = np.einsum("ab,fbc->fac", J0, metric.star_tensors)
    return np.einsum("fab,fb...->fa...", jh, covectors)


def wedge_pairing(metric: DiscreteMetric, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """``∫ x ∧ y`` for closed cochains (columns give the pairing matrix)."""
    xs = metric.face_covectors(x)
    ys = metric.face_covectors(y)
    if xs.ndim == 2:
        xs, ys = xs[:, :, None], ys[:, :, None]
    det = xs[:, 0, :, None] * ys[:, 1, None, :] - xs[:, 1, :, None] * ys[:, 0, None, :]
    out = np.einsum("f,fij->ij", metric.coord_areas, det)
    return out[0, 0] if x.ndim == 1 else out


def poincare_duals(mesh: TriangleMesh, metric: DiscreteMetric, basis: HomologyBasis) -> PoincareDuals:
    """Harmonic representatives of the duals of the basis loops."""
    _check_metric(mesh, metric)
    if basis.genus < 1:
        raise GenusZero("Poincare duals need genus >= 1")
    zeta = dual_cochains(mesh, basis)
    weights = metric.edge_weights[:, None]
    u = metric.poisson.solve(mesh.d0.T @ (weights * zeta))
    eta = zeta - mesh.d0 @ u
    gram = zeta.T @ (weights * eta)
    gram = 0.5 * (gram + gram.T)
    pairing = wedge_pairing(metric, eta, eta)
    return PoincareDuals(zeta, eta, gram, pairing)


def harmonic_basis(mesh: TriangleMesh, metric: DiscreteMetric, basis: HomologyBasis) -> HolomorphicBasis:
    """Harmonic forms with ``∫_{a_j} α^k = δ_jk`` and ``∫_{a_j} ∗α^k = 0``."""
    if mesh.genus < 1 or basis.genus < 1:
        raise GenusZero(f"Harmonic basis needs genus >= 1, mesh has genus {mesh.genus}")
    duals = poincare_duals(mesh, metric, basis)
    g = basis.genus
    q = duals.gram
    q_aa, q_ab = q[:g, :g], q[:g, g:]
    try:
        mix = -np.linalg.solve(q_aa, q_ab)
    except np.linalg.LinAlgError as e:
        raise SolverFailure(f"Singular a-block of the harmonic Gram matrix: {e}") from e
    alpha = duals.eta_b + duals.eta_a @ mix
    star_alpha = metric.edge_weights[:, None] * alpha
    c = -mix
    _logger.debug(f"Harmonic basis: genus {g}, Gram condition {np.linalg.cond(q):.3e}")
    return HolomorphicBasis(alpha, star_alpha, c, metric, duals)


def corrected_harmonic(mesh: TriangleMesh, h0_basis: HolomorphicBasis, metric: DiscreteMetric) -> HolomorphicBasis:
    """Add the exact correction making the base harmonic forms co-closed for ``metric``."""
    _check_metric(mesh, metric)
    weights = metric.edge_weights[:, None]
    phi = metric.poisson.solve(-(mesh.d0.T @ (weights * h0_basis.alpha)))
    phi = phi.reshape(mesh.n_vertices, -1)
    alpha = h0_basis.alpha + mesh.d0 @ phi
    return HolomorphicBasis(alpha, weights * alpha, h0_basis.c, metric, None)


def period_matrix(
    mesh: TriangleMesh,
    metric: DiscreteMetric,
    holobasis: HolomorphicBasis,
    basis: HomologyBasis,
    zeta: Optional[np.ndarray] = None,
    max_condition: float = 1e12,
) -> PeriodMatrix:
    """Periods of ``ω^k = α^k + i ∗α^k`` along the a- and b-loops."""
    _check_metric(mesh, metric)
    g = basis.genus
    zeta = dual_cochains(mesh, basis) if zeta is None else zeta
    chains = loop_chains(mesh, basis.loops)
    real = chains @ holobasis.alpha
    imag = zeta.T @ (metric.edge_weights[:, None] * holobasis.alpha)
    periods = real + 1j * imag
    pi0, pi1 = periods[:g], periods[g:]
    cond = np.linalg.cond(pi0)
    if not np.isfinite(cond) or cond > max_condition:
        raise SingularPiZero(f"Pi^0 condition number {cond:.3e} exceeds {max_condition:.1e}")
    return PeriodMatrix(pi0, pi1, np.linalg.solve(pi0, pi1))


def riemann_defects(periods: PeriodMatrix) -> dict[str, float]:
    tau = periods.pi1_normalized
    symmetry = float(np.linalg.norm(tau - tau.T) / np.linalg.norm(tau))
    imag = 0.5 * (tau.imag + tau.imag.T)
    return {"symmetry_defect": symmetry, "min_imag_eigenvalue": float(np.linalg.eigvalsh(imag).min())}


def reduce_modulus(tau: complex, max_iter: int = 100) -> complex:
    """Map a genus-1 modulus into the standard fundamental domain."""
    tau = complex(tau)
    for _ in range(max_iter):
        tau = tau - round(tau.real)
        if abs(tau) < 1.0 - 1e-15:
            tau = -1.0 / tau
        else:
            break
    return tau
