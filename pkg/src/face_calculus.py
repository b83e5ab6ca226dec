# Period Calculus - Face Calculus Module
"""Per-face linear-element calculus and pinned Poisson solves."""

import logging

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import DegenerateFace, SolverFailure

J0 = np.array([[0.0, -1.0], [1.0, 0.0]])


def face_frames(positions: np.ndarray, faces: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal face frames (F, m, 2) and corner coordinates (F, 3, 2).

    The first frame vector follows the first edge; the third corner has a
    positive second coordinate.
    """
    p0 = positions[faces[:, 0]]
    d1 = positions[faces[:, 1]] - p0
    d2 = positions[faces[:, 2]] - p0
    l01 = np.linalg.norm(d1, axis=1)
    e1 = d1 / l01[:, None]
    x2 = np.einsum("ij,ij->i", d2, e1)
    r = d2 - x2[:, None] * e1
    y2 = np.linalg.norm(r, axis=1)
    if np.any(y2 <= 0.0):
        raise DegenerateFace("Collinear face while building face frames")
    e2 = r / y2[:, None]
    frames = np.stack([e1, e2], axis=2)
    corners = np.zeros((faces.shape[0], 3, 2))
    corners[:, 1, 0] = l01
    corners[:, 2, 0] = x2
    corners[:, 2, 1] = y2
    return frames, corners


def layout_from_lengths(l01: np.ndarray, l12: np.ndarray, l20: np.ndarray) -> np.ndarray:
    """Corner coordinates of triangles with the given side lengths."""
    if np.any(l01 + l12 <= l20) or np.any(l12 + l20 <= l01) or np.any(l20 + l01 <= l12):
        raise DegenerateFace("Edge lengths violate the triangle inequality")
    x2 = (l01**2 + l20**2 - l12**2) / (2.0 * l01)
    y2 = np.sqrt(np.maximum(l20**2 - x2**2, 0.0))
    corners = np.zeros((l01.size, 3, 2))
    corners[:, 1, 0] = l01
    corners[:, 2, 0] = x2
    corners[:, 2, 1] = y2
    return corners


def edge_matrices(corners: np.ndarray) -> np.ndarray:
    """Columns ``c1 - c0`` and ``c2 - c0`` per face, shape (F, 2, 2)."""
    return np.stack([corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0]], axis=2)


def hat_gradients(inverse_edges: np.ndarray) -> np.ndarray:
    """Coordinate differentials of the three barycentric functions, (F, 3, 2)."""
    g1 = inverse_edges[:, 0, :]
    g2 = inverse_edges[:, 1, :]
    return np.stack([-g1 - g2, g1, g2], axis=1)


def covectors_from_halfedges(inverse_edges: np.ndarray, values: np.ndarray) -> np.ndarray:
    """Face covectors of a closed cochain given its halfedge values (F, 3)."""
    rhs = np.stack([values[:, 0], -values[:, 2]], axis=1)
    return np.einsum("fji,fj->fi", inverse_edges, rhs)


def sym_part(a: np.ndarray) -> np.ndarray:
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def scatter_to_vertices(faces: np.ndarray, corner_values: np.ndarray, n_vertices: int) -> np.ndarray:
    """Sum per-corner values (F, 3, ...) onto vertices."""
    out = np.zeros((n_vertices,) + corner_values.shape[2:], dtype=corner_values.dtype)
    np.add.at(out, faces.reshape(-1), corner_values.reshape((-1,) + corner_values.shape[2:]))
    return out


class PinnedPoissonSolver:  # Encapsulation
    """Mean-zero solves of ``L u = b`` through the bordered system [[L, 1], [1ᵀ, 0]]."""

    def __init__(self, laplacian: sp.spmatrix, tol: float = 1e-10):
        self._logger = logging.getLogger(self.__class__.__name__)
        self._laplacian = sp.csr_matrix(laplacian)
        self._tol = tol
        n = self._laplacian.shape[0]
        ones = sp.csr_matrix(np.ones((n, 1)))
        bordered = sp.bmat([[self._laplacian, ones], [ones.T, None]], format="csc")
        try:
            self._lu = spla.splu(bordered)
        except RuntimeError as e:
            raise SolverFailure(f"Laplacian factorization failed: {e}") from e

    @property
    def laplacian(self) -> sp.csr_matrix:
        return self._laplacian

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs, dtype=float)
        squeeze = rhs.ndim == 1
        b = rhs.reshape(rhs.shape[0], -1)
        b = b - b.mean(axis=0, keepdims=True)
        padded = np.vstack([b, np.zeros((1, b.shape[1]))])
        u = self._lu.solve(padded)[:-1]
        residual = np.linalg.norm(self._laplacian @ u - b, axis=0)
        scale = np.maximum(np.linalg.norm(b, axis=0), 1e-300)
        worst = float(np.max(residual / scale)) if b.size else 0.0
        if worst > self._tol and float(np.max(residual)) > 1e-14:
            raise SolverFailure(
                f"Poisson solve residual {worst:.3e} exceeds {self._tol:.1e}",
                {"relative_residual": worst},
            )
        self._logger.debug(f"Poisson solve: {b.shape[1]} right-hand side(s), residual {worst:.2e}")
        return u[:, 0] if squeeze else u


def adjugate2(a: np.ndarray) -> np.ndarray:
    """``tr(a) I - a``, the adjugate of a stack of 2×2 matrices."""
    trace = a[..., 0, 0] + a[..., 1, 1]
    return trace[..., None, None] * np.eye(2) - a


def star_tensor_jet(g0: np.ndarray, nu1: np.ndarray, nu2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second t-derivatives of ``M = sqrt(det G) G^-1`` at t = 0 along
    ``G(t) = G0 + t ν1 + ½ t² ν2``.
    """
    adj0 = adjugate2(g0)
    det0 = np.linalg.det(g0)
    p = np.einsum("...ab,...ba->...", adj0, nu1)
    q = np.einsum("...ab,...ba->...", adj0, nu2) + 2.0 * np.linalg.det(nu1)
    s0 = det0**-0.5
    s1 = -0.5 * det0**-1.5 * p
    s2 = 0.75 * det0**-2.5 * p**2 - 0.5 * det0**-1.5 * q
    first = adjugate2(nu1) * s0[..., None, None] + adj0 * s1[..., None, None]
    second = (
        adjugate2(nu2) * s0[..., None, None]
        + 2.0 * adjugate2(nu1) * s1[..., None, None]
        + adj0 * s2[..., None, None]
    )
    return first, second
