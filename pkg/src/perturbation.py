# Period Calculus - Perturbation Module
"""Chart metric-variation calculus for periods with OOP principles."""

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from .exceptions import MetricMeshMismatch, OpenPath, SolverFailure, SupportViolation
from .face_calculus import J0, sym_part
from .hodge import (
    DiscreteMetric,
    HolomorphicBasis,
    PeriodMatrix,
    PoincareDuals,
    corrected_harmonic,
    period_matrix,
)
from .mesh import HomologyBasis, TriangleMesh

S1 = np.array([[1.0, 0.0], [0.0, -1.0]])
S2 = np.array([[0.0, 1.0], [1.0, 0.0]])
I2 = np.eye(2)


@dataclass(frozen=True)
class TraceFree:
    nu0: np.ndarray
    intrinsic: np.ndarray


def trace_free(nu: np.ndarray, lam: Optional[np.ndarray] = None) -> TraceFree:
    """Trace-free part ``ν - ½ tr(ν) I`` and the intrinsic ``ν - ½ tr_{h⁰}(ν) h⁰``."""
    nu = np.asarray(nu, dtype=float)
    half_trace = 0.5 * (nu[..., 0, 0] + nu[..., 1, 1])
    nu0 = nu - half_trace[..., None, None] * I2
    if lam is None:
        return TraceFree(nu0, nu0.copy())
    conf = np.exp(2.0 * np.asarray(lam, dtype=float))
    intrinsic = nu - 0.5 * (half_trace * 2.0 / conf)[..., None, None] * (conf[..., None, None] * I2)
    return TraceFree(nu0, intrinsic)


def det2(a: np.ndarray) -> np.ndarray:
    return a[..., 0, 0] * a[..., 1, 1] - a[..., 0, 1] * a[..., 1, 0]


def hodge_star_matrix(tensors: np.ndarray) -> np.ndarray:
    """``J(h) = J0 sqrt(det G) G^-1`` for a stack of metric tensors."""
    tensors = np.asarray(tensors, dtype=float)
    m = np.sqrt(det2(tensors))[..., None, None] * np.linalg.inv(tensors)
    return np.einsum("ab,...bc->...ac", J0, m)


def hodge_star_variation(nu: np.ndarray, lam: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(J0ᵀ ∂_ν J, J0ᵀ ∂²_ν J)`` at ``h⁰ = e^{2λ} I``."""
    nu = np.asarray(nu, dtype=float)
    lam = np.asarray(lam, dtype=float)
    nu0 = trace_free(nu).nu0
    e2 = np.exp(-2.0 * lam)[..., None, None]
    e4 = np.exp(-4.0 * lam)[..., None, None]
    first = -e2 * nu0
    second = 2.0 * e4 * np.einsum("...ab,...bc->...ac", nu0, nu) + e4 * det2(nu0)[..., None, None] * I2
    return first, second


@dataclass(frozen=True)
class ChartForms:
    """Face covectors of α^k (X), η_{a_l} (A) and η_{b_l} (B), each (F, 2, g)."""

    X: np.ndarray
    A: np.ndarray
    B: np.ndarray

    @property
    def genus(self) -> int:
        return self.X.shape[2]


class ChartMetric(ABC):  # Abstraction
    """Base conformal metric ``e^{2λ} I`` on chart faces plus a perturbation ν."""

    def __init__(self, base: DiscreteMetric, lam_face: np.ndarray, nu_face: np.ndarray):
        self._logger = logging.getLogger(self.__class__.__name__)
        self._base = base
        self._lam = np.asarray(lam_face, dtype=float)
        self._nu = sym_part(np.asarray(nu_face, dtype=float))
        self.check_support(self._nu)

    @property
    def base(self) -> DiscreteMetric:
        return self._base

    @property
    def mesh(self) -> TriangleMesh:
        return self._base.mesh

    @property
    def lam(self) -> np.ndarray:
        return self._lam

    @property
    def nu(self) -> np.ndarray:
        return self._nu

    @property
    @abstractmethod
    def backend(self) -> str:
        pass

    @abstractmethod  # Abstraction
    def check_support(self, nu: np.ndarray) -> None:
        pass

    @abstractmethod  # Abstraction
    def solve_poisson(self, rhs: np.ndarray) -> np.ndarray:
        pass

    def metric(self, t: float, nu: Optional[np.ndarray] = None) -> DiscreteMetric:
        nu = self._nu if nu is None else sym_part(np.asarray(nu, dtype=float))
        tensors = np.exp(2.0 * self._lam)[:, None, None] * I2 + t * nu
        return self._base.with_tensors(tensors)

    def resolve_nu(self, nu: Optional[np.ndarray]) -> np.ndarray:
        if nu is None:
            return self._nu
        nu = sym_part(np.asarray(nu, dtype=float))
        if nu.shape != self._nu.shape:
            raise MetricMeshMismatch(f"ν has shape {nu.shape}, expected {self._nu.shape}")
        self.check_support(nu)
        return nu


class GridChartMetric(ChartMetric):  # Inheritance
    """Periodic N×N grid chart of a flat torus; vertex ``i + N j`` sits at node (i, j)."""

    def __init__(self, base: DiscreteMetric, n: int, node_lambda: np.ndarray, node_nu: np.ndarray):
        mesh = base.mesh
        if mesh.n_vertices != n * n:
            raise MetricMeshMismatch(f"Grid chart needs {n * n} vertices, mesh has {mesh.n_vertices}")
        self._n = n
        self._node_lambda = np.asarray(node_lambda, dtype=float).reshape(-1)
        self._node_nu = sym_part(np.asarray(node_nu, dtype=float).reshape(-1, 2, 2))
        lam_face = self._node_lambda[mesh.faces].mean(axis=1)
        nu_face = self._node_nu[mesh.faces].mean(axis=1)
        base_conformal = base.with_tensors(np.exp(2.0 * lam_face)[:, None, None] * I2)
        super().__init__(base_conformal, lam_face, nu_face)
        self._symbol = self._stencil_symbol()

    @property
    def backend(self) -> str:  # Polymorphism
        return "grid"

    @property
    def n(self) -> int:
        return self._n

    @property
    def node_lambda(self) -> np.ndarray:
        return self._node_lambda

    @property
    def node_nu(self) -> np.ndarray:
        return self._node_nu

    def node_to_face(self, node_nu: np.ndarray) -> np.ndarray:
        node_nu = sym_part(np.asarray(node_nu, dtype=float).reshape(-1, 2, 2))
        return node_nu[self.mesh.faces].mean(axis=1)

    def check_support(self, nu: np.ndarray) -> None:  # Polymorphism
        if not np.all(np.isfinite(nu)):
            raise SupportViolation("ν contains non-finite values")

    def _stencil_symbol(self) -> np.ndarray:  # Encapsulation
        mesh = self.mesh
        n = self._n
        weights = self.base.edge_weights
        k = np.arange(n)
        ki, kj = np.meshgrid(k, k, indexing="xy")
        symbol = np.zeros((n, n))
        for di, dj in ((1, 0), (0, 1), (1, 1)):
            try:
                edge = mesh.edge_of_halfedge[mesh.halfedge(0, di + n * dj)]
            except OpenPath:
                continue
            theta = 2.0 * np.pi * (ki * di + kj * dj) / n
            symbol += weights[edge] * (2.0 - 2.0 * np.cos(theta))
        return symbol

    def solve_poisson(self, rhs: np.ndarray) -> np.ndarray:  # Polymorphism
        n = self._n
        rhs = np.asarray(rhs, dtype=float)
        cols = rhs.reshape(rhs.shape[0], -1)
        out = np.empty_like(cols)
        laplacian = self.base.laplacian
        for c in range(cols.shape[1]):
            b = cols[:, c] - cols[:, c].mean()
            spectrum = np.fft.fft2(b.reshape(n, n))
            with np.errstate(divide="ignore", invalid="ignore"):
                spectrum = np.where(self._symbol > 0.0, spectrum / self._symbol, 0.0)
            u = np.real(np.fft.ifft2(spectrum)).reshape(-1)
            residual = np.linalg.norm(laplacian @ u - b)
            scale = max(np.linalg.norm(b), 1e-300)
            if residual > 1e-10 * scale and residual > 1e-14:
                raise SolverFailure(
                    f"Spectral Poisson residual {residual / scale:.3e} exceeds 1e-10",
                    {"relative_residual": residual / scale},
                )
            out[:, c] = u
        self._logger.debug(f"Spectral Poisson solve for {cols.shape[1]} right-hand side(s)")
        return out.reshape(rhs.shape)


class PatchChartMetric(ChartMetric):  # Inheritance
    """A face patch of a general mesh in its orthonormal face frames (λ = 0)."""

    def __init__(self, base: DiscreteMetric, patch_faces: np.ndarray, nu_face: np.ndarray):
        mesh = base.mesh
        inside = np.zeros(mesh.n_faces, dtype=bool)
        inside[np.asarray(patch_faces, dtype=np.int64)] = True
        outer_vertices = np.zeros(mesh.n_vertices, dtype=bool)
        outer_vertices[mesh.faces[~inside].reshape(-1)] = True
        self._interior = inside & ~outer_vertices[mesh.faces].any(axis=1)
        self._patch = inside
        super().__init__(base, np.zeros(mesh.n_faces), nu_face)

    @property
    def backend(self) -> str:  # Polymorphism
        return "patch"

    @property
    def interior_faces(self) -> np.ndarray:
        return np.flatnonzero(self._interior)

    def check_support(self, nu: np.ndarray) -> None:  # Polymorphism
        active = np.abs(nu).reshape(nu.shape[0], -1).max(axis=1) > 0.0
        bad = np.flatnonzero(active & ~self._interior)
        if bad.size:
            raise SupportViolation(
                f"ν is nonzero on {bad.size} face(s) outside the patch interior",
                {"faces": bad[:10].tolist()},
            )

    def solve_poisson(self, rhs: np.ndarray) -> np.ndarray:  # Polymorphism
        return self.base.poisson.solve(rhs)


def chart_forms(chart: ChartMetric, holobasis: HolomorphicBasis, duals: Optional[PoincareDuals] = None) -> ChartForms:
    duals = holobasis.duals if duals is None else duals
    if duals is None:
        raise MetricMeshMismatch("Chart forms need the Poincare duals of the base basis")
    base = chart.base
    return ChartForms(
        base.face_covectors(holobasis.alpha),
        base.face_covectors(duals.eta_a),
        base.face_covectors(duals.eta_b),
    )


def _pairing(areas: np.ndarray, left: np.ndarray, tensor: np.ndarray, right: np.ndarray) -> np.ndarray:
    """``sum_f |f| L_fᵀ T_f R_f`` for all column pairs: (F,2,g) x (F,2,2) x (F,2,g) -> (g, g)."""
    return np.einsum("f,fal,fab,fbk->lk", areas, left, tensor, right)


def dPeriod_metric(chart: ChartMetric, forms: ChartForms, nu: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
    """First derivatives ``-i sum |f| e^{-2λ} Aᵀ ν⁰ X`` (and with B)."""
    nu = chart.resolve_nu(nu)
    first, _ = hodge_star_variation(nu, chart.lam)
    areas = chart.base.coord_areas
    d_pi0 = 1j * _pairing(areas, forms.A, first, forms.X)
    d_pi1 = 1j * _pairing(areas, forms.B, first, forms.X)
    return d_pi0, d_pi1


def poisson_rhs(chart: ChartMetric, first: np.ndarray, forms: ChartForms) -> np.ndarray:
    """Right-hand sides ``-sum_f |f| g_vᵀ (J0ᵀ∂J) X^k`` per vertex, (V, g)."""
    base = chart.base
    flux = np.einsum("fab,fbk->fak", first, forms.X)
    return np.stack([-base.vertex_divergence(flux[:, :, k]) for k in range(forms.genus)], axis=1)


def d2Period_metric(chart: ChartMetric, forms: ChartForms, nu: Optional[np.ndarray] = None) -> dict[str, Any]:
    """Second derivatives: the ν⁰ν term, the det(ν⁰) term and the Poisson cross term."""
    nu = chart.resolve_nu(nu)
    base = chart.base
    areas = base.coord_areas
    lam = chart.lam
    nu0 = trace_free(nu).nu0
    e4 = np.exp(-4.0 * lam)[:, None, None]
    first, _ = hodge_star_variation(nu, lam)
    quad_tensor = 2.0 * e4 * np.einsum("fab,fbc->fac", nu0, nu)
    det_tensor = e4 * det2(nu0)[:, None, None] * I2

    rhs = poisson_rhs(chart, first, forms)
    phi_dot = chart.solve_poisson(rhs)
    grad_phi = np.einsum("fia,fik->fak", base.hat_gradients, phi_dot[base.mesh.faces])
    residual = float(np.linalg.norm(base.laplacian @ phi_dot - (rhs - rhs.mean(axis=0))))

    terms = {}
    for name, left in (("pi0", forms.A), ("pi1", forms.B)):
        terms[name] = {
            "quadratic": 1j * _pairing(areas, left, quad_tensor, forms.X),
            "determinant": 1j * _pairing(areas, left, det_tensor, forms.X),
            "cross": 2j * _pairing(areas, left, first, grad_phi),
        }
    d2_pi0 = sum(terms["pi0"].values())
    d2_pi1 = sum(terms["pi1"].values())
    return {"pi0": d2_pi0, "pi1": d2_pi1, "terms": terms, "phi_dot": phi_dot, "poisson_residual": residual}


def periods_along(
    chart: ChartMetric,
    h0_basis: HolomorphicBasis,
    basis: HomologyBasis,
    t: float,
    nu: Optional[np.ndarray] = None,
    zeta: Optional[np.ndarray] = None,
) -> PeriodMatrix:
    """Periods of the corrected basis at ``h⁰ + tν``."""
    metric = chart.metric(t, chart.resolve_nu(nu))
    corrected = corrected_harmonic(chart.mesh, h0_basis, metric)
    return period_matrix(chart.mesh, metric, corrected, basis, zeta=zeta)


def chart_fields_to_dict(chart: ChartMetric, forms: ChartForms) -> dict[str, Any]:
    """Regression-fixture schema: face-indexed λ, ν, X, A, B as nested lists."""
    return {
        "backend": chart.backend,
        "n_faces": int(chart.mesh.n_faces),
        "genus": forms.genus,
        "lambda": chart.lam.tolist(),
        "nu": chart.nu.tolist(),
        "X": forms.X.tolist(),
        "A": forms.A.tolist(),
        "B": forms.B.tolist(),
    }


def chart_fields_from_dict(data: dict[str, Any]) -> tuple[np.ndarray, np.ndarray, ChartForms]:
    lam = np.asarray(data["lambda"], dtype=float)
    nu = np.asarray(data["nu"], dtype=float)
    forms = ChartForms(
        np.asarray(data["X"], dtype=float),
        np.asarray(data["A"], dtype=float),
        np.asarray(data["B"], dtype=float),
    )
    if lam.shape[0] != int(data["n_faces"]) or forms.genus != int(data["genus"]):
        raise MetricMeshMismatch("Chart fixture arrays are inconsistent with the header")
    return lam, nu, forms
