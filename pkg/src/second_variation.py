# Period Calculus - Second Variation Module
"""Second immersion derivatives of periods, the conformal-chart workspace and the bump probe."""

import logging
from dataclasses import dataclass
from typing import Any, Callable, Optional, Union

import numpy as np

from .constrained import FieldLike, _duals_of, _resolve, dPeriod_immersion
from .exceptions import BadConfig, ChartUnavailable, NotIsothermic, SupportViolation, UnsupportedGenus
from .face_calculus import (
    PinnedPoissonSolver,
    covectors_from_halfedges,
    edge_matrices,
    hat_gradients,
    scatter_to_vertices,
    star_tensor_jet,
)
from .hodge import HolomorphicBasis, PoincareDuals
from .immersion import (
    ImmersionState,
    IsothermicReport,
    QuadraticBasis,
    holomorphic_coefficients,
    isothermic_defect,
    isothermic_l_field,
    product_differential,
    quadratic_basis,
)

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class _Coordinates:
    """Per-face coordinate data: |f| in coordinates, E⁻¹, hat gradients, G0 and ∂Φ."""

    areas: np.ndarray
    inverse_edges: np.ndarray
    hats: np.ndarray
    g0: np.ndarray
    jacobian: np.ndarray

    def covectors(self, state: ImmersionState, cochain: np.ndarray) -> np.ndarray:
        mesh = state.mesh
        cols = [covectors_from_halfedges(self.inverse_edges, mesh.halfedge_values(cochain[:, k])) for k in range(cochain.shape[1])]
        return np.stack(cols, axis=2)

    def gradient(self, state: ImmersionState, values: np.ndarray) -> np.ndarray:
        """Face gradients (F, ..., 2) of vertex values (V, ...)."""
        return np.einsum("fia,fi...->f...a", self.hats, values[state.mesh.faces])

    def divergence(self, state: ImmersionState, face_fields: np.ndarray) -> np.ndarray:
        """``sum_f |f| g_vᵀ Y_f`` for (F, 2, k) fields."""
        corner = self.areas[:, None, None] * np.einsum("fia,fak->fik", self.hats, face_fields)
        return scatter_to_vertices(state.mesh.faces, corner, state.mesh.n_vertices)


def _layout_coordinates(state: ImmersionState) -> _Coordinates:
    metric = state.metric
    n = state.mesh.n_faces
    return _Coordinates(metric.coord_areas, metric.inverse_edges, metric.hat_gradients, np.broadcast_to(np.eye(2), (n, 2, 2)), state.face_frames)


def _chart_coordinates(state: ImmersionState) -> _Coordinates:
    if state.chart is None:
        raise ChartUnavailable("State carries no conformal chart")
    edges = edge_matrices(state.chart.face_corners)
    inverse = np.linalg.inv(edges)
    jac = state.chart_jacobians
    return _Coordinates(0.5 * np.linalg.det(edges), inverse, hat_gradients(inverse), np.einsum("fma,fmb->fab", jac, jac), jac)


def _pairing(areas: np.ndarray, left: np.ndarray, tensor: np.ndarray, right: np.ndarray) -> np.ndarray:
    return np.einsum("f,fal,fab,fbk->lk", areas, left, tensor, right)


def _second_derivative(state: ImmersionState, coords: _Coordinates, alpha: np.ndarray, eta: np.ndarray, w: np.ndarray) -> dict[str, Any]:
    g = alpha.shape[1]
    x = coords.covectors(state, alpha)
    a = coords.covectors(state, eta)
    dw = coords.gradient(state, w)
    nu1 = np.einsum("fma,fmb->fab", dw, coords.jacobian)
    nu1 = nu1 + np.swapaxes(nu1, 1, 2)
    nu2 = 2.0 * np.einsum("fma,fmb->fab", dw, dw)
    first, second = star_tensor_jet(coords.g0, nu1, nu2)
    _, quadratic = star_tensor_jet(coords.g0, nu1, np.zeros_like(nu2))

    rhs = -coords.divergence(state, np.einsum("fab,fbk->fak", first, x))
    solver = state.metric.poisson
    phi_dot = solver.solve(rhs)
    grad_phi = coords.gradient(state, phi_dot)
    grad_phi = np.swapaxes(grad_phi, 1, 2)
    residual = float(np.linalg.norm(solver.laplacian @ phi_dot - (rhs - rhs.mean(axis=0))))

    terms = {}
    for name, left in (("pi0", a[:, :, :g]), ("pi1", a[:, :, g:])):
        terms[name] = {
            "quadratic": 1j * _pairing(coords.areas, left, quadratic, x),
            "second_fundamental": 1j * _pairing(coords.areas, left, second - quadratic, x),
            "cross": 2j * _pairing(coords.areas, left, first, grad_phi),
        }
    return {
        "pi0": sum(terms["pi0"].values()),
        "pi1": sum(terms["pi1"].values()),
        "terms": terms,
        "phi_dot": phi_dot,
        "poisson_residual": residual,
    }


def d2Period_immersion(
    state: ImmersionState,
    holobasis: HolomorphicBasis,
    w: FieldLike,
    duals: Optional[PoincareDuals] = None,
) -> dict[str, Any]:
    """Second derivative of the periods along ``Φ + t w`` with the base forms kept harmonic.

    The star tensor of the pulled-back metric is expanded to second order; the
    result splits into the quadratic Ṁ-part, the ``∇wᵀ∇w`` part and the cross
    term through the first-order harmonic correction φ̇.
    """
    w = _resolve(state, w)
    eta = _duals_of(holobasis, duals).eta
    return _second_derivative(state, _layout_coordinates(state), holobasis.alpha, eta, w)


@dataclass(frozen=True)
class SecondVariationWorkspace:
    """Chart fields of the isothermic second variation for one field w.

    ``v = ∇w·∇L + i ∇w·∇⊥L`` per face, ``y = 2∂_z v`` and ``u = Δ⁻¹y`` per
    vertex. ``a`` solves ``Δa = ∂1(VᵀX) - ∂2(V⊥ᵀX)``, ``b`` solves
    ``Δb = Δa - YᵀX`` and ``c = a - (Δ⁻¹Y)ᵀX``; columns run over the forms.
    """

    l_field: np.ndarray
    l_residual: float
    grad_l: np.ndarray
    v: np.ndarray
    y: np.ndarray
    u: np.ndarray
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    residuals: dict[str, float]

    @property
    def nonlocal_potential(self) -> np.ndarray:
        """``(Δ⁻¹Y)ᵀX`` per vertex and form."""
        return self.a - self.c

    def to_dict(self) -> dict[str, Any]:
        return {
            "l_residual": self.l_residual,
            "V": self.v.real.tolist(),
            "V_perp": self.v.imag.tolist(),
            "Y": [[float(z.real), float(z.imag)] for z in self.y],
            "residuals": dict(self.residuals),
        }


def _relative_residual(solver: PinnedPoissonSolver, u: np.ndarray, rhs: np.ndarray) -> float:
    centered = rhs - rhs.mean(axis=0)
    scale = max(float(np.linalg.norm(centered)), 1e-300)
    return float(np.linalg.norm(solver.laplacian @ u - centered)) / scale


def _centered(values: np.ndarray) -> np.ndarray:
    return values - values.mean(axis=0)


def _spin(v: np.ndarray) -> np.ndarray:
    """``Re(v) S1 + Im(v) S2`` per face."""
    return np.stack([np.stack([v.real, v.imag], axis=1), np.stack([v.imag, -v.real], axis=1)], axis=1)


def second_variation_workspace(state: ImmersionState, holobasis: HolomorphicBasis, w: np.ndarray, report: IsothermicReport) -> SecondVariationWorkspace:
    """L-field, V, Y and the chart potentials a, b, c for the field w."""
    mesh = state.mesh
    coords = _chart_coordinates(state)
    solver = state.chart_metric.poisson
    lfield = isothermic_l_field(state, report.q_opt)
    grad_l = lfield["gradients"]
    grad_w = coords.gradient(state, w)
    v_par = np.einsum("fma,fma->f", grad_w, grad_l)
    v_perp = np.einsum("fm,fm->f", grad_w[:, :, 1], grad_l[:, :, 0]) - np.einsum("fm,fm->f", grad_w[:, :, 0], grad_l[:, :, 1])
    v = v_par + 1j * v_perp

    vertex_areas = scatter_to_vertices(mesh.faces, np.repeat(coords.areas[:, None] / 3.0, 3, axis=1), mesh.n_vertices)
    dbar = coords.hats[:, :, 0] - 1j * coords.hats[:, :, 1]
    y = -scatter_to_vertices(mesh.faces, coords.areas[:, None] * v[:, None] * dbar, mesh.n_vertices) / vertex_areas
    x = coords.covectors(state, holobasis.alpha)
    x_vertices = scatter_to_vertices(mesh.faces, np.repeat((coords.areas[:, None, None] * x)[:, None], 3, axis=1), mesh.n_vertices)
    x_vertices = x_vertices / (3.0 * vertex_areas[:, None, None])

    rhs_a = coords.divergence(state, np.einsum("fab,fbk->fak", _spin(v), x))
    a = solver.solve(rhs_a)
    rhs_u = -vertex_areas[:, None] * np.stack([y.real, y.imag], axis=1)
    u_parts = solver.solve(rhs_u)
    u = u_parts[:, 0] + 1j * u_parts[:, 1]
    c = a - np.einsum("vj,vjk->vk", u_parts, x_vertices)
    rhs_b = vertex_areas[:, None] * np.einsum("vj,vjk->vk", np.stack([y.real, y.imag], axis=1), x_vertices)
    b = a + solver.solve(rhs_b)

    cross = np.einsum("fja,fjka->fk", coords.gradient(state, u_parts), coords.gradient(state, x_vertices))
    rhs_chain = 2.0 * scatter_to_vertices(mesh.faces, np.repeat((coords.areas[:, None] * cross / 3.0)[:, None], 3, axis=1), mesh.n_vertices)
    c_chain = b + solver.solve(rhs_chain)
    residuals = {
        "a": _relative_residual(solver, a, rhs_a),
        "b": _relative_residual(solver, b - a, rhs_b),
        "u": _relative_residual(solver, u_parts, rhs_u),
        "product_rule": float(np.linalg.norm(_centered(c_chain) - _centered(c)) / max(np.linalg.norm(_centered(c)), 1e-300)),
    }
    _logger.debug(f"Chart workspace: L residual {lfield['residual']:.3e}, product rule {residuals['product_rule']:.3e}")
    return SecondVariationWorkspace(lfield["L"], lfield["residual"], grad_l, v, y, u, a, b, c, residuals)


def chart_second_derivative(
    state: ImmersionState,
    holobasis: HolomorphicBasis,
    w: np.ndarray,
    workspace: SecondVariationWorkspace,
    duals: Optional[PoincareDuals] = None,
) -> dict[str, Any]:
    """Second period derivative assembled from the chart workspace.

    With ``e^{-2λ}ν⁰ = V1 S1 + V2 S2`` the star-tensor expansion becomes
    ``|V|² I + 2 (∇̄L·∇w)(V1 S1 + V2 S2) - e^{-2λ} ∂²ν⁰`` paired between A and X,
    and the cross term ``2i ∫ a [∂1(AᵀV) - ∂2(AᵀV⊥)]`` splits along
    ``a = c + (Δ⁻¹Y)ᵀX`` into a nonlocal and a potential part.
    """
    g = holobasis.genus
    coords = _chart_coordinates(state)
    x = coords.covectors(state, holobasis.alpha)
    eta = coords.covectors(state, _duals_of(holobasis, duals).eta)
    grad_w = coords.gradient(state, w)
    grad_l = workspace.grad_l
    spin = _spin(workspace.v)
    trace = np.einsum("fm,fm->f", grad_w[:, :, 0], grad_l[:, :, 0]) - np.einsum("fm,fm->f", grad_w[:, :, 1], grad_l[:, :, 1])
    inv_conf = 0.5 * np.einsum("fma,fma->f", grad_l, grad_l)
    w11 = np.einsum("fm,fm->f", grad_w[:, :, 0], grad_w[:, :, 0])
    w22 = np.einsum("fm,fm->f", grad_w[:, :, 1], grad_w[:, :, 1])
    w12 = np.einsum("fm,fm->f", grad_w[:, :, 0], grad_w[:, :, 1])
    ddnu = _spin((w11 - w22) + 2j * w12)

    tensors = {
        "vanishing_trace": (np.abs(workspace.v) ** 2)[:, None, None] * np.eye(2),
        "trace": 2.0 * trace[:, None, None] * spin,
        "second_fundamental": -inv_conf[:, None, None] * ddnu,
    }
    flux = coords.divergence(state, np.einsum("fab,fbl->fal", spin, eta))
    terms = {}
    for name, cols in (("pi0", slice(0, g)), ("pi1", slice(g, 2 * g))):
        left = eta[:, :, cols]
        terms[name] = {key: 1j * _pairing(coords.areas, left, tensor, x) for key, tensor in tensors.items()}
        terms[name]["nonlocal"] = -2j * flux[:, cols].T @ workspace.nonlocal_potential
        terms[name]["potential"] = -2j * flux[:, cols].T @ workspace.c
    return {"pi0": sum(terms["pi0"].values()), "pi1": sum(terms["pi1"].values()), "terms": terms}


def _require_isothermic(state: ImmersionState, holobasis: HolomorphicBasis, qbasis: Optional[QuadraticBasis], threshold: float) -> IsothermicReport:
    if state.chart is None:
        raise ChartUnavailable("The chart variant needs a global conformal chart")
    if holobasis.genus != 1:
        raise UnsupportedGenus("The chart variant is available for tori only")
    qbasis = quadratic_basis(state, holobasis) if qbasis is None else qbasis
    report = isothermic_defect(state, qbasis)
    if report.ratio > threshold:
        raise NotIsothermic(f"Isothermic defect {report.ratio:.3e} exceeds {threshold:.1e}", report.to_dict())
    return report


def d2Period_immersion_chart(
    state: ImmersionState,
    holobasis: HolomorphicBasis,
    w: FieldLike,
    qbasis: Optional[QuadraticBasis] = None,
    threshold: float = 1e-2,
    duals: Optional[PoincareDuals] = None,
) -> dict[str, Any]:
    """The second derivative at an isothermic torus, assembled in conformal chart coordinates.

    The result carries the workspace it was built from; ``terms`` splits it into
    the vanishing-trace, trace, second-fundamental, nonlocal and potential parts.
    """
    report = _require_isothermic(state, holobasis, qbasis, threshold)
    w = _resolve(state, w)
    workspace = second_variation_workspace(state, holobasis, w, report)
    result = chart_second_derivative(state, holobasis, w, workspace, duals)
    result["workspace"] = workspace
    result["isothermic"] = report.to_dict()
    return result


def bump(s: np.ndarray) -> np.ndarray:
    """``exp(1 - 1/(1 - s²))`` on (-1, 1), zero outside."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


BUMPS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "narrow-x1": lambda x: bump(2.0 * x[:, 0]) * bump(x[:, 1]),
    "narrow-x2": lambda x: bump(x[:, 0]) * bump(2.0 * x[:, 1]),
}


def chart_offsets(state: ImmersionState, center: int) -> np.ndarray:
    """Minimal-image chart offsets to ``center`` in units of the first period length."""
    chart = state.chart
    lattice = np.asarray(chart.lattice, dtype=float)
    offsets = chart.coords - chart.coords[center]
    lattice_coords = np.linalg.solve(lattice.T, offsets.T).T
    offsets = (lattice_coords - np.round(lattice_coords)) @ lattice
    return offsets / np.linalg.norm(lattice[0])


def bump_field(state: ImmersionState, center: int, eps: float, profile: Union[str, Callable[[np.ndarray], np.ndarray]] = "narrow-x1") -> tuple[np.ndarray, np.ndarray]:
    """Scalar bump ``φ((x - x0)/ε)`` per vertex and the normal field ``φ ν̂`` with ν̂ fixed at x0."""
    if isinstance(profile, str):
        if profile not in BUMPS:
            raise BadConfig(f"Unknown bump profile: {profile}")
        profile = BUMPS[profile]
    offsets = chart_offsets(state, center)
    scalar = profile(offsets / eps)
    if np.max(np.linalg.norm(offsets[scalar > 0.0], axis=1), initial=0.0) >= 0.5:
        raise SupportViolation(f"Bump of radius {eps} does not fit in a fundamental domain")
    normal = state.normal_bases[center][:, 0]
    return scalar, scalar[:, None] * normal[None, :]


def bump_prediction(state: ImmersionState, holobasis: HolomorphicBasis, center: int, scalar: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Leading term ``-4i Re(conj ψ_q(x0) ∫ (∂φ)²)`` for ``q = ω^k ⊗ σ^γ``."""
    metric = state.metric
    grads = np.einsum("fia,fi->fa", metric.hat_gradients, scalar[state.mesh.faces])
    ambient = np.einsum("fma,fa->fm", state.face_frames, grads)
    local = np.einsum("ma,fm->fa", state.vertex_frames[center], ambient)
    d_phi = 0.5 * (local[:, 0] - 1j * local[:, 1])
    integral = np.sum(metric.coord_areas * d_phi**2)
    coeffs = holomorphic_coefficients(state, holobasis)
    g = holobasis.genus
    pred = np.zeros((2 * g, g), dtype=complex)
    for gamma in range(2 * g):
        for k in range(g):
            psi = product_differential(coeffs, k, gamma, dual=True).vertices[center]
            pred[gamma, k] = -4j * np.real(np.conj(psi) * integral)
    return pred[:g], pred[g:]


def second_variation_probe(
    state: ImmersionState,
    holobasis: HolomorphicBasis,
    center: int,
    eps_list: list[float],
    profile: str = "narrow-x1",
    qbasis: Optional[QuadraticBasis] = None,
    threshold: float = 1e-2,
) -> dict[str, Any]:
    """Shrinking normal bumps at ``center``: first and second period derivatives per ε."""
    report = _require_isothermic(state, holobasis, qbasis, threshold)
    logger = logging.getLogger("SecondVariationProbe")
    rows = []
    for eps in sorted(eps_list, reverse=True):
        scalar, w = bump_field(state, center, eps, profile)
        d_pi0, d_pi1 = dPeriod_immersion(state, holobasis, w)
        second = d2Period_immersion(state, holobasis, w)
        pred0, pred1 = bump_prediction(state, holobasis, center, scalar)
        rows.append(
            {
                "eps": eps,
                "first": {"pi0": d_pi0, "pi1": d_pi1},
                "second": {"pi0": second["pi0"], "pi1": second["pi1"]},
                "prediction": {"pi0": pred0, "pi1": pred1},
            }
        )
        logger.info(f"ε = {eps}: |∂²Π⁰| = {np.max(np.abs(second['pi0'])):.3e}, |prediction| = {np.max(np.abs(pred0)):.3e}")
    return {"center": center, "profile": profile, "isothermic": report.to_dict(), "rows": rows}
