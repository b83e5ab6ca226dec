# Period Calculus - Constrained Variations Module
"""Immersion derivatives of periods, constraint Jacobians, multipliers and the projected flow."""

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Optional, Union

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energies import EnergyFactory
from .exceptions import (
    BadConfig,
    DegenerateFace,
    FrameResidualTooLarge,
    LineSearchFailure,
    MeshMismatch,
    NewtonCorrectionFailure,
    NotIndefinite,
    RankAmbiguity,
    UnsupportedGenus,
)
from .face_calculus import scatter_to_vertices
from .hodge import (
    HolomorphicBasis,
    PeriodMatrix,
    PoincareDuals,
    corrected_harmonic,
    harmonic_basis,
    period_matrix,
    poincare_duals,
)
from .immersion import (
    Frame,
    ImmersionState,
    QuadraticBasis,
    frame_divergence,
    holomorphic_coefficients,
    multiplier_fields,
    product_differential,
    quadratic_basis,
    require_frame,
)
from .mesh import HomologyBasis

_logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConstraintSpec:
    """Real combinations ``sum t_kl Im Π⁰_kl + s_pq Im Π¹_pq``, indexed [j, loop, form]."""

    t: np.ndarray
    s: np.ndarray
    targets: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.t.shape != self.s.shape or self.t.ndim != 3:
            raise BadConfig(f"Coefficient families have shapes {self.t.shape} and {self.s.shape}")
        if self.n:
            coeffs = np.concatenate([self.t.reshape(self.n, -1), self.s.reshape(self.n, -1)], axis=1)
            if np.linalg.matrix_rank(coeffs) < self.n:
                raise BadConfig("Constraint functionals are linearly dependent")

    @property
    def n(self) -> int:
        return self.t.shape[0]

    @property
    def genus(self) -> int:
        return self.t.shape[1]

    @classmethod
    def full_periods(cls, g: int) -> "ConstraintSpec":
        n = 2 * g * g
        t = np.zeros((n, g, g))
        s = np.zeros((n, g, g))
        for j in range(g * g):
            t[j].flat[j] = 1.0
            s[g * g + j].flat[j] = 1.0
        return cls(t, s)

    @classmethod
    def empty(cls, g: int) -> "ConstraintSpec":
        return cls(np.zeros((0, g, g)), np.zeros((0, g, g)))

    def with_targets(self, targets: np.ndarray) -> "ConstraintSpec":
        return ConstraintSpec(self.t, self.s, np.asarray(targets, dtype=float))

    def combine(self, im_pi0: np.ndarray, im_pi1: np.ndarray) -> np.ndarray:
        """Apply the functionals to (loop, form, ...) arrays of Im Π⁰ and Im Π¹ values."""
        return np.einsum("jlk,lk...->j...", self.t, im_pi0) + np.einsum("jlk,lk...->j...", self.s, im_pi1)


@dataclass(frozen=True)
class VariationField:
    """Per-vertex displacement, optionally restricted to normal directions."""

    values: np.ndarray
    normal_only: bool = False
    excluded: tuple[int, ...] = ()

    def resolve(self, state: ImmersionState) -> np.ndarray:
        w = np.asarray(self.values, dtype=float)
        if w.shape != state.positions.shape:
            raise MeshMismatch(f"Variation field has shape {w.shape}, expected {state.positions.shape}")
        if not np.all(np.isfinite(w)):
            raise MeshMismatch("Variation field has non-finite entries")
        if self.normal_only:
            w = np.einsum("vmn,vn->vm", state.normal_projectors, w)
        if self.excluded:
            w = w.copy()
            w[list(self.excluded)] = 0.0
        return w


FieldLike = Union[np.ndarray, VariationField]


def _resolve(state: ImmersionState, w: FieldLike) -> np.ndarray:
    return w.resolve(state) if isinstance(w, VariationField) else VariationField(np.asarray(w)).resolve(state)


def _duals_of(holobasis: HolomorphicBasis, duals: Optional[PoincareDuals]) -> PoincareDuals:
    duals = holobasis.duals if duals is None else duals
    if duals is None:
        raise MeshMismatch("Immersion derivatives need the Poincare duals at the current metric")
    return duals


def period_jacobian(state: ImmersionState, alpha: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """Exact derivative of ``Im Π[γ, k]`` in every vertex direction, (2g, g, V, m).

    Per face the derivative is ``-|f| Aᵀ ν⁰(w) X`` with ``ν(w) = D_wᵀT + TᵀD_w``,
    A the harmonic dual of γ and X the form α^k, both at the current metric.
    """
    metric = state.metric
    frames = state.face_frames
    e_inv = metric.inverse_edges
    a = metric.face_covectors(eta)
    x = metric.face_covectors(alpha)
    e_inv_a = np.einsum("fkc,fcp->fkp", e_inv, a)
    e_inv_x = np.einsum("fkc,fcq->fkq", e_inv, x)
    t_a = np.einsum("fmc,fcp->fmp", frames, a)
    t_x = np.einsum("fmc,fcq->fmq", frames, x)
    a_x = np.einsum("fcp,fcq->fpq", a, x)
    t_e = np.einsum("fmc,fkc->fkm", frames, e_inv)
    grads = (
        e_inv_a[:, :, None, :, None] * t_x[:, None, :, None, :]
        + e_inv_x[:, :, None, None, :] * t_a[:, None, :, :, None]
        - a_x[:, None, None, :, :] * t_e[:, :, :, None, None]
    )
    grads = -metric.coord_areas[:, None, None, None, None] * grads
    corners = np.stack([-grads[:, 0] - grads[:, 1], grads[:, 0], grads[:, 1]], axis=1)
    per_vertex = scatter_to_vertices(state.mesh.faces, corners, state.mesh.n_vertices)
    return np.moveaxis(per_vertex, (0, 1), (2, 3))


def weingarten_jacobian(state: ImmersionState, holobasis: HolomorphicBasis) -> np.ndarray:
    """``2 A_v Re(conj ψ_q h0_v)`` with ``q = ω^k ⊗ σ^γ``, shaped like :func:`period_jacobian`."""
    coeffs = holomorphic_coefficients(state, holobasis)
    g = holobasis.genus
    h0 = state.weingarten_vertices
    out = np.zeros((2 * g, g, state.mesh.n_vertices, state.ambient_dim))
    for gamma in range(2 * g):
        for k in range(g):
            psi = product_differential(coeffs, k, gamma, dual=True).vertices
            out[gamma, k] = 2.0 * state.dual_areas[:, None] * np.real(np.conj(psi)[:, None] * h0)
    return out


def dPeriod_immersion(
    state: ImmersionState,
    holobasis: HolomorphicBasis,
    w: FieldLike,
    method: str = "exact",
    duals: Optional[PoincareDuals] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """``(∂_w Π⁰, ∂_w Π¹)`` as purely imaginary g×g arrays indexed [loop, form]."""
    w = _resolve(state, w)
    g = holobasis.genus
    if method == "exact":
        jac = period_jacobian(state, holobasis.alpha, _duals_of(holobasis, duals).eta)
    elif method == "weingarten":
        jac = weingarten_jacobian(state, holobasis)
    else:
        raise BadConfig(f"Unknown derivative method: {method}")
    d_im = np.einsum("pkvm,vm->pk", jac, w)
    return 1j * d_im[:g], 1j * d_im[g:]


def numerical_rank(sigma: np.ndarray, drop: float = 1e-2, gap_min: float = 3.0, noise: float = 1e-10, strict: bool = True) -> tuple[int, float]:
    """Rank at the largest gap of the singular values closed by the level ``drop σ1``."""
    sigma = np.asarray(sigma, dtype=float)
    if sigma.size == 0 or sigma[0] <= 0.0:
        return 0, float("inf")
    floor = noise * sigma[0]
    seq = np.append(np.maximum(sigma, floor), drop * sigma[0])
    gaps = seq[:-1] / seq[1:]
    rank = int(np.argmax(gaps)) + 1
    gap = float(gaps[rank - 1])
    if strict and gap < gap_min:
        raise RankAmbiguity(f"No clear singular-value gap (largest ratio {gap:.2f})", {"singular_values": sigma.tolist()})
    return rank, gap


@dataclass(frozen=True)
class ConstraintJacobian:
    matrix: np.ndarray
    singular_values: np.ndarray
    rank: int
    gap: float
    row_basis: np.ndarray
    normal_only: bool

    def project(self, x: np.ndarray) -> np.ndarray:
        """Euclidean projection onto the kernel."""
        flat = x.reshape(-1)
        rows = self.row_basis
        return (flat - rows.T @ (rows @ flat)).reshape(x.shape)

    def kernel_basis(self) -> np.ndarray:
        _, _, vt = np.linalg.svd(self.matrix, full_matrices=True)
        return vt[self.rank :].T

    def to_dict(self) -> dict[str, Any]:
        return {
            "singular_values": self.singular_values.tolist(),
            "rank": self.rank,
            "gap": self.gap,
            "n": int(self.matrix.shape[0]),
            "columns": int(self.matrix.shape[1]),
            "normal_only": self.normal_only,
        }


def constraint_rows(state: ImmersionState, holobasis: HolomorphicBasis, spec: ConstraintSpec, method: str = "exact", duals: Optional[PoincareDuals] = None) -> np.ndarray:
    g = holobasis.genus
    if spec.n and spec.genus != g:
        raise BadConfig(f"Constraint spec is for genus {spec.genus}, basis has genus {g}")
    if method == "exact":
        jac = period_jacobian(state, holobasis.alpha, _duals_of(holobasis, duals).eta)
    else:
        jac = weingarten_jacobian(state, holobasis)
    return spec.combine(jac[:g], jac[g:])


def constraint_jacobian(
    state: ImmersionState,
    holobasis: HolomorphicBasis,
    spec: ConstraintSpec,
    normal_only: bool = False,
    method: str = "exact",
    drop: float = 1e-2,
    gap_min: float = 3.0,
    duals: Optional[PoincareDuals] = None,
) -> ConstraintJacobian:
    rows = constraint_rows(state, holobasis, spec, method, duals)
    if normal_only:
        rows = np.einsum("jvm,vmk->jvk", rows, state.normal_bases)
    matrix = rows.reshape(spec.n, -1)
    if spec.n == 0:
        return ConstraintJacobian(matrix, np.zeros(0), 0, float("inf"), matrix, normal_only)
    _, sigma, vt = np.linalg.svd(matrix, full_matrices=False)
    rank, gap = numerical_rank(sigma, drop, gap_min)
    _logger.debug(f"Constraint Jacobian: σ = {np.array2string(sigma, precision=3)}, rank {rank}, gap {gap:.2f}")
    return ConstraintJacobian(matrix, sigma, rank, gap, vt[:rank], normal_only)


def willmore_gradient(state: ImmersionState) -> np.ndarray:
    return EnergyFactory.create("willmore", state.mesh.faces).gradient(state.positions)


def frame_energy_gradient(state: ImmersionState, frame: Frame) -> np.ndarray:
    """Gradient of F with the frame transported to the perturbed tangent planes."""
    return EnergyFactory.create("frame", state.mesh.faces, require_frame(frame).vectors).gradient(state.positions)


def dual_norm(state: ImmersionState, field_values: np.ndarray) -> float:
    """``sqrt(sum |x_v|² / A_v)``, the L²(dvol) dual norm of a vertex covector field."""
    return float(np.sqrt(np.sum(np.sum(field_values**2, axis=1) / state.dual_areas)))


@dataclass(frozen=True)
class MultiplierFit:
    coefficients: np.ndarray
    residual_field: np.ndarray
    residual: float
    relative_residual: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "q_coefficients": self.coefficients.tolist(),
            "residual": self.residual,
            "relative_residual": self.relative_residual,
        }


def gradient_field_for(state: ImmersionState, energy_kind: str, frame: Optional[Frame] = None) -> np.ndarray:
    if energy_kind == "area":
        return state.metric.laplacian @ state.positions
    if energy_kind == "willmore":
        return willmore_gradient(state)
    if energy_kind == "frame":
        return frame_energy_gradient(state, require_frame(frame))
    raise BadConfig(f"Unknown energy kind: {energy_kind}")


def fit_multiplier(
    gradient_field: Optional[np.ndarray],
    state: ImmersionState,
    qbasis: QuadraticBasis,
    energy_kind: str = "willmore",
    reference_norm: Optional[float] = None,
    frame: Optional[Frame] = None,
) -> MultiplierFit:
    """Least squares for q in the dual L²(dvol) norm against ``R(q)_v = A_v Im(q, h0)_v``."""
    if qbasis.dimension not in (2, 6):
        raise UnsupportedGenus("Multiplier fit needs a genus 1 or genus 2 basis")
    grad = gradient_field_for(state, energy_kind, frame) if gradient_field is None else np.asarray(gradient_field)
    fields = multiplier_fields(state, qbasis)
    weight = 1.0 / np.sqrt(state.dual_areas)
    lhs = (fields * weight[:, None, None]).reshape(-1, qbasis.dimension)
    rhs = (grad * weight[:, None]).reshape(-1)
    coeffs, *_ = np.linalg.lstsq(lhs, rhs, rcond=None)
    residual_field = grad - np.einsum("vmd,d->vm", fields, coeffs)
    residual = dual_norm(state, residual_field)
    scale = dual_norm(state, grad) if reference_norm is None else reference_norm
    relative = residual / scale if scale > 0.0 else 0.0
    _logger.debug(f"Multiplier fit ({energy_kind}): relative residual {relative:.3e}")
    return MultiplierFit(coeffs, residual_field, residual, relative)


def frame_el_residual(
    state: ImmersionState,
    frame: Frame,
    qbasis: QuadraticBasis,
    q: Optional[np.ndarray] = None,
    tol: float = 1e-8,
) -> dict[str, Any]:
    """First line of the frame Euler-Lagrange system, weakly, against ``R(q)``."""
    divergence = float(np.max(np.abs(frame_divergence(state, frame))))
    if divergence > tol:
        raise FrameResidualTooLarge(f"Frame is not minimal: |d*(e2·de1)| = {divergence:.3e}", {"residual": divergence})
    grad = frame_energy_gradient(state, frame)
    if q is None:
        fit = fit_multiplier(grad, state, qbasis, "frame", frame=frame)
        q = fit.coefficients
    fields = multiplier_fields(state, qbasis)
    residual_field = grad - np.einsum("vmd,d->vm", fields, q)
    norm = dual_norm(state, residual_field)
    scale = dual_norm(state, grad)
    return {
        "field": residual_field,
        "norm": norm,
        "relative": norm / scale if scale > 0.0 else 0.0,
        "q_coefficients": np.asarray(q),
        "frame_divergence": divergence,
    }


@dataclass(frozen=True)
class PeriodState:
    periods: PeriodMatrix
    values: np.ndarray
    alpha: np.ndarray
    duals: PoincareDuals


def period_values(state: ImmersionState, h0_basis: HolomorphicBasis, basis: HomologyBasis, spec: ConstraintSpec) -> PeriodState:
    """Constraint values of the base forms corrected to be harmonic at the current immersion."""
    mesh = state.mesh
    metric = state.metric
    corrected = corrected_harmonic(mesh, h0_basis, metric)
    periods = period_matrix(mesh, metric, corrected, basis)
    values = spec.combine(periods.pi0.imag, periods.pi1.imag) if spec.n else np.zeros(0)
    return PeriodState(periods, values, corrected.alpha, poincare_duals(mesh, metric, basis))


def isotropic_directions(q: np.ndarray, w_pos: np.ndarray, w_neg: np.ndarray, w: Optional[np.ndarray] = None) -> dict[str, Any]:
    """Isotropic basis of span{w_pos, w_neg} for the quadratic form q, and the splitting of w."""
    q = np.asarray(q, dtype=float)
    plane = np.stack([np.asarray(w_pos, float).reshape(-1), np.asarray(w_neg, float).reshape(-1)], axis=1)
    gram = plane.T @ q @ plane
    gram = 0.5 * (gram + gram.T)
    if np.linalg.det(gram) >= 0.0:
        raise NotIndefinite("The quadratic form is not indefinite on the given plane", {"gram": gram.tolist()})
    lam, vecs = np.linalg.eigh(gram)
    coords = [vecs @ np.array([1.0 / np.sqrt(-lam[0]), sign / np.sqrt(lam[1])]) for sign in (1.0, -1.0)]
    e1, e2 = (plane @ c for c in coords)
    e1, e2 = e1 / np.linalg.norm(e1), e2 / np.linalg.norm(e2)
    out: dict[str, Any] = {"e1": e1, "e2": e2, "q_e1": float(e1 @ q @ e1), "q_e2": float(e2 @ q @ e2)}
    if w is not None:
        w = np.asarray(w, float).reshape(-1)
        basis = np.stack([e1, e2], axis=1)
        coeffs, *_ = np.linalg.lstsq(basis, w, rcond=None)
        w1, w2 = coeffs[0] * e1, coeffs[1] * e2
        out.update({"coefficients": coeffs, "w1": w1, "w2": w2, "reconstruction_error": float(np.linalg.norm(w - w1 - w2))})
    return out


@dataclass
class FlowResult:
    records: list[dict[str, Any]]
    state: ImmersionState
    converged: bool
    initial_energy: float
    final_energy: float
    period_drift: float
    multiplier: Optional[MultiplierFit] = None
    tau_initial: Optional[np.ndarray] = None
    tau_final: Optional[np.ndarray] = None
    details: dict[str, Any] = field(default_factory=dict)

    def summary(self) -> dict[str, Any]:
        return {
            "steps": len(self.records),
            "converged": self.converged,
            "initial_energy": self.initial_energy,
            "final_energy": self.final_energy,
            "period_drift": self.period_drift,
            "multiplier": None if self.multiplier is None else self.multiplier.to_dict(),
        }


class ProjectedFlow:  # Encapsulation
    """Sobolev-preconditioned descent of an energy on the period-constrained set.

    Each step projects the preconditioned gradient onto the kernel of the
    constraint Jacobian (row space cut at the singular-value gap), backtracks
    on the energy, and restores the constraint values by a minimum-norm Newton
    iteration along normal fields.
    """

    def __init__(
        self,
        state: ImmersionState,
        basis: HomologyBasis,
        spec: ConstraintSpec,
        energy_kind: str = "willmore",
        frame: Optional[Frame] = None,
        step: float = 1.0,
        max_steps: int = 200,
        tol: float = 1e-3,
        abs_tol: float = 1e-10,
        drop: float = 1e-2,
        gap_min: float = 3.0,
        newton_tol: float = 1e-10,
        max_newton: int = 8,
        max_backtracks: int = 30,
        armijo: float = 1e-4,
        max_move: float = 0.25,
        on_record: Optional[Callable[[dict[str, Any]], None]] = None,
    ):
        self._logger = logging.getLogger(self.__class__.__name__)
        self._state = state
        self._basis = basis
        self._energy = EnergyFactory.create(energy_kind, state.mesh.faces, None if frame is None else frame.vectors)
        self._kind = energy_kind
        self._frame = frame
        self._alpha = step
        self._max_steps = max_steps
        self._tol = tol
        self._abs_tol = abs_tol
        self._drop = drop
        self._gap_min = gap_min
        self._newton_tol = newton_tol
        self._max_newton = max_newton
        self._max_backtracks = max_backtracks
        self._armijo = armijo
        self._max_move = max_move
        self._on_record = on_record
        self._h0 = harmonic_basis(state.mesh, state.metric, basis)
        start = period_values(state, self._h0, basis, spec)
        self._spec = spec if spec.targets is not None else spec.with_targets(start.values)
        self._tau0 = start.periods.pi1_normalized
        edges = state.mesh.edges
        self._mean_edge = float(np.mean(np.linalg.norm(state.positions[edges[:, 1]] - state.positions[edges[:, 0]], axis=1)))

    def _rows(self, state: ImmersionState, pstate: PeriodState) -> np.ndarray:
        g = self._basis.genus
        jac = period_jacobian(state, pstate.alpha, pstate.duals.eta)
        return self._spec.combine(jac[:g], jac[g:])

    def _preconditioner(self, state: ImmersionState) -> Callable[[np.ndarray], np.ndarray]:
        """Inverse of the H² inner product ``L M⁻¹ L + M`` with the lumped mass ``M``."""
        lap = state.metric.laplacian
        mass = sp.diags(state.dual_areas)
        matrix = (lap @ sp.diags(1.0 / state.dual_areas) @ lap + mass).tocsc()
        lu = spla.splu(matrix)
        return lambda x: lu.solve(np.ascontiguousarray(x))

    def _direction(self, state: ImmersionState, grad: np.ndarray, pstate: PeriodState) -> tuple[np.ndarray, float, int, float]:
        apply = self._preconditioner(state)
        pg = apply(grad)
        rank, sigma_min = 0, 0.0
        if self._spec.n:
            rows = self._rows(state, pstate).reshape(self._spec.n, -1)
            _, sigma, vt = np.linalg.svd(rows, full_matrices=False)
            rank, _ = numerical_rank(sigma, self._drop, self._gap_min)
            sigma_min = float(sigma[-1])
            basis_rows = vt[:rank]
            shape = grad.shape
            p_rows = np.stack([apply(r.reshape(shape)).reshape(-1) for r in basis_rows], axis=0)
            schur = basis_rows @ p_rows.T
            mu = np.linalg.solve(schur, basis_rows @ pg.reshape(-1))
            pg = pg - (p_rows.T @ mu).reshape(shape)
        direction = -pg
        norm = float(np.sqrt(max(-np.sum(grad * direction), 0.0)))
        return direction, norm, rank, sigma_min

    def _correct(self, state: ImmersionState) -> tuple[ImmersionState, PeriodState]:
        spec = self._spec
        for it in range(self._max_newton + 1):
            pstate = period_values(state, self._h0, self._basis, spec)
            if spec.n == 0:
                return state, pstate
            violation = pstate.values - spec.targets
            if np.max(np.abs(violation)) <= self._newton_tol:
                return state, pstate
            if it == self._max_newton:
                break
            normals = state.normal_bases
            rows = np.einsum("jvm,vmk->jvk", self._rows(state, pstate), normals).reshape(spec.n, -1)
            u, sigma, vt = np.linalg.svd(rows, full_matrices=False)
            rank, _ = numerical_rank(sigma, self._drop, self._gap_min, strict=False)
            coeffs = vt[:rank].T @ ((u[:, :rank].T @ violation) / sigma[:rank])
            step = np.einsum("vmk,vk->vm", normals, -coeffs.reshape(state.mesh.n_vertices, -1))
            state = state.with_positions(state.positions + step)
        raise NewtonCorrectionFailure(
            f"Period correction did not reach {self._newton_tol:.1e}", {"violation": float(np.max(np.abs(violation)))}
        )

    def _record(self, step: int, energy: float, pstate: PeriodState, norm: float, rank: int, sigma_min: float) -> dict[str, Any]:
        drift = float(np.max(np.abs(pstate.periods.pi1_normalized - self._tau0)))
        record = {"step": step, "W": energy, "period_drift": drift, "proj_grad_norm": norm, "rank": rank, "sigma_min": sigma_min}
        if self._on_record is not None:
            self._on_record(record)
        return record

    def run(self) -> FlowResult:
        state, pstate = self._correct(self._state)
        energy = self._energy.value(state.positions)
        initial_energy = energy
        grad = self._energy.gradient(state.positions)
        initial_grad_norm = dual_norm(state, grad)
        records: list[dict[str, Any]] = []
        initial_norm: Optional[float] = None
        converged = False
        for step in range(1, self._max_steps + 1):
            direction, norm, rank, sigma_min = self._direction(state, grad, pstate)
            initial_norm = norm if initial_norm is None else initial_norm
            if norm <= self._abs_tol or norm <= self._tol * initial_norm:
                converged = True
                break
            slope = float(np.sum(grad * direction))
            cap = self._max_move * self._mean_edge / max(float(np.max(np.abs(direction))), 1e-300)
            alpha = min(self._alpha, cap)
            failure: Optional[Exception] = None
            for _ in range(self._max_backtracks):
                try:
                    trial, trial_periods = self._correct(state.with_positions(state.positions + alpha * direction))
                except (NewtonCorrectionFailure, DegenerateFace) as e:
                    failure = e
                    alpha *= 0.5
                    continue
                trial_energy = self._energy.value(trial.positions)
                if trial_energy <= energy + self._armijo * alpha * slope:
                    break
                failure = None
                alpha *= 0.5
            else:
                if isinstance(failure, NewtonCorrectionFailure):
                    raise failure
                raise LineSearchFailure(f"No acceptable step at iteration {step}", {"step": step, "energy": energy})
            state, pstate, energy = trial, trial_periods, trial_energy
            self._alpha = 2.0 * alpha
            grad = self._energy.gradient(state.positions)
            records.append(self._record(step, energy, pstate, norm, rank, sigma_min))
            self._logger.debug(f"Flow step {step}: W = {energy:.10f}, |Pg| = {norm:.3e}, rank {rank}")
        else:
            converged = False
        h_basis = harmonic_basis(state.mesh, state.metric, self._basis)
        fit = None
        if self._basis.genus in (1, 2):
            fit = fit_multiplier(grad, state, quadratic_basis(state, h_basis), self._kind, reference_norm=initial_grad_norm, frame=self._frame)
        drift = float(np.max(np.abs(pstate.periods.pi1_normalized - self._tau0)))
        self._logger.info(f"Flow finished after {len(records)} steps: W {initial_energy:.6f} -> {energy:.6f}, drift {drift:.2e}")
        return FlowResult(records, state, converged, initial_energy, energy, drift, fit, self._tau0, pstate.periods.pi1_normalized)


def projected_flow(
    state: ImmersionState,
    basis: HomologyBasis,
    spec: ConstraintSpec,
    step: float = 1.0,
    max_steps: int = 200,
    tol: float = 1e-3,
    energy_kind: str = "willmore",
    frame: Optional[Frame] = None,
    **options: Any,
) -> FlowResult:
    return ProjectedFlow(state, basis, spec, energy_kind, frame, step, max_steps, tol, **options).run()
