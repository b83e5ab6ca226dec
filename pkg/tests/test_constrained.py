# Period Calculus - Constrained Variation Tests
"""Period Jacobians, multipliers and the projected flow with OOP principles."""

from abc import ABC, abstractmethod

import numpy as np
import pytest

from src.config import Config
from src.constrained import (
    ConstraintSpec,
    VariationField,
    constraint_jacobian,
    dPeriod_immersion,
    fit_multiplier,
    isotropic_directions,
    numerical_rank,
    projected_flow,
)
from src.exceptions import BadConfig, MeshMismatch, NotIndefinite, RankAmbiguity
from src.hodge import harmonic_basis
from src.immersion import ImmersionState, energy, minimal_frame, multiplier_fields, quadratic_basis
from src.validation_generator import ImmersionVariationSuite, normal_field


class BaseTest(ABC):  # Abstraction
    def __init__(self, name: str):
        self._name = name  # Encapsulation

    @property
    def name(self) -> str:
        return self._name

    @abstractmethod  # Abstraction
    def run(self) -> bool:
        pass


class RankTest(BaseTest):  # Inheritance
    def __init__(self, name: str, sigma: list[float], expected: int):
        super().__init__(name)
        self._sigma = np.array(sigma)
        self._expected = expected

    def run(self) -> bool:  # Polymorphism
        rank, gap = numerical_rank(self._sigma)
        return rank == self._expected and gap >= 3.0


class RankTestRunner:  # Encapsulation
    def __init__(self):
        self._tests: list[BaseTest] = []  # Encapsulation

    def add(self, test: BaseTest) -> None:  # Polymorphism
        self._tests.append(test)

    def run_all(self) -> dict[str, bool]:  # Abstraction
        return {test.name: test.run() for test in self._tests}


def _setup(surface):
    state = ImmersionState(surface.mesh, surface.mesh.positions, surface.chart)
    return state, harmonic_basis(surface.mesh, state.metric, surface.basis)


def test_numerical_rank_cases():
    runner = RankTestRunner()
    runner.add(RankTest("deficient", [1.0, 0.5, 1e-6], 2))
    runner.add(RankTest("full", [1.0, 0.9, 0.8], 3))
    runner.add(RankTest("noise-floor", [1.0, 1e-14], 1))
    results = runner.run_all()
    assert all(results.values()), results


def test_numerical_rank_ambiguity():
    sigma = 0.5 ** np.arange(7)
    with pytest.raises(RankAmbiguity):
        numerical_rank(sigma)
    rank, gap = numerical_rank(sigma, strict=False)
    assert rank == 1 and gap == pytest.approx(2.0)


def test_numerical_rank_of_zero_matrix():
    assert numerical_rank(np.zeros(3))[0] == 0


def test_constraint_spec():
    spec = ConstraintSpec.full_periods(2)
    assert spec.n == 8 and spec.genus == 2
    im_pi0 = np.arange(4.0).reshape(2, 2)
    im_pi1 = 10.0 + np.arange(4.0).reshape(2, 2)
    assert np.array_equal(spec.combine(im_pi0, im_pi1), np.concatenate([im_pi0.reshape(-1), im_pi1.reshape(-1)]))
    assert ConstraintSpec.empty(1).n == 0


def test_constraint_spec_rejects_dependent_rows():
    t = np.zeros((2, 1, 1))
    t[:, 0, 0] = 1.0
    with pytest.raises(BadConfig):
        ConstraintSpec(t, np.zeros((2, 1, 1)))
    with pytest.raises(BadConfig):
        ConstraintSpec(np.zeros((1, 1, 1)), np.zeros((1, 2, 2)))


def test_immersion_oracles(fixture_factory, tmp_path):
    surface = fixture_factory.create("revolution-torus", tmp_path)
    results = {r.name: r for r in ImmersionVariationSuite(surface, Config("missing.yml").tolerances, seed=2).run()}
    assert results["immersion-rigid-motion"].passed, results["immersion-rigid-motion"].value
    for name in ("immersion-first-taylor", "immersion-second-central"):
        assert 3.5 <= results[name].value <= 4.5, results[name].details


def test_period_derivative_is_imaginary(fixture_factory, tmp_path):
    state, holo = _setup(fixture_factory.create("bumped-clifford", tmp_path))
    w = np.random.default_rng(0).normal(size=state.positions.shape)
    d_pi0, d_pi1 = dPeriod_immersion(state, holo, w)
    assert np.max(np.abs(d_pi0.real)) == 0.0 and np.max(np.abs(d_pi1.real)) == 0.0
    with pytest.raises(BadConfig):
        dPeriod_immersion(state, holo, w, method="spectral")


def test_variation_field(fixture_factory, tmp_path):
    state, _ = _setup(fixture_factory.create("clifford-torus", tmp_path))
    w = np.random.default_rng(1).normal(size=state.positions.shape)
    resolved = VariationField(w, normal_only=True, excluded=(0, 5)).resolve(state)
    tangential = np.einsum("vmn,vn->vm", state.tangent_projectors, resolved)
    assert np.max(np.abs(tangential)) <= 1e-10
    assert np.all(resolved[[0, 5]] == 0.0)
    with pytest.raises(MeshMismatch):
        VariationField(w[:, :3]).resolve(state)


def test_projection_removes_constraint_directions(fixture_factory, tmp_path):
    state, holo = _setup(fixture_factory.create("revolution-torus", tmp_path))
    jac = constraint_jacobian(state, holo, ConstraintSpec.full_periods(1), normal_only=True, gap_min=1.0)
    x = np.random.default_rng(4).normal(size=jac.matrix.shape[1])
    leftover = np.linalg.norm(jac.matrix @ jac.project(x))
    tail = jac.singular_values[jac.rank] if jac.rank < jac.singular_values.size else 0.0
    assert leftover <= (tail + 1e-10 * jac.singular_values[0]) * np.linalg.norm(x)
    assert jac.kernel_basis().shape[1] == jac.matrix.shape[1] - jac.rank


def test_multiplier_fit_recovers_coefficients(fixture_factory, tmp_path):
    state, holo = _setup(fixture_factory.create("bumped-clifford", tmp_path))
    qbasis = quadratic_basis(state, holo)
    q0 = np.array([0.7, -0.3])
    gradient = np.einsum("vmd,d->vm", multiplier_fields(state, qbasis), q0)
    fit = fit_multiplier(gradient, state, qbasis)
    assert np.max(np.abs(fit.coefficients - q0)) <= 1e-8
    assert fit.relative_residual <= 1e-8


def test_isotropic_directions():
    q = np.diag([1.0, -1.0, 2.0])
    out = isotropic_directions(q, [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], w=[0.3, -1.2, 0.0])
    assert abs(out["q_e1"]) <= 1e-12 and abs(out["q_e2"]) <= 1e-12
    assert out["reconstruction_error"] <= 1e-12
    with pytest.raises(NotIndefinite):
        isotropic_directions(np.eye(3), [1.0, 0.0, 0.0], [0.0, 1.0, 0.0])


def test_unconstrained_flow_decreases_willmore(fixture_factory, tmp_path):
    surface = fixture_factory.create("bumped-clifford", tmp_path)
    state, _ = _setup(surface)
    records = []
    result = projected_flow(state, surface.basis, ConstraintSpec.empty(1), max_steps=4, on_record=records.append)
    assert result.final_energy <= result.initial_energy
    assert records == result.records
    energies = [result.initial_energy] + [r["W"] for r in records]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))


@pytest.mark.slow
def test_period_constrained_flow_keeps_modulus(fixture_factory, tmp_path):
    surface = fixture_factory.create("bumped-clifford", tmp_path)
    state, _ = _setup(surface)
    result = projected_flow(state, surface.basis, ConstraintSpec.full_periods(1), max_steps=3)
    assert result.period_drift <= 1e-6
    assert result.final_energy <= result.initial_energy + 1e-12


class IsotropicTest(BaseTest):  # Inheritance
    def __init__(self, name: str, seed: int, dim: int = 5):
        super().__init__(name)
        self._rng = np.random.default_rng(seed)
        self._dim = dim
        self.worst = 0.0

    def _signed_vector(self, q: np.ndarray, sign: float) -> np.ndarray:
        while True:
            v = self._rng.normal(size=self._dim)
            v /= np.linalg.norm(v)
            if sign * (v @ q @ v) >= 0.1:
                return v

    def run(self) -> bool:  # Polymorphism
        a = self._rng.normal(size=(self._dim, self._dim))
        q = a.T @ np.diag([1.0, 1.0, -1.0, -1.0, 0.5]) @ a
        q /= np.max(np.abs(np.linalg.eigvalsh(q)))
        w_pos, w_neg = self._signed_vector(q, 1.0), self._signed_vector(q, -1.0)
        w = self._rng.normal() * w_pos + self._rng.normal() * w_neg
        out = isotropic_directions(q, w_pos, w_neg, w=w)
        self.worst = max(abs(out["q_e1"]), abs(out["q_e2"]), out["reconstruction_error"])
        return self.worst <= 1e-12


def test_isotropic_directions_on_random_planes():
    runner = RankTestRunner()
    for seed in range(100):
        runner.add(IsotropicTest(f"plane-{seed}", seed))
    results = runner.run_all()
    assert all(results.values()), [name for name, ok in results.items() if not ok]


def test_isothermic_rank_drop_and_recovery(fixture_factory, tmp_path):
    surface = fixture_factory.create("revolution-torus-48", tmp_path)
    state, holo = _setup(surface)
    spec = ConstraintSpec.full_periods(1)
    jac = constraint_jacobian(state, holo, spec, normal_only=True, gap_min=10.0)
    assert jac.rank == spec.n - 1 and jac.gap >= 10.0
    isothermic_ratio = jac.singular_values[-1] / jac.singular_values[0]

    w = normal_field(state, np.random.default_rng(7))
    moved = state.with_positions(state.positions + 0.2 * w)
    moved_holo = harmonic_basis(surface.mesh, moved.metric, surface.basis)
    sigma = constraint_jacobian(moved, moved_holo, spec, normal_only=True, gap_min=1.0).singular_values
    assert sigma[-1] / sigma[0] >= 10.0 * isothermic_ratio


def test_minimal_frame_survives_random_rotations(fixture_factory, tmp_path):
    surface = fixture_factory.create("bumped-clifford", tmp_path)
    state, holo = _setup(surface)
    minimal = minimal_frame(state, holo, surface.basis.loops)
    f_min = energy(state, "frame", minimal)
    rng = np.random.default_rng(11)
    for _ in range(20):
        theta = rng.normal(scale=0.2, size=state.mesh.n_vertices)
        assert energy(state, "frame", minimal.rotated(theta)) >= f_min * (1.0 - 1e-10)


@pytest.mark.slow
def test_constrained_willmore_flow_reaches_clifford_energy(fixture_factory, tmp_path):
    surface = fixture_factory.create("bumped-clifford-32", tmp_path)
    state, _ = _setup(surface)
    result = projected_flow(state, surface.basis, ConstraintSpec.full_periods(1), max_steps=100)
    energies = [result.initial_energy] + [r["W"] for r in result.records]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    assert result.final_energy < result.initial_energy
    assert abs(result.final_energy - 2.0 * np.pi**2) <= 0.05 * 2.0 * np.pi**2
    assert result.period_drift <= 1e-6
    assert result.multiplier is not None and result.multiplier.relative_residual <= 5e-2
