# Period Calculus - Second Variation Tests
"""Second period derivatives, chart workspace and bump probes with OOP principles."""

from dataclasses import replace

import numpy as np
import pytest

from src.config import Config
from src.exceptions import BadConfig, ChartUnavailable, SupportViolation, UnsupportedGenus
from src.hodge import harmonic_basis
from src.immersion import ImmersionState
from src.second_variation import (
    bump,
    bump_field,
    chart_second_derivative,
    d2Period_immersion,
    d2Period_immersion_chart,
    second_variation_probe,
)
from src.validation_generator import ChartVariationSuite, smooth_field


class BumpCase:  # Encapsulation
    """Chart torus state with its harmonic basis and a grid-centre vertex."""

    def __init__(self, surface):
        self._state = ImmersionState(surface.mesh, surface.mesh.positions, surface.chart)
        self._holo = harmonic_basis(surface.mesh, self._state.metric, surface.basis)
        n_u, n_v = surface.chart.grid
        self._center = (n_v // 2) * n_u

    @property
    def state(self) -> ImmersionState:
        return self._state

    @property
    def holo(self):
        return self._holo

    @property
    def center(self) -> int:
        return self._center


@pytest.fixture
def clifford_case(fixture_factory, tmp_path):
    return BumpCase(fixture_factory.create("clifford-torus", tmp_path))


def test_bump_profile():
    values = bump(np.array([-1.5, -1.0, 0.0, 0.5, 1.0]))
    assert values[2] == pytest.approx(1.0)
    assert values[0] == 0.0 and values[1] == 0.0 and values[4] == 0.0
    assert 0.0 < values[3] < 1.0


def test_terms_add_up(clifford_case):
    w = smooth_field(clifford_case.state.positions, np.random.default_rng(7))
    result = d2Period_immersion(clifford_case.state, clifford_case.holo, w)
    for name in ("pi0", "pi1"):
        assert np.allclose(sum(result["terms"][name].values()), result[name])
    assert result["poisson_residual"] < 1e-8


def test_chart_variant_matches_layout(clifford_case):
    w = smooth_field(clifford_case.state.positions, np.random.default_rng(8))
    layout = d2Period_immersion(clifford_case.state, clifford_case.holo, w)
    chart = d2Period_immersion_chart(clifford_case.state, clifford_case.holo, w)
    scale = max(np.max(np.abs(layout["pi1"])), 1e-12)
    for name in ("pi0", "pi1"):
        assert np.max(np.abs(chart[name] - layout[name])) <= 1e-8 * scale
    workspace = chart["workspace"]
    assert max(workspace.residuals[key] for key in ("a", "b", "u")) < 1e-8
    assert workspace.l_residual <= 1e-10
    assert workspace.v.shape == (clifford_case.state.mesh.n_faces,)


def test_chart_terms_regroup_layout_terms(clifford_case):
    w = smooth_field(clifford_case.state.positions, np.random.default_rng(9))
    layout = d2Period_immersion(clifford_case.state, clifford_case.holo, w)
    chart = d2Period_immersion_chart(clifford_case.state, clifford_case.holo, w)
    for name in ("pi0", "pi1"):
        mine, theirs = chart["terms"][name], layout["terms"][name]
        scale = max(max(np.max(np.abs(t)) for t in theirs.values()), 1e-12)
        assert np.allclose(sum(mine.values()), chart[name])
        assert np.max(np.abs(mine["vanishing_trace"] + mine["trace"] - theirs["quadratic"])) <= 1e-8 * scale
        assert np.max(np.abs(mine["second_fundamental"] - theirs["second_fundamental"])) <= 1e-8 * scale
        assert np.max(np.abs(mine["nonlocal"] + mine["potential"] - theirs["cross"])) <= 1e-8 * scale


def test_chart_variant_is_built_from_its_workspace(clifford_case):
    state, holo = clifford_case.state, clifford_case.holo
    w = smooth_field(state.positions, np.random.default_rng(10))
    chart = d2Period_immersion_chart(state, holo, w)
    workspace = chart["workspace"]
    again = chart_second_derivative(state, holo, w, workspace)
    assert np.allclose(again["pi0"], chart["pi0"]) and np.allclose(again["pi1"], chart["pi1"])

    flat = replace(workspace, v=np.zeros_like(workspace.v))
    stripped = chart_second_derivative(state, holo, w, flat)
    assert np.allclose(stripped["pi1"], chart["terms"]["pi1"]["second_fundamental"])
    assert not np.allclose(stripped["pi1"], chart["pi1"])

    no_potential = replace(workspace, a=np.zeros_like(workspace.a), c=np.zeros_like(workspace.c))
    local = chart_second_derivative(state, holo, w, no_potential)
    removed = chart["terms"]["pi1"]["nonlocal"] + chart["terms"]["pi1"]["potential"]
    assert np.allclose(chart["pi1"] - local["pi1"], removed)


def test_chart_variant_needs_a_chart(fixture_factory, tmp_path):
    surface = fixture_factory.create("clifford-torus", tmp_path)
    state = ImmersionState(surface.mesh, surface.mesh.positions)
    holo = harmonic_basis(surface.mesh, state.metric, surface.basis)
    with pytest.raises(ChartUnavailable):
        d2Period_immersion_chart(state, holo, np.zeros_like(state.positions))


def test_chart_variant_needs_a_torus(fixture_factory, tmp_path):
    surface = fixture_factory.create("genus2", tmp_path)
    state = ImmersionState(surface.mesh, surface.mesh.positions, fixture_factory.create("flat-torus", tmp_path).chart)
    holo = harmonic_basis(surface.mesh, state.metric, surface.basis)
    with pytest.raises(UnsupportedGenus):
        d2Period_immersion_chart(state, holo, np.zeros_like(state.positions))


def test_bump_field_is_normal_and_local(clifford_case):
    scalar, w = bump_field(clifford_case.state, clifford_case.center, 0.4)
    assert scalar[clifford_case.center] == pytest.approx(1.0)
    assert np.count_nonzero(scalar) < scalar.size
    tangential = np.einsum("vma,vm->va", clifford_case.state.vertex_frames[[clifford_case.center]], w[[clifford_case.center]])
    assert np.max(np.abs(tangential)) <= 1e-10


def test_bump_support_must_fit(clifford_case):
    with pytest.raises(SupportViolation):
        bump_field(clifford_case.state, clifford_case.center, 0.9)
    with pytest.raises(BadConfig):
        bump_field(clifford_case.state, clifford_case.center, 0.2, "wide")


def test_probe_rows(clifford_case):
    result = second_variation_probe(clifford_case.state, clifford_case.holo, clifford_case.center, [0.3, 0.4])
    assert [row["eps"] for row in result["rows"]] == [0.4, 0.3]
    assert result["center"] == clifford_case.center
    for row in result["rows"]:
        assert np.max(np.abs(row["prediction"]["pi1"].real)) == 0.0
        assert row["second"]["pi1"].shape == (1, 1)


@pytest.mark.slow
def test_bump_limit_and_orientation_flip_on_revolution_torus(fixture_factory, tmp_path):
    case = BumpCase(fixture_factory.create("revolution-torus-96", tmp_path))
    limits = {}
    for profile in ("narrow-x1", "narrow-x2"):
        result = second_variation_probe(case.state, case.holo, case.center, [0.2, 0.1, 0.05], profile)
        rows = result["rows"]
        assert [row["eps"] for row in rows] == [0.2, 0.1, 0.05]
        last = rows[-1]
        error = max(float(np.max(np.abs(last["second"][k] - last["prediction"][k]))) for k in ("pi0", "pi1"))
        scale = max(float(np.max(np.abs(last["prediction"][k]))) for k in ("pi0", "pi1"))
        assert error <= 5e-2 * scale, (profile, error, scale)
        first = [max(float(np.max(np.abs(row["first"][k]))) for k in ("pi0", "pi1")) for row in rows]
        assert first[2] < first[0]
        limits[profile] = np.concatenate([last["second"]["pi0"].reshape(-1), last["second"]["pi1"].reshape(-1)]).imag
    x1, x2 = limits["narrow-x1"], limits["narrow-x2"]
    significant = np.abs(x1) > 1e-2 * np.max(np.abs(x1))
    assert np.any(significant)
    assert np.all(np.sign(x1[significant]) == -np.sign(x2[significant]))


def test_chart_oracle_suite(fixture_factory, tmp_path):
    tolerances = Config("missing.yml").tolerances
    suite = ChartVariationSuite(fixture_factory.create("clifford-torus", tmp_path), tolerances, seed=3)
    assert suite.applies()
    results = {r.name: r for r in suite.run()}
    assert results["chart-layout-agreement"].value <= 1e-8
    assert "chart-second-central" in results
    assert not ChartVariationSuite(fixture_factory.create("flat-torus", tmp_path), tolerances).applies()
