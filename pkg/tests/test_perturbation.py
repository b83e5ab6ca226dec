# Period Calculus - Metric Perturbation Tests
"""Period derivatives under metric perturbations with OOP principles."""

import json

import numpy as np
import pytest

from src.config import Config
from src.exceptions import MetricMeshMismatch
from src.hodge import harmonic_basis
from src.perturbation import (
    GridChartMetric,
    chart_fields_from_dict,
    chart_fields_to_dict,
    chart_forms,
    d2Period_metric,
    dPeriod_metric,
    hodge_star_variation,
    periods_along,
    trace_free,
)
from src.validation_generator import MetricVariationSuite, smooth_node_nu


class MetricCase:  # Encapsulation
    """Grid chart on a flat torus with a smooth symmetric perturbation."""

    def __init__(self, surface, seed: int = 0):
        n = surface.chart.grid[0]
        self._surface = surface
        self._chart = GridChartMetric(surface.metric, n, np.zeros(n * n), smooth_node_nu(n, np.random.default_rng(seed)))
        self._h0 = harmonic_basis(surface.mesh, self._chart.metric(0.0), surface.basis)
        self._forms = chart_forms(self._chart, self._h0)

    @property
    def chart(self) -> GridChartMetric:
        return self._chart

    @property
    def forms(self):
        return self._forms

    def periods(self, t: float) -> np.ndarray:
        p = periods_along(self._chart, self._h0, self._surface.basis, t)
        return np.concatenate([p.pi0.reshape(-1), p.pi1.reshape(-1)])


@pytest.fixture
def metric_case(fixture_factory, tmp_path):
    return MetricCase(fixture_factory.create("flat-torus", tmp_path))


def test_trace_free_part():
    nu = np.array([[[2.0, 0.3], [0.3, -1.0]]])
    nu0 = trace_free(nu).nu0
    assert abs(nu0[0, 0, 0] + nu0[0, 1, 1]) < 1e-15
    assert np.isclose(nu0[0, 0, 1], 0.3)


def test_star_variation_ignores_conformal_part():
    first, _ = hodge_star_variation(np.array([[[0.7, 0.0], [0.0, 0.7]]]), np.zeros(1))
    assert np.max(np.abs(first)) == 0.0


def test_first_derivative_is_imaginary(metric_case):
    d_pi0, d_pi1 = dPeriod_metric(metric_case.chart, metric_case.forms)
    assert np.max(np.abs(d_pi0.real)) == 0.0 and np.max(np.abs(d_pi1.real)) == 0.0
    assert np.max(np.abs(d_pi1)) > 0.0


def test_first_derivative_matches_central_difference(metric_case):
    d_pi0, d_pi1 = dPeriod_metric(metric_case.chart, metric_case.forms)
    t = 1e-4
    fd = (metric_case.periods(t) - metric_case.periods(-t)) / (2 * t)
    exact = np.concatenate([d_pi0.reshape(-1), d_pi1.reshape(-1)])
    assert np.max(np.abs(fd - exact)) <= 1e-5 * max(1.0, np.max(np.abs(exact)))


def test_second_derivative_terms_add_up(metric_case):
    second = d2Period_metric(metric_case.chart, metric_case.forms)
    total = sum(second["terms"]["pi1"].values())
    assert np.allclose(total, second["pi1"])
    assert second["poisson_residual"] < 1e-8


def test_metric_oracles(fixture_factory, tmp_path):
    surface = fixture_factory.create("flat-torus", tmp_path)
    suite = MetricVariationSuite(surface, Config("missing.yml").tolerances, seed=0)
    assert suite.applies()
    results = {r.name: r for r in suite.run()}
    assert results["metric-conformal-annihilation"].passed
    assert results["metric-real-part"].passed
    for name in ("metric-first-taylor", "metric-second-central"):
        assert 3.5 <= results[name].value <= 4.5, results[name].details


def test_suite_skips_curved_surfaces(fixture_factory, tmp_path):
    surface = fixture_factory.create("revolution-torus", tmp_path)
    assert not MetricVariationSuite(surface, Config("missing.yml").tolerances).applies()


def test_chart_fields_schema(metric_case):
    data = json.loads(json.dumps(chart_fields_to_dict(metric_case.chart, metric_case.forms)))
    lam, nu, forms = chart_fields_from_dict(data)
    assert data["backend"] == "grid" and data["genus"] == 1
    assert np.array_equal(forms.X, metric_case.forms.X) and np.array_equal(nu, metric_case.chart.nu)
    assert lam.shape == (metric_case.chart.mesh.n_faces,)
    data["genus"] = 2
    with pytest.raises(MetricMeshMismatch):
        chart_fields_from_dict(data)
