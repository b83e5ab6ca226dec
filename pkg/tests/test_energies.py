# Period Calculus - Energy Tests
"""Discrete energies and their gradients with OOP principles."""

import warnings

import numpy as np
import pytest

from src.config import Config
from src.energies import EnergyFactory
from src.exceptions import FrameMissing
from src.immersion import ImmersionState, gauss_bonnet_gap
from src.validation_generator import EnergySuite, smooth_field


@pytest.fixture
def revolution_state(fixture_factory, tmp_path):
    surface = fixture_factory.create("revolution-torus", tmp_path)
    return ImmersionState(surface.mesh, surface.mesh.positions)


def test_willmore_gradient_oracle(fixture_factory, tmp_path):
    surface = fixture_factory.create("revolution-torus", tmp_path)
    results = EnergySuite(surface, Config("missing.yml").tolerances, seed=1).run()
    assert all(r.passed for r in results), [r.details for r in results]


def test_area_gradient_is_cotan_laplacian(revolution_state):
    grad = EnergyFactory.create("area", revolution_state.mesh.faces).gradient(revolution_state.positions)
    expected = revolution_state.metric.laplacian @ revolution_state.positions
    assert np.max(np.abs(grad - expected)) <= 1e-10 * max(1.0, np.max(np.abs(expected)))


def test_willmore_is_scale_and_translation_invariant(revolution_state):
    willmore = EnergyFactory.create("willmore", revolution_state.mesh.faces)
    base = willmore.value(revolution_state.positions)
    assert np.isclose(willmore.value(2.5 * revolution_state.positions), base, rtol=1e-10)
    assert np.isclose(willmore.value(revolution_state.positions + np.array([1.0, -2.0, 0.5])), base, rtol=1e-10)


def test_second_fundamental_gradient_matches_difference(revolution_state):
    energy = EnergyFactory.create("second_fundamental", revolution_state.mesh.faces)
    v = smooth_field(revolution_state.positions, np.random.default_rng(5))
    t = 1e-5
    fd = (energy.value(revolution_state.positions + t * v) - energy.value(revolution_state.positions - t * v)) / (2 * t)
    exact = float(np.sum(energy.gradient(revolution_state.positions) * v))
    assert abs(fd - exact) <= 1e-5 * max(1.0, abs(exact))


def test_gauss_bonnet_gap_is_finite(revolution_state):
    assert np.isfinite(gauss_bonnet_gap(revolution_state))


def test_frame_energy_needs_a_frame(revolution_state):
    with pytest.raises(FrameMissing):
        EnergyFactory.create("frame", revolution_state.mesh.faces)


def test_unknown_energy():
    with pytest.raises(ValueError):
        EnergyFactory.create("elastic", np.array([[0, 1, 2]]))


def test_read_only_inputs_convert_silently(revolution_state):
    positions = revolution_state.positions.copy()
    faces = revolution_state.mesh.faces.copy()
    positions.setflags(write=False)
    faces.setflags(write=False)
    with warnings.catch_warnings():
        warnings.simplefilter("error", UserWarning)
        willmore = EnergyFactory.create("willmore", faces)
        value = willmore.value(positions)
        grad = willmore.gradient(positions)
    assert isinstance(value, float) and np.all(np.isfinite(grad))
