# Period Calculus - Test Configuration
"""Test fixtures with OOP principles."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

import pytest

from src.fixtures import FixtureFactory as SurfaceFactory


class BaseFixture(ABC):  # Abstraction
    def __init__(self, **params: Any):
        self._params = params  # Encapsulation

    @abstractmethod  # Abstraction
    def create(self, tmp_path: Path):
        pass


class ConfigFixture(BaseFixture):  # Inheritance
    def create(self, tmp_path: Path):  # Polymorphism
        config_file = tmp_path / "test.yml"
        config_file.write_text(
            "output_directory: outputs\n"
            "seed: 0\n"
            "fixture:\n  N: 16\n  tau: 0.5+0.8i\n"
            "flow:\n  max_steps: 5\n"
        )
        return config_file


class BrokenConfigFixture(BaseFixture):  # Inheritance
    def create(self, tmp_path: Path):  # Polymorphism
        config_file = tmp_path / "broken.yml"
        config_file.write_text("tolerances: [1, 2\n")
        return config_file


class SurfaceFixture(BaseFixture):  # Inheritance
    def __init__(self, name: str, **params: Any):
        super().__init__(**params)
        self._name = name

    def create(self, tmp_path: Path):  # Polymorphism
        return SurfaceFactory.create(self._name, **self._params)


class OFFFixture(BaseFixture):  # Inheritance
    """Closed tetrahedron, genus 0."""

    def create(self, tmp_path: Path):  # Polymorphism
        path = tmp_path / "tetra.off"
        path.write_text(
            "OFF\n4 4 0\n"
            "0 0 0\n1 0 0\n0 1 0\n0 0 1\n"
            "3 0 2 1\n3 0 1 3\n3 0 3 2\n3 1 2 3\n"
        )
        return path


class FixtureFactory:  # Encapsulation
    def __init__(self):
        self._fixtures = {}  # Encapsulation

    def register(self, name: str, fixture: BaseFixture) -> None:  # Polymorphism
        self._fixtures[name] = fixture

    def create(self, name: str, tmp_path: Path):  # Abstraction
        return self._fixtures[name].create(tmp_path)


@pytest.fixture
def fixture_factory():
    factory = FixtureFactory()
    factory.register("config", ConfigFixture())
    factory.register("broken-config", BrokenConfigFixture())
    factory.register("tetra-off", OFFFixture())
    factory.register("flat-torus", SurfaceFixture("flat-torus", N=16, tau=0.5 + 0.8j))
    factory.register("flat-torus-fine", SurfaceFixture("flat-torus", N=64, tau=0.5 + 0.8j))
    factory.register("revolution-torus", SurfaceFixture("revolution-torus", N=16, R=2.0, r=1.0))
    factory.register("revolution-torus-24", SurfaceFixture("revolution-torus", N=24, R=2.0, r=1.0))
    factory.register("revolution-torus-48", SurfaceFixture("revolution-torus", N=48, R=2.0, r=1.0))
    factory.register("revolution-torus-96", SurfaceFixture("revolution-torus", N=96, R=2.0, r=1.0))
    factory.register("clifford-torus", SurfaceFixture("clifford-torus", N=12))
    factory.register("bumped-clifford", SurfaceFixture("clifford-torus", N=12, amplitude=0.05))
    factory.register("bumped-clifford-32", SurfaceFixture("clifford-torus", N=32, amplitude=0.05))
    factory.register("genus2", SurfaceFixture("genus2", n=2))
    return factory
