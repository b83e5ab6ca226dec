# Period Calculus - Configuration Module
"""Configuration loader with OOP principles."""

from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any

import yaml

from .exceptions import BadConfig


class BaseConfig(ABC):  # Abstraction
    """Abstract config loader (Abstraction, Encapsulation)."""

    def __init__(self, config_path: str):
        self._config_path = self._validate_path(config_path)
        self._config = self._merge(self._get_defaults(), self._load_config())

    def _validate_path(self, config_path: str) -> Path:  # Encapsulation
        try:
            return Path(config_path).resolve(strict=False)
        except (OSError, RuntimeError) as e:
            raise BadConfig(f"Invalid path: {config_path} - {e}") from e

    @staticmethod
    def _merge(defaults: dict[str, Any], loaded: dict[str, Any]) -> dict[str, Any]:
        merged = dict(defaults)
        for key, value in loaded.items():
            if isinstance(value, dict) and isinstance(merged.get(key), dict):
                merged[key] = {**merged[key], **value}
            else:
                merged[key] = value
        return merged

    @abstractmethod  # Abstraction
    def _load_config(self) -> dict[str, Any]:
        pass

    @abstractmethod  # Abstraction
    def _get_defaults(self) -> dict[str, Any]:
        pass


class Config(BaseConfig):  # Inheritance
    """YAML config loader (Inheritance, Polymorphism)."""

    _DEFAULT_TOLERANCES = {  # Encapsulation
        "solver": 1e-10,
        "isothermic": 1e-2,
        "l_field": 5e-2,
        "chart": 1e-1,
        "rank_gap": 3.0,
        "frame_residual": 1e-8,
        "period": 1e-2,
        "ratio_low": 3.5,
        "ratio_high": 4.5,
        "conformal": 1e-14,
        "rigid": 1e-10,
        "energy_fd": 1e-6,
        "multiplier": 5e-2,
        "drift": 1e-6,
        "probe": 5e-2,
    }

    def _load_config(self) -> dict[str, Any]:  # Polymorphism
        if not self._config_path.exists():
            return {}
        try:
            with open(self._config_path, encoding="utf-8") as f:
                loaded = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise BadConfig(f"Invalid YAML: {e}") from e
        except OSError as e:
            raise BadConfig(f"Cannot read config file: {e}") from e
        if not isinstance(loaded, dict):
            raise BadConfig(f"Config root must be a mapping, got {type(loaded).__name__}")
        return loaded

    def _get_defaults(self) -> dict[str, Any]:  # Polymorphism
        return {
            "output_directory": "outputs",
            "seed": 0,
            "tolerances": dict(self._DEFAULT_TOLERANCES),
            "flow": {"step": 1.0, "max_steps": 200, "tol": 1e-3},
            "probe": {"eps": [0.2, 0.1, 0.05], "profile": "narrow-x1"},
            "fixture": {"N": 32, "tau": "0.5+0.8i", "R": 2.0, "r": 1.0, "amplitude": 0.0},
        }

    @property  # Encapsulation
    def output_directory(self) -> Path:
        return Path(self._config["output_directory"])

    @property  # Encapsulation
    def seed(self) -> int:
        return int(self._config["seed"])

    @property  # Encapsulation
    def tolerances(self) -> dict[str, float]:
        tolerances = {k: float(v) for k, v in self._config["tolerances"].items()}
        bad = [k for k, v in tolerances.items() if v <= 0.0]
        if bad:
            raise BadConfig(f"Tolerances must be positive: {', '.join(sorted(bad))}")
        return tolerances

    @property  # Encapsulation
    def flow(self) -> dict[str, Any]:
        return dict(self._config["flow"])

    @property  # Encapsulation
    def probe(self) -> dict[str, Any]:
        return dict(self._config["probe"])

    @property  # Encapsulation
    def fixture(self) -> dict[str, Any]:
        return dict(self._config["fixture"])

    def get(self, key: str, default: Any = None) -> Any:  # Abstraction
        return self._config.get(key, default)
