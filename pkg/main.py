#!/usr/bin/env python3
# Period Calculus - Main Entry Point
"""Period Calculus - Main Entry Point with OOP principles"""

from abc import ABC, abstractmethod
from typing import Any

from src.app import CLIApp


class BaseRunner(ABC):  # Abstraction
    """Abstract application runner (Abstraction, Encapsulation)."""

    def __init__(self):
        self._app = None  # Encapsulation

    @abstractmethod  # Abstraction
    def create_app(self) -> Any:
        pass

    def run(self) -> None:  # Abstraction: template method
        self._app = self.create_app()  # Encapsulation
        self._execute()

    def _execute(self) -> None:  # Encapsulation
        if self._app:
            self._app.run()


class CLIRunner(BaseRunner):  # Inheritance
    def create_app(self) -> CLIApp:  # Polymorphism
        return CLIApp()


class ApplicationFactory:  # Abstraction: Factory pattern
    @staticmethod
    def create_runner(runner_type: str = "cli") -> BaseRunner:
        if runner_type == "cli":
            return CLIRunner()  # Polymorphism
        raise ValueError(f"Invalid runner type: {runner_type}")


def main():
    runner = ApplicationFactory.create_runner("cli")  # Polymorphism
    runner.run()


if __name__ == "__main__":
    main()
