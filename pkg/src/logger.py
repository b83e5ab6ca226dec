# Period Calculus - Logger Module
"""Logger with OOP principles."""

import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Optional


class BaseLoggerFactory(ABC):  # Abstraction
    """Abstract logger factory (Abstraction, Encapsulation)."""

    def __init__(self, name: str = ""):
        self._name = name  # Encapsulation
        self._formatter = self._create_formatter()  # Encapsulation

    @abstractmethod  # Abstraction
    def create_logger(self, output_dir: Optional[Path] = None, debug: bool = False) -> logging.Logger:
        pass

    def _create_formatter(self) -> logging.Formatter:  # Encapsulation
        return logging.Formatter(
            "%(asctime)s [%(levelname)s] %(name)s - %(message)s",
            "%Y-%m-%d %H:%M:%S",
        )


class LoggerFactory(BaseLoggerFactory):  # Inheritance
    """Root logger set-up; every class logs through its own child logger."""

    def create_logger(self, output_dir: Optional[Path] = None, debug: bool = False) -> logging.Logger:  # Polymorphism
        logger = logging.getLogger(self._name)
        log_level = logging.DEBUG if debug else logging.INFO
        logger.setLevel(log_level)

        if not any(getattr(h, "_period_calculus", False) for h in logger.handlers):
            self._add_console_handler(logger, log_level)
            if output_dir:
                self._add_file_handler(logger, output_dir, log_level)
        else:
            for handler in logger.handlers:
                handler.setLevel(log_level)
        return logger

    def _tag(self, handler: logging.Handler, log_level: int) -> logging.Handler:  # Encapsulation
        handler.setLevel(log_level)
        handler.setFormatter(self._formatter)
        handler._period_calculus = True  # type: ignore[attr-defined]
        return handler

    def _add_console_handler(self, logger: logging.Logger, log_level: int) -> None:  # Encapsulation
        # stdout carries the reports
        logger.addHandler(self._tag(logging.StreamHandler(), log_level))

    def _add_file_handler(self, logger: logging.Logger, output_dir: Path, log_level: int) -> None:  # Encapsulation
        try:
            output_dir.mkdir(parents=True, exist_ok=True)
            handler = logging.FileHandler(output_dir / "period_calculus.log", encoding="utf-8")
            logger.addHandler(self._tag(handler, log_level))
        except OSError as e:
            logger.warning(f"Could not create file handler: {e}")


def get_logger(name: str = "", output_dir: Optional[Path] = None, debug: bool = False) -> logging.Logger:  # Factory function
    return LoggerFactory(name).create_logger(output_dir, debug)
