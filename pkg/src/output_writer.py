# Period Calculus - Output Writer Module
"""Output writers with OOP principles."""

import csv
import json
import logging
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Any, TextIO, Union

from .models import to_jsonable


def dumps(data: Any) -> str:
    """Deterministic JSON: sorted keys, complex as [re, im], no timestamps."""
    return json.dumps(to_jsonable(data), sort_keys=True, ensure_ascii=False, allow_nan=True)


class BaseWriter(ABC):  # Abstraction
    """Abstract writer (Abstraction, Encapsulation)."""

    def __init__(self, output_path: Path):
        self._output_path = self._validate_path(output_path)  # Encapsulation
        self._logger = logging.getLogger(self.__class__.__name__)

    def _validate_path(self, path: Path) -> Path:  # Encapsulation
        safe_path = Path(path).resolve()
        try:
            safe_path.parent.mkdir(parents=True, exist_ok=True)
        except OSError as e:
            raise RuntimeError(f"Cannot create directory {safe_path.parent}: {e}") from e
        return safe_path

    @abstractmethod  # Abstraction
    def write(self, data: Any) -> None:
        pass

    @property  # Encapsulation
    def output_path(self) -> Path:
        return self._output_path


class JSONWriter(BaseWriter):  # Inheritance
    def write(self, data: Any) -> None:  # Polymorphism
        try:
            with open(self._output_path, "w", encoding="utf-8") as f:
                f.write(dumps(data) + "\n")
        except OSError as e:
            raise RuntimeError(f"Cannot write to {self._output_path}: {e}") from e
        self._logger.info(f"Wrote {self._output_path}")


class JSONLWriter(BaseWriter):  # Inheritance
    """JSON-lines writer; ``append`` streams one record at a time."""

    def __init__(self, output_path: Path):
        super().__init__(output_path)
        self._output_path.write_text("", encoding="utf-8")

    def write(self, data: Union[list[Any], Any]) -> None:  # Polymorphism
        try:
            with open(self._output_path, "a", encoding="utf-8") as f:
                if isinstance(data, list):
                    self._write_list(f, data)
                else:
                    self._write_single(f, data)
        except OSError as e:
            raise RuntimeError(f"Cannot write to {self._output_path}: {e}") from e

    def append(self, item: Any) -> None:
        self.write(item)

    def _write_list(self, f: TextIO, data: list[Any]) -> None:  # Encapsulation
        for item in data:
            self._write_single(f, item)

    def _write_single(self, f: TextIO, item: Any) -> None:  # Encapsulation
        f.write(dumps(item) + "\n")


class CSVWriter(BaseWriter):  # Inheritance
    """Per-index field tables; complex columns split into ``_re`` / ``_im``."""

    def write(self, data: dict[str, Any]) -> None:  # Polymorphism
        columns: dict[str, list[Any]] = {}
        for name, values in sorted(data.items()):
            rows = to_jsonable(values)
            if rows and isinstance(rows[0], list):
                width = len(rows[0])
                suffixes = ["re", "im"] if width == 2 and self._is_complex(values) else [str(i) for i in range(width)]
                for i, suffix in enumerate(suffixes):
                    columns[f"{name}_{suffix}"] = [row[i] for row in rows]
            else:
                columns[name] = rows
        lengths = {len(v) for v in columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"Field columns have different lengths: {sorted(lengths)}")
        try:
            with open(self._output_path, "w", encoding="utf-8", newline="") as f:
                writer = csv.writer(f)
                writer.writerow(["index", *columns])
                for i, row in enumerate(zip(*columns.values())):
                    writer.writerow([i, *row])
        except OSError as e:
            raise RuntimeError(f"Cannot write to {self._output_path}: {e}") from e
        self._logger.info(f"Wrote {self._output_path}")

    @staticmethod
    def _is_complex(values: Any) -> bool:
        return getattr(values, "dtype", None) is not None and values.dtype.kind == "c"


class WriterFactory:  # Factory pattern
    @staticmethod
    def create(path: Path) -> BaseWriter:
        suffix = Path(path).suffix.lower()
        if suffix == ".json":
            return JSONWriter(path)
        if suffix == ".jsonl":
            return JSONLWriter(path)
        if suffix == ".csv":
            return CSVWriter(path)
        raise ValueError(f"Unsupported output format: {suffix}")
