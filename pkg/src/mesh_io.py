# Period Calculus - Mesh I/O Module
"""OFF, OBJ and extended-vertex mesh readers and writers with OOP principles."""

import logging
from abc import ABC, abstractmethod
from pathlib import Path

import numpy as np

from .exceptions import MeshFormatError
from .mesh import TriangleMesh, build_mesh


class BaseMeshReader(ABC):  # Abstraction
    def __init__(self, path: Path):
        self._path = self._validate_path(Path(path))  # Encapsulation
        self._logger = logging.getLogger(self.__class__.__name__)

    def _validate_path(self, path: Path) -> Path:  # Encapsulation
        if not path.exists():
            raise FileNotFoundError(f"Mesh file not found: {path}")
        return path.resolve()

    def _lines(self) -> list[str]:
        text = self._path.read_text(encoding="utf-8")
        return [line.split("#", 1)[0].strip() for line in text.splitlines() if line.split("#", 1)[0].strip()]

    @abstractmethod  # Abstraction
    def read_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        pass

    def read(self) -> TriangleMesh:
        try:
            positions, faces = self.read_arrays()
        except (ValueError, IndexError) as e:
            raise MeshFormatError(f"Malformed mesh file {self._path.name}: {e}") from e
        self._logger.info(f"Read {positions.shape[0]} vertices, {faces.shape[0]} faces from {self._path.name}")
        return build_mesh(positions, faces)


class OFFReader(BaseMeshReader):  # Inheritance
    def read_arrays(self) -> tuple[np.ndarray, np.ndarray]:  # Polymorphism
        lines = self._lines()
        header = lines[0]
        if not header.startswith("OFF"):
            raise MeshFormatError("OFF file must start with 'OFF'")
        rest = header[3:].split()
        counts_line = rest if rest else lines[1].split()
        start = 1 if rest else 2
        n_vertices, n_faces = int(counts_line[0]), int(counts_line[1])
        positions = np.array(
            [[float(x) for x in lines[start + i].split()[:3]] for i in range(n_vertices)]
        )
        faces = []
        for line in lines[start + n_vertices : start + n_vertices + n_faces]:
            parts = [int(x) for x in line.split()]
            if parts[0] != 3:
                raise MeshFormatError(f"Only triangles are supported, got a {parts[0]}-gon")
            faces.append(parts[1:4])
        return positions, np.array(faces, dtype=np.int64)


class OBJReader(BaseMeshReader):  # Inheritance
    def read_arrays(self) -> tuple[np.ndarray, np.ndarray]:  # Polymorphism
        positions, faces = [], []
        for line in self._lines():
            parts = line.split()
            if parts[0] == "v":
                positions.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                corners = [int(p.split("/")[0]) for p in parts[1:]]
                if len(corners) != 3:
                    raise MeshFormatError(f"Only triangles are supported, got a {len(corners)}-gon")
                faces.append([c - 1 if c > 0 else len(positions) + c for c in corners])
        return np.array(positions), np.array(faces, dtype=np.int64)


class ExtendedReader(BaseMeshReader):  # Inheritance
    """``EXT m V F`` header, V lines of m floats, F lines of three 0-based indices."""

    def read_arrays(self) -> tuple[np.ndarray, np.ndarray]:  # Polymorphism
        lines = self._lines()
        header = lines[0].split()
        if header[0] != "EXT":
            raise MeshFormatError("Extended mesh file must start with 'EXT m V F'")
        dim, n_vertices, n_faces = (int(x) for x in header[1:4])
        positions = np.array([[float(x) for x in lines[1 + i].split()] for i in range(n_vertices)])
        if positions.shape[1] != dim:
            raise MeshFormatError(f"Expected {dim} coordinates per vertex, got {positions.shape[1]}")
        faces = np.array(
            [[int(x) for x in lines[1 + n_vertices + i].split()] for i in range(n_faces)],
            dtype=np.int64,
        )
        return positions, faces


class BaseMeshWriter(ABC):  # Abstraction
    def __init__(self, path: Path):
        self._path = Path(path)  # Encapsulation

    @abstractmethod  # Abstraction
    def _format(self, mesh: TriangleMesh) -> list[str]:
        pass

    def write(self, mesh: TriangleMesh) -> Path:
        self._path.parent.mkdir(parents=True, exist_ok=True)
        self._path.write_text("\n".join(self._format(mesh)) + "\n", encoding="utf-8")
        return self._path


class OFFWriter(BaseMeshWriter):  # Inheritance
    def _format(self, mesh: TriangleMesh) -> list[str]:  # Polymorphism
        if mesh.ambient_dim != 3:
            raise MeshFormatError("OFF stores 3D positions; use the extended format")
        lines = ["OFF", f"{mesh.n_vertices} {mesh.n_faces} {mesh.n_edges}"]
        lines += [" ".join(repr(float(x)) for x in p) for p in mesh.positions]
        lines += [f"3 {a} {b} {c}" for a, b, c in mesh.faces]
        return lines


class OBJWriter(BaseMeshWriter):  # Inheritance
    def _format(self, mesh: TriangleMesh) -> list[str]:  # Polymorphism
        if mesh.ambient_dim != 3:
            raise MeshFormatError("OBJ stores 3D positions; use the extended format")
        lines = ["v " + " ".join(repr(float(x)) for x in p) for p in mesh.positions]
        lines += [f"f {a + 1} {b + 1} {c + 1}" for a, b, c in mesh.faces]
        return lines


class ExtendedWriter(BaseMeshWriter):  # Inheritance
    def _format(self, mesh: TriangleMesh) -> list[str]:  # Polymorphism
        lines = [f"EXT {mesh.ambient_dim} {mesh.n_vertices} {mesh.n_faces}"]
        lines += [" ".join(repr(float(x)) for x in p) for p in mesh.positions]
        lines += [f"{a} {b} {c}" for a, b, c in mesh.faces]
        return lines


class MeshIOFactory:  # Abstraction
    _readers = {".off": OFFReader, ".obj": OBJReader, ".ext": ExtendedReader}
    _writers = {".off": OFFWriter, ".obj": OBJWriter, ".ext": ExtendedWriter}

    @classmethod
    def create_reader(cls, path: Path) -> BaseMeshReader:
        suffix = Path(path).suffix.lower()
        if suffix not in cls._readers:
            raise MeshFormatError(f"Unsupported mesh format: {suffix}")
        return cls._readers[suffix](path)

    @classmethod
    def create_writer(cls, path: Path) -> BaseMeshWriter:
        suffix = Path(path).suffix.lower()
        if suffix not in cls._writers:
            raise MeshFormatError(f"Unsupported mesh format: {suffix}")
        return cls._writers[suffix](path)


def read_mesh(path: Path) -> TriangleMesh:
    return MeshIOFactory.create_reader(path).read()


def write_mesh(mesh: TriangleMesh, path: Path) -> Path:
    return MeshIOFactory.create_writer(path).write(mesh)
