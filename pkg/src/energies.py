# Period Calculus - Energies Module
"""Differentiable discrete energies of immersed meshes with OOP principles."""

import logging
from abc import ABC, abstractmethod
from typing import Optional

import numpy as np
import torch

from .exceptions import DegenerateFace, FrameMissing


def _as_tensor(x: np.ndarray, requires_grad: bool = False) -> torch.Tensor:
    return torch.from_numpy(np.array(x, dtype=np.float64)).requires_grad_(requires_grad)


def _dot(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return (a * b).sum(dim=-1)


class MeshGeometry:  # Encapsulation
    """Cotangent weights, circumcentric dual areas and vertex projectors of a position tensor."""

    def __init__(self, positions: torch.Tensor, faces: torch.Tensor, projector_iterations: int = 12):
        self._p = positions
        self._faces = faces
        self._n = positions.shape[0]
        self._iterations = projector_iterations
        corners = [positions[faces[:, k]] for k in range(3)]
        self._cots = []
        self._opposite = []
        for k in range(3):
            i, j = (k + 1) % 3, (k + 2) % 3
            u = corners[i] - corners[k]
            v = corners[j] - corners[k]
            dot = _dot(u, v)
            cross2 = _dot(u, u) * _dot(v, v) - dot**2
            if bool((cross2 <= 0.0).any()):
                raise DegenerateFace("Degenerate face in energy evaluation")
            self._cots.append(dot / torch.sqrt(cross2))
            self._opposite.append((faces[:, i], faces[:, j], corners[i] - corners[j]))
        e1 = corners[1] - corners[0]
        e2 = corners[2] - corners[0]
        self._edges = torch.stack([e1, e2], dim=2)
        gram = torch.einsum("fma,fmb->fab", self._edges, self._edges)
        self._gram = gram
        self._areas = 0.5 * torch.sqrt(gram[:, 0, 0] * gram[:, 1, 1] - gram[:, 0, 1] ** 2)

    @property
    def face_areas(self) -> torch.Tensor:
        return self._areas

    def dual_areas(self) -> torch.Tensor:
        out = torch.zeros(self._n, dtype=self._p.dtype)
        for cot, (i, j, e) in zip(self._cots, self._opposite):
            contrib = 0.125 * _dot(e, e) * cot
            out = out.index_add(0, i, contrib).index_add(0, j, contrib)
        return out

    def laplacian_apply(self, x: torch.Tensor) -> torch.Tensor:
        """``L x`` with ``L = d0ᵀ W d0`` and ``W_e = ½ (cot + cot)``."""
        out = torch.zeros_like(x)
        for cot, (i, j, _) in zip(self._cots, self._opposite):
            diff = 0.5 * cot[:, None] * (x[i] - x[j])
            out = out.index_add(0, i, diff).index_add(0, j, -diff)
        return out

    def edge_weight_pairs(self) -> list[tuple[torch.Tensor, torch.Tensor, torch.Tensor]]:
        return [(0.5 * cot, i, j) for cot, (i, j, _) in zip(self._cots, self._opposite)]

    def face_bivectors(self) -> torch.Tensor:
        """Area bivectors ``½ (e1 e2ᵀ - e2 e1ᵀ)`` of the faces, (F, m, m)."""
        e1 = self._edges[:, :, 0]
        e2 = self._edges[:, :, 1]
        return 0.5 * (torch.einsum("fm,fn->fmn", e1, e2) - torch.einsum("fm,fn->fmn", e2, e1))

    def vertex_normals(self) -> torch.Tensor:
        """Unit area-weighted vertex normals (m = 3 only)."""
        corners = [self._p[self._faces[:, k]] for k in range(3)]
        face_normals = 0.5 * torch.linalg.cross(corners[1] - corners[0], corners[2] - corners[0], dim=1)
        summed = torch.zeros_like(self._p)
        for k in range(3):
            summed = summed.index_add(0, self._faces[:, k], face_normals)
        norm = torch.linalg.norm(summed, dim=1, keepdim=True)
        if bool((norm <= 0.0).any()):
            raise DegenerateFace("Vertex with vanishing area-weighted normal")
        return summed / norm

    def tangent_projectors(self) -> torch.Tensor:
        """Vertex tangent projectors (V, m, m).

        In R³ this is ``I - n nᵀ`` for the area-weighted normal. Otherwise the
        area bivectors are summed per vertex and ``-B²`` is normalized to unit
        half-trace, whose spectrum is two values near 1 and the rest near 0; a
        few polishing steps make it idempotent.
        """
        m = self._p.shape[1]
        eye = torch.eye(m, dtype=self._p.dtype)
        if m == 3:
            n = self.vertex_normals()
            return eye - torch.einsum("vm,vn->vmn", n, n)
        bivectors = self.face_bivectors()
        summed = torch.zeros(self._n, m, m, dtype=self._p.dtype)
        for k in range(3):
            summed = summed.index_add(0, self._faces[:, k], bivectors)
        square = -summed @ summed
        half_trace = 0.5 * torch.diagonal(square, dim1=1, dim2=2).sum(dim=1)
        if bool((half_trace <= 0.0).any()):
            raise DegenerateFace("Vertex with vanishing area bivector")
        x = square / half_trace[:, None, None]
        for _ in range(self._iterations):
            x2 = x @ x
            x = 3.0 * x2 - 2.0 * x2 @ x
        return x


class BaseEnergy(ABC):  # Abstraction
    """Energy functional of vertex positions evaluated on torch tensors."""

    def __init__(self, faces: np.ndarray):
        self._logger = logging.getLogger(self.__class__.__name__)
        self._faces = torch.from_numpy(np.array(faces, dtype=np.int64))

    @abstractmethod  # Abstraction
    def evaluate(self, positions: torch.Tensor) -> torch.Tensor:
        pass

    def value(self, positions: np.ndarray) -> float:
        with torch.no_grad():
            return self.evaluate(_as_tensor(positions)).item()

    def gradient(self, positions: np.ndarray) -> np.ndarray:
        """Exact gradient of the discrete functional by reverse-mode differentiation."""
        x = _as_tensor(positions, requires_grad=True)
        energy = self.evaluate(x)
        energy.backward()
        self._logger.debug(f"{self.__class__.__name__} = {energy.item():.12e}")
        return x.grad.detach().numpy().copy()


class AreaEnergy(BaseEnergy):  # Inheritance
    def evaluate(self, positions: torch.Tensor) -> torch.Tensor:  # Polymorphism
        return MeshGeometry(positions, self._faces).face_areas.sum()


class WillmoreEnergy(BaseEnergy):  # Inheritance
    """``W = sum |LΦ|² / (4 A_v)``."""

    def evaluate(self, positions: torch.Tensor) -> torch.Tensor:  # Polymorphism
        geom = MeshGeometry(positions, self._faces)
        lap = geom.laplacian_apply(positions)
        return (_dot(lap, lap) / (4.0 * geom.dual_areas())).sum()


class SecondFundamentalEnergy(BaseEnergy):  # Inheritance
    """``½ sum_e w_e |P_j - P_i|²_F`` over normal projectors."""

    def evaluate(self, positions: torch.Tensor) -> torch.Tensor:  # Polymorphism
        geom = MeshGeometry(positions, self._faces)
        normal = torch.eye(positions.shape[1], dtype=positions.dtype) - geom.tangent_projectors()
        total = torch.zeros((), dtype=positions.dtype)
        for w, i, j in geom.edge_weight_pairs():
            diff = normal[j] - normal[i]
            total = total + 0.5 * (w * (diff * diff).sum(dim=(1, 2))).sum()
        return total


def transport_frame(tangent: torch.Tensor, reference: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
    """Project a reference frame (V, m, 2) into new tangent planes and re-orthonormalize."""
    e1 = torch.einsum("vmn,vn->vm", tangent, reference[:, :, 0])
    e1 = e1 / torch.linalg.norm(e1, dim=1, keepdim=True)
    e2 = torch.einsum("vmn,vn->vm", tangent, reference[:, :, 1])
    e2 = e2 - _dot(e2, e1)[:, None] * e1
    e2 = e2 / torch.linalg.norm(e2, dim=1, keepdim=True)
    return e1, e2


class FrameEnergy(BaseEnergy):  # Inheritance
    """``F = 2 sum_e w_e A_e² + 𝕀`` with the reference frame transported to the new tangent planes."""

    def __init__(self, faces: np.ndarray, frame_vectors: Optional[np.ndarray]):
        super().__init__(faces)
        if frame_vectors is None:
            raise FrameMissing("The frame energy needs a tangent frame")
        self._reference = _as_tensor(frame_vectors)
        self._second = SecondFundamentalEnergy(faces)

    def connection_term(self, positions: torch.Tensor) -> torch.Tensor:
        geom = MeshGeometry(positions, self._faces)
        e1, e2 = transport_frame(geom.tangent_projectors(), self._reference)
        total = torch.zeros((), dtype=positions.dtype)
        for w, i, j in geom.edge_weight_pairs():
            num = _dot(e2[i], e1[j]) - _dot(e1[i], e2[j])
            den = _dot(e1[i], e1[j]) + _dot(e2[i], e2[j])
            angle = torch.atan2(num, den)
            total = total + 2.0 * (w * angle**2).sum()
        return total

    def evaluate(self, positions: torch.Tensor) -> torch.Tensor:  # Polymorphism
        return self.connection_term(positions) + self._second.evaluate(positions)


class EnergyFactory:
    @staticmethod
    def create(kind: str, faces: np.ndarray, frame_vectors: Optional[np.ndarray] = None) -> BaseEnergy:
        if kind == "area":
            return AreaEnergy(faces)
        if kind == "willmore":
            return WillmoreEnergy(faces)
        if kind == "second_fundamental":
            return SecondFundamentalEnergy(faces)
        if kind == "frame":
            return FrameEnergy(faces, frame_vectors)
        raise ValueError(f"Unknown energy kind: {kind}")
