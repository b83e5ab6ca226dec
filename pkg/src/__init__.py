"""Period Calculus - Period matrices of discrete surfaces and their variations."""

__version__ = "1.0.0"
__author__ = "Period Calculus Contributors"

from .hodge import harmonic_basis, period_matrix
from .mesh import TriangleMesh, build_mesh, canonical_homology_basis
from .pipeline_orchestrator import PipelineOrchestrator

__all__ = [
    "PipelineOrchestrator",
    "TriangleMesh",
    "build_mesh",
    "canonical_homology_basis",
    "harmonic_basis",
    "period_matrix",
]
