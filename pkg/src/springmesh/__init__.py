"""Spring-relaxation generator for unstructured triangle and tetrahedral meshes.

Nodes are placed on a lattice graded by a desired-length field, connected
by Delaunay triangulation, and relaxed as a network of linear springs
until the elements are well shaped.  A refined sub-region can be
embedded in a rectangle, an annulus or a spherical shell.
"""
from .domain import Annulus, Rectangle, SphericalShell
from .errors import (
    ConfigError,
    ConstraintDeficiencyError,
    DegenerateInputError,
    NumericalError,
    OutOfCoverageError,
    SpringMeshError,
    StructuralError,
    UnsupportedDimensionError,
)
from .guide import GuideMesh, build_guide
from .mesh import EdgeSet, Mesh, barycentres, derive_edges, node_element_adjacency
from .params import Table1Params
from .quality import MeshStats, element_quality, mesh_stats, misfit_mu, q_tet, q_triangle
from .springs import equilibrium
from .triangulation import delaunay, retriangulate
from .workflow import PRESETS, RunResult, preset_params, run, run_desk_scale

__version__ = "0.1.0"

__all__ = [
    "Annulus",
    "ConfigError",
    "ConstraintDeficiencyError",
    "DegenerateInputError",
    "EdgeSet",
    "GuideMesh",
    "Mesh",
    "MeshStats",
    "NumericalError",
    "OutOfCoverageError",
    "PRESETS",
    "Rectangle",
    "RunResult",
    "SphericalShell",
    "SpringMeshError",
    "StructuralError",
    "Table1Params",
    "UnsupportedDimensionError",
    "barycentres",
    "build_guide",
    "delaunay",
    "derive_edges",
    "element_quality",
    "equilibrium",
    "mesh_stats",
    "misfit_mu",
    "node_element_adjacency",
    "preset_params",
    "q_tet",
    "q_triangle",
    "retriangulate",
    "run",
    "run_desk_scale",
]
