"""Discrete conformal geometry of acute triangulations.

Submodules:

``mesh``
    Triangulations and the vertex-set calculus.
``geometry``
    Embeddings, PL metrics, angles and Delaunay/acuteness predicates.
``conformal``
    Conformal change, curvature, cotangent weights, flow and Newton solver.
``network``
    Dirichlet problems, extremal length/width and recurrence diagnostics.
``lattice``
    Symmetry-reduced extremal length on the unit triangular lattice.
``hyperbolic``
    Poincare-disk geometry and hyperbolic conformal factors.
``modulus``
    Annulus moduli and dilatation of piecewise-linear maps.
``experiments``
    End-to-end experiments on finite patches.
``generators``, ``io``, ``cli``
    Instances, file formats and the command-line interface.
"""

from .errors import (
    AcuteRigidError,
    BudgetExceededError,
    MeshError,
    NonMetricError,
    PreconditionError,
    SingularSystemError,
    SolverError,
)
from .mesh import Triangulation, VertexSet, boundary, closure, edge_set_E, generated_subcomplex, interior, one_ring
from .geometry import (
    Embedding,
    PLMetric,
    circumdisk,
    classify,
    covering_constants,
    delaunay_circumdisk_form,
    induced_metric,
    inner_angle,
)

__version__ = "0.1.0"

__all__ = [
    "AcuteRigidError",
    "BudgetExceededError",
    "MeshError",
    "NonMetricError",
    "PreconditionError",
    "SingularSystemError",
    "SolverError",
    "Triangulation",
    "VertexSet",
    "boundary",
    "closure",
    "edge_set_E",
    "generated_subcomplex",
    "interior",
    "one_ring",
    "Embedding",
    "PLMetric",
    "circumdisk",
    "classify",
    "covering_constants",
    "delaunay_circumdisk_form",
    "induced_metric",
    "inner_angle",
]
