"""2D cross-field design toolkit.

Prescribe interior singularities as drilled holes with degree targets,
solve the constrained boundary-aligned field, and price configurations
with vortex energies and an index-bookkeeping ledger.
"""

from .assembly import DofSpace, LinearSystem, assemble, build_space
from .conjugate import ConjugateSolution, solve_conjugate
from .corners import (
    CornerAssignment,
    InteriorPlan,
    assign_boundary_singularities,
    boundary_singular_energy,
    classify_corner,
)
from .degree import (
    ConstraintForm,
    hole_constraint_matrix,
    measured_hole_degrees,
    winding_degree,
)
from .energy import (
    EnergyReport,
    SingularityConfig,
    expansion_check,
    hole_energy,
    renormalized_energy,
    vortex_potential,
)
from .errors import (
    CrossFieldError,
    DegenerateFieldError,
    GeometryError,
    IncompatibilityError,
    InfeasibleTopologyError,
    MeshParseError,
    PlacementError,
    RemeshNeededError,
    TopologyError,
)
from .estimators import CrossFieldSolver, HarmonicConjugateSolver
from .mesh import (
    CornerInfo,
    HoleSpec,
    Mesh,
    boundary_analysis,
    drill_holes,
    parse_msh,
    preset_domain,
)
from .solver import (
    FieldU,
    SolveOptions,
    SolveReport,
    detect_singular_triangles,
    dirichlet_energy,
    extract_crosses,
    solve,
)
from .topology import PHLedger, interior_target, ph_check, valence

__version__ = "0.1.0"

__all__ = [
    "CornerAssignment",
    "CornerInfo",
    "ConjugateSolution",
    "ConstraintForm",
    "CrossFieldError",
    "CrossFieldSolver",
    "DegenerateFieldError",
    "DofSpace",
    "EnergyReport",
    "FieldU",
    "GeometryError",
    "HarmonicConjugateSolver",
    "HoleSpec",
    "IncompatibilityError",
    "InfeasibleTopologyError",
    "InteriorPlan",
    "LinearSystem",
    "Mesh",
    "MeshParseError",
    "PHLedger",
    "PlacementError",
    "RemeshNeededError",
    "SingularityConfig",
    "SolveOptions",
    "SolveReport",
    "TopologyError",
    "assemble",
    "assign_boundary_singularities",
    "boundary_analysis",
    "boundary_singular_energy",
    "build_space",
    "classify_corner",
    "detect_singular_triangles",
    "dirichlet_energy",
    "drill_holes",
    "expansion_check",
    "extract_crosses",
    "hole_constraint_matrix",
    "hole_energy",
    "interior_target",
    "measured_hole_degrees",
    "parse_msh",
    "ph_check",
    "preset_domain",
    "renormalized_energy",
    "solve",
    "solve_conjugate",
    "valence",
    "vortex_potential",
    "winding_degree",
]
