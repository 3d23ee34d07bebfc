"""Exception types shared across the toolkit."""


class CrossFieldError(Exception):
    """Base class for all toolkit errors."""


class MeshParseError(CrossFieldError):
    """Malformed mesh file.  Carries the offending line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class GeometryError(CrossFieldError):
    """Invalid geometric input (self-intersecting polygon, bad radii, ...)."""


class TopologyError(CrossFieldError):
    """Mesh connectivity violates a structural requirement."""


class PlacementError(CrossFieldError):
    """A hole overlaps the boundary or another hole."""


class RemeshNeededError(CrossFieldError):
    """Hole removal produced a non-simple boundary; the mesh is too coarse."""


class DegenerateFieldError(CrossFieldError):
    """Field values too close to zero for a winding number to be defined."""


class AssemblyError(CrossFieldError):
    """Finite-element assembly failed (degenerate triangle, bad space)."""


class InfeasibleTopologyError(CrossFieldError):
    """Prescribed hole degrees do not meet the topological target."""

    def __init__(self, message, ledger=None):
        super().__init__(message)
        self.ledger = ledger


class IncompatibilityError(CrossFieldError):
    """Neumann data incompatible with the prescribed sources."""


class EvaluationError(CrossFieldError):
    """A point evaluation could not be carried out (probe outside domain)."""
