"""Input validation helpers shared by the estimators, CLI, and service."""

from __future__ import annotations

import numpy as np

from .errors import GeometryError, TopologyError
from .mesh import cross2, HoleSpec, Mesh


def check_mesh(mesh: Mesh) -> Mesh:
    """Validate structural mesh invariants, returning the mesh unchanged."""
    if not isinstance(mesh, Mesh):
        raise TypeError("expected a Mesh")
    if mesh.num_triangles == 0:
        raise TopologyError("mesh has no triangles")
    p = mesh.vertices[mesh.triangles]
    areas = 0.5 * cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    if np.any(areas <= 0):
        raise TopologyError("mesh contains non-positively-oriented triangles")
    n_inner = max(0, len(mesh.boundary_loops) - 1)
    if mesh.euler_characteristic != 1 - n_inner:
        raise TopologyError(
            f"chi = {mesh.euler_characteristic} but mesh has {n_inner} "
            "inner loops; the triangulation is not a planar domain"
        )
    return mesh


def as_hole_specs(holes) -> tuple[HoleSpec, ...]:
    """Coerce dicts/tuples into :class:`HoleSpec` values."""
    out = []
    for h in holes:
        if isinstance(h, HoleSpec):
            out.append(h)
        elif isinstance(h, dict):
            out.append(
                HoleSpec(
                    center=tuple(map(float, h["center"])),
                    radius=float(h.get("radius", 0.0)),
                    degree=int(h.get("degree", 1)),
                    single_triangle=bool(h.get("single_triangle", False)),
                )
            )
        else:
            x, y, r, d = h
            out.append(HoleSpec(center=(float(x), float(y)), radius=float(r),
                                degree=int(d)))
    return tuple(out)


def as_points(points) -> np.ndarray:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise GeometryError("points must be an (n, 2) array")
    return pts
