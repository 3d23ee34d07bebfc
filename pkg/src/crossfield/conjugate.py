"""Harmonic conjugate of the cross phase: a scalar Neumann problem.

The scalar field satisfies a Poisson equation with quarter-index delta
sources and a Neumann datum equal to the boundary curvature.  Curvature is
discretized as the exterior turning angle lumped at each boundary vertex,
which conserves the total turning exactly; compatibility then reduces to
the exact integer identity ``sum of quarter indices = 4 * chi``.

Both interior and boundary sources are allowed: a boundary source simply
offsets the curvature load already sitting at its vertex.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import scipy.sparse.linalg as spla

from .assembly import build_space, scalar_stiffness
from .energy import boundary_turning_loads
from .errors import IncompatibilityError
from .mesh import Mesh


@dataclass(frozen=True)
class ConjugateSolution:
    """Mean-zero scalar solution plus its source bookkeeping."""

    mesh: Mesh
    values: np.ndarray                  # (nv,)
    sources: tuple                      # ((x, y, quarter_index), ...)
    source_vertices: tuple

    def to_json(self):
        return {
            "values": [float(v) for v in self.values],
            "sources": [
                {"point": [float(x), float(y)], "k": str(Fraction(k))}
                for x, y, k in self.sources
            ],
        }


def solve_conjugate(mesh: Mesh, sources: Sequence) -> ConjugateSolution:
    """Solve the curvature-flux Neumann problem with quarter sources.

    ``sources`` is a sequence of ``(point, k)`` with ``k`` counted in
    quarters (so an interior cross vortex is ``k = 4``).  Compatibility
    ``sum(k) = 4 * chi`` is enforced exactly in quarter arithmetic.
    """
    chi = mesh.euler_characteristic
    ks = [Fraction(k).limit_denominator(4) for _, k in sources]
    total = sum(ks, Fraction(0))
    if total != 4 * chi:
        raise IncompatibilityError(
            f"source quarters sum to {total}, need 4*chi = {4 * chi}"
        )

    space = build_space(mesh, "P1")
    K = scalar_stiffness(space)
    nv = mesh.num_vertices
    F = np.zeros(nv)
    for v, load in boundary_turning_loads(mesh).items():
        F[v] += load

    source_vertices = []
    stored = []
    for (point, k), kq in zip(sources, ks):
        px, py = float(point[0]), float(point[1])
        dist = np.hypot(mesh.vertices[:, 0] - px, mesh.vertices[:, 1] - py)
        v = int(np.argmin(dist))
        source_vertices.append(v)
        F[v] -= 2 * math.pi * float(kq) / 4.0
        stored.append((px, py, kq))

    pin = 0
    freem = np.ones(nv, dtype=bool)
    freem[pin] = False
    x = np.zeros(nv)
    x[freem] = spla.spsolve(K[freem][:, freem].tocsc(), F[freem])
    w = space.lumped_area
    x -= float(np.dot(w, x) / np.sum(w))
    return ConjugateSolution(
        mesh=mesh,
        values=x,
        sources=tuple(stored),
        source_vertices=tuple(source_vertices),
    )


def iso_segments(mesh: Mesh, values: np.ndarray, levels: Sequence[float]):
    """Iso-line segments of a vertex field by per-triangle marching."""
    segs = []
    tri_vals = values[mesh.triangles]
    pts = mesh.vertices[mesh.triangles]
    for level in levels:
        for t in range(len(mesh.triangles)):
            v = tri_vals[t]
            p = pts[t]
            crossings = []
            for i in range(3):
                j = (i + 1) % 3
                a, b = v[i], v[j]
                if (a - level) * (b - level) < 0:
                    s = (level - a) / (b - a)
                    crossings.append(p[i] + s * (p[j] - p[i]))
            if len(crossings) == 2:
                segs.append((crossings[0], crossings[1]))
    return segs
