"""Finite-element spaces and the Laplace stiffness system.

Two scalar spaces are supported on a triangle mesh: nodal P1 (dofs at
vertices) and nonconforming edge-midpoint elements (dofs at edge
midpoints, the default for field solves).  The vector system interleaves
the two field components per site: site ``s`` owns rows ``2s`` and
``2s+1``.

Boundary data pins the representation field to the fourth power of a unit
boundary tangent, taken from one adjacent boundary edge (the edge
preceding the site in loop order for vertex dofs, the edge itself for
midpoint dofs).  Drilled hole loops carry no Dirichlet data; their
degrees are enforced by quadratic constraints instead.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import AssemblyError
from .mesh import cross2, Mesh


@dataclass(frozen=True)
class DofSpace:
    """Enumerated dof sites for one scalar copy of the field."""

    kind: str                        # "P1" or "CR"
    mesh: Mesh
    sites: np.ndarray                # (n, 2) site coordinates
    element_dofs: np.ndarray         # (nt, 3) site index per local basis fn
    boundary_sites: np.ndarray       # site ids with Dirichlet data (outer/inner)
    boundary_tangents: np.ndarray    # (len(boundary_sites), 2) unit tangents
    site_loop: np.ndarray            # loop id per site, -1 interior, -2 hole loop
    hole_cycles: tuple               # ((hole_idx, (site ids ccw around hole)), ...)
    lumped_area: np.ndarray          # (n,) one third of adjacent triangle areas

    @property
    def count(self) -> int:
        return len(self.sites)


def _hole_loop_sets(mesh: Mesh):
    return [frozenset(loop) for loop, _ in mesh.hole_loops]


def _edge_index(mesh: Mesh):
    """Map undirected edge -> dof id, plus midpoint coordinates."""
    edge_ids: dict[frozenset, int] = {}
    midpoints = []
    tri_edges = np.zeros((mesh.num_triangles, 3), dtype=int)
    for t, (a, b, c) in enumerate(mesh.triangles):
        # local dof i sits on the edge opposite vertex i
        for i, (u, v) in enumerate(((b, c), (c, a), (a, b))):
            key = frozenset((int(u), int(v)))
            if key not in edge_ids:
                edge_ids[key] = len(midpoints)
                midpoints.append(0.5 * (mesh.vertices[u] + mesh.vertices[v]))
            tri_edges[t, i] = edge_ids[key]
    return edge_ids, np.array(midpoints), tri_edges


def build_space(mesh: Mesh, kind: str = "CR") -> DofSpace:
    """Enumerate dof sites, boundary tangents, and hole cycles."""
    if kind not in ("P1", "CR"):
        raise AssemblyError(f"unknown space kind {kind!r}")
    hole_sets = _hole_loop_sets(mesh)

    if kind == "P1":
        sites = mesh.vertices.copy()
        element_dofs = mesh.triangles.copy()
        site_loop = -np.ones(len(sites), dtype=int)
        b_sites, b_tans = [], []
        for li, loop in enumerate(mesh.boundary_loops):
            is_hole = frozenset(loop) in hole_sets
            for j, v in enumerate(loop):
                site_loop[v] = -2 if is_hole else li
                if not is_hole:
                    prev = loop[j - 1]
                    t = mesh.vertices[v] - mesh.vertices[prev]
                    b_sites.append(int(v))
                    b_tans.append(t / np.linalg.norm(t))
        hole_cycles = tuple(
            (hi, tuple(int(v) for v in loop))
            for hi, (loop, _) in enumerate(mesh.hole_loops)
        )
    else:
        edge_ids, sites, element_dofs = _edge_index(mesh)
        site_loop = -np.ones(len(sites), dtype=int)
        b_sites, b_tans = [], []
        for li, loop in enumerate(mesh.boundary_loops):
            is_hole = frozenset(loop) in hole_sets
            for j, v in enumerate(loop):
                w = loop[(j + 1) % len(loop)]
                e = edge_ids.get(frozenset((int(v), int(w))))
                if e is None:
                    raise AssemblyError("boundary loop edge missing from mesh")
                site_loop[e] = -2 if is_hole else li
                if not is_hole:
                    t = mesh.vertices[w] - mesh.vertices[v]
                    b_sites.append(int(e))
                    b_tans.append(t / np.linalg.norm(t))
        hole_cycles = []
        for hi, (loop, _) in enumerate(mesh.hole_loops):
            cyc = []
            for j, v in enumerate(loop):
                w = loop[(j + 1) % len(loop)]
                cyc.append(edge_ids[frozenset((int(v), int(w)))])
            hole_cycles.append((hi, tuple(cyc)))
        hole_cycles = tuple(hole_cycles)

    areas = _areas(mesh)
    lumped = np.zeros(len(sites))
    np.add.at(lumped, element_dofs.ravel(), np.repeat(areas / 3.0, 3))

    return DofSpace(
        kind=kind,
        mesh=mesh,
        sites=np.asarray(sites, dtype=float),
        element_dofs=element_dofs,
        boundary_sites=np.array(b_sites, dtype=int),
        boundary_tangents=(
            np.array(b_tans, dtype=float) if b_tans else np.zeros((0, 2))
        ),
        site_loop=site_loop,
        hole_cycles=hole_cycles,
        lumped_area=lumped,
    )


def _areas(mesh: Mesh) -> np.ndarray:
    p = mesh.vertices[mesh.triangles]
    areas = 0.5 * cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    if np.any(areas <= 0):
        bad = int(np.argmin(areas))
        raise AssemblyError(f"degenerate or flipped triangle {bad}")
    return areas


def _gradients(mesh: Mesh, areas: np.ndarray) -> np.ndarray:
    """Barycentric gradients, shape (nt, 3, 2)."""
    p = mesh.vertices[mesh.triangles]
    grads = np.empty((mesh.num_triangles, 3, 2))
    for i in range(3):
        e = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
        grads[:, i, 0] = -e[:, 1]
        grads[:, i, 1] = e[:, 0]
    grads /= (2 * areas)[:, None, None]
    return grads


def scalar_stiffness(space: DofSpace) -> sp.csr_matrix:
    """One scalar copy of the Laplace stiffness with exact affine formulas."""
    mesh = space.mesh
    areas = _areas(mesh)
    grads = _gradients(mesh, areas)
    # midpoint basis = 1 - 2*lambda, so its gradients are -2x barycentric
    factor = 4.0 if space.kind == "CR" else 1.0
    local = factor * np.einsum("tid,tjd,t->tij", grads, grads, areas)
    dofs = space.element_dofs
    rows = np.repeat(dofs, 3, axis=1).ravel()
    cols = np.tile(dofs, (1, 3)).ravel()
    K = sp.coo_matrix(
        (local.ravel(), (rows, cols)), shape=(space.count, space.count)
    )
    return K.tocsr()


def tangent_power_values(tangents: np.ndarray) -> np.ndarray:
    """Fourth power of unit tangents as 2-vectors (direction-insensitive)."""
    z = (tangents[:, 0] + 1j * tangents[:, 1]) ** 4
    return np.column_stack((z.real, z.imag))


@dataclass(frozen=True)
class LinearSystem:
    """Vector Laplace system with tangent-power Dirichlet data."""

    space: DofSpace
    K: sp.csr_matrix                 # (2n, 2n), two interleaved copies
    K_scalar: sp.csr_matrix          # (n, n)
    b: np.ndarray                    # (2n,)
    dirichlet_mask: np.ndarray       # (2n,) bool
    dirichlet_values: np.ndarray     # (2n,)

    @property
    def size(self) -> int:
        return self.K.shape[0]


def assemble(space: DofSpace) -> LinearSystem:
    """Assemble the interleaved vector stiffness and boundary data."""
    Ks = scalar_stiffness(space)
    K = sp.kron(Ks, sp.eye(2), format="csr")
    n2 = 2 * space.count
    b = np.zeros(n2)
    mask = np.zeros(n2, dtype=bool)
    values = np.zeros(n2)
    if len(space.boundary_sites):
        g = tangent_power_values(space.boundary_tangents)
        mask[2 * space.boundary_sites] = True
        mask[2 * space.boundary_sites + 1] = True
        values[2 * space.boundary_sites] = g[:, 0]
        values[2 * space.boundary_sites + 1] = g[:, 1]
    return LinearSystem(
        space=space, K=K, K_scalar=Ks, b=b,
        dirichlet_mask=mask, dirichlet_values=values,
    )
