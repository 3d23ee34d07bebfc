"""Planar triangle meshes: loading, preset domains, hole drilling.

Conventions used throughout the toolkit:

* triangles are stored counter-clockwise (positive signed area);
* boundary loops are stored with the domain on the left, i.e. the outer
  loop runs counter-clockwise and every inner loop clockwise;
* drilled-hole DOF cycles are additionally exposed counter-clockwise
  *around the hole* (``Mesh.hole_loops``), which is the orientation the
  winding/constraint machinery expects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import Delaunay

from .errors import (
    GeometryError,
    MeshParseError,
    PlacementError,
    RemeshNeededError,
    TopologyError,
)

DEFAULT_CORNER_THRESHOLD = math.pi / 16


def cross2(a, b):
    """z-component of the cross product of stacked 2D vectors."""
    a = np.asarray(a)
    b = np.asarray(b)
    return a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]


@dataclass(frozen=True)
class HoleSpec:
    """A drilled singularity: disk (or single triangle) plus a target degree.

    ``degree`` is expressed in representation-field units, i.e. four times
    the cross index the hole stands for.
    """

    center: tuple[float, float]
    radius: float = 0.0
    degree: int = 1
    single_triangle: bool = False

    def __post_init__(self):
        if not self.single_triangle and self.radius <= 0.0:
            raise GeometryError("hole radius must be positive")

    def to_json(self):
        return {
            "center": [float(self.center[0]), float(self.center[1])],
            "radius": float(self.radius),
            "degree": int(self.degree),
            "single_triangle": bool(self.single_triangle),
        }


@dataclass(frozen=True)
class CornerInfo:
    """A boundary vertex where the tangent turns by more than the threshold."""

    vertex: int
    interior_angle: float  # total angle inside the domain, in (0, 2*pi)
    tangent_jump: float    # pi - interior_angle, in (-pi, pi)
    loop: int = 0


@dataclass(frozen=True)
class Mesh:
    """Immutable planar triangulation with boundary structure.

    ``boundary_loops`` hold every loop (domain-on-left orientation);
    ``hole_loops`` maps drilled holes to (ccw-around-hole vertex cycle, spec).
    """

    vertices: np.ndarray                     # (nv, 2) float
    triangles: np.ndarray                    # (nt, 3) int, ccw
    boundary_loops: tuple[tuple[int, ...], ...] = ()
    hole_loops: tuple[tuple[tuple[int, ...], HoleSpec], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, dtype=float))
        object.__setattr__(self, "triangles", np.asarray(self.triangles, dtype=int))

    # -- basic quantities -------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def num_triangles(self) -> int:
        return len(self.triangles)

    def edges(self) -> set[frozenset]:
        out = set()
        for a, b, c in self.triangles:
            out.add(frozenset((int(a), int(b))))
            out.add(frozenset((int(b), int(c))))
            out.add(frozenset((int(c), int(a))))
        return out

    @property
    def euler_characteristic(self) -> int:
        return self.num_vertices - len(self.edges()) + self.num_triangles

    def triangle_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])

    def outer_loop_index(self) -> int:
        areas = [abs(_loop_area(self.vertices, loop)) for loop in self.boundary_loops]
        return int(np.argmax(areas))

    def to_json(self):
        return {
            "vertices": [[float(x), float(y)] for x, y in self.vertices],
            "triangles": [[int(a), int(b), int(c)] for a, b, c in self.triangles],
            "loops": [list(map(int, loop)) for loop in self.boundary_loops],
            "holes": [
                {"loop": list(map(int, loop)), "spec": spec.to_json()}
                for loop, spec in self.hole_loops
            ],
        }


def _loop_area(vertices: np.ndarray, loop: Sequence[int]) -> float:
    pts = vertices[list(loop)]
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _orient_triangles(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    tri = np.array(triangles, dtype=int, copy=True)
    p = vertices[tri]
    signed = cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = signed < 0
    tri[flip] = tri[flip][:, [0, 2, 1]]
    return tri


def _boundary_edges(triangles: np.ndarray) -> dict:
    """Directed boundary edges (a, b) so that the domain lies on the left.

    A ccw triangle traverses its edges so the interior is on the left; a
    boundary edge appears in exactly one triangle, hence keeps that
    orientation.
    """
    count: dict[frozenset, int] = {}
    directed: dict[frozenset, tuple[int, int]] = {}
    for a, b, c in triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            key = frozenset((int(u), int(v)))
            n = count.get(key, 0) + 1
            count[key] = n
            if n > 2:
                raise TopologyError(f"non-manifold edge {tuple(sorted(key))}")
            directed[key] = (int(u), int(v))
    return {directed[k]: None for k, n in count.items() if n == 1}


def _chain_loops(edges) -> list[list[int]]:
    """Chain directed edges into simple closed vertex cycles."""
    succ: dict[int, list[int]] = {}
    for a, b in edges:
        succ.setdefault(a, []).append(b)
    for a, targets in succ.items():
        if len(targets) > 1:
            raise RemeshNeededError(
                f"boundary is not simple at vertex {a}; refine the mesh"
            )
    loops = []
    remaining = {a: bs[0] for a, bs in succ.items()}
    while remaining:
        start = min(remaining)
        loop = [start]
        cur = remaining.pop(start)
        while cur != start:
            loop.append(cur)
            if cur not in remaining:
                raise TopologyError("boundary edge chain does not close")
            cur = remaining.pop(cur)
        loops.append(loop)
    return loops


def _finalize(vertices, triangles, hole_loops=()) -> Mesh:
    """Normalize orientation, recover boundary loops, and validate."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = _orient_triangles(vertices, np.asarray(triangles, dtype=int))
    areas = cross2(
        vertices[triangles[:, 1]] - vertices[triangles[:, 0]],
        vertices[triangles[:, 2]] - vertices[triangles[:, 0]],
    )
    if np.any(np.abs(areas) < 1e-14):
        bad = int(np.argmin(np.abs(areas)))
        raise TopologyError(f"degenerate triangle {bad}")
    loops = _chain_loops(_boundary_edges(triangles))
    # with domain-on-left directed edges, outer loop is already ccw and
    # inner loops cw; keep them as chained.
    loops.sort(key=lambda lp: -abs(_loop_area(vertices, lp)))
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        boundary_loops=tuple(tuple(lp) for lp in loops),
        hole_loops=tuple(hole_loops),
    )


# ---------------------------------------------------------------------------
# MSH 2.2 ASCII reader
# ---------------------------------------------------------------------------

_MSH_LINE = 1    # 2-node line element
_MSH_TRI = 2     # 3-node triangle element


def parse_msh(text: str) -> Mesh:
    """Parse a GMSH 2.2 ASCII file.

    Only 2-node line and 3-node triangle elements are retained; lines are
    ignored for connectivity (the boundary is recovered from triangles).
    Raises :class:`MeshParseError` with the offending line number on
    malformed input and :class:`TopologyError` on non-manifold meshes.
    """
    lines = text.splitlines()
    idx = 0

    def next_line():
        nonlocal idx
        while idx < len(lines):
            raw = lines[idx]
            idx += 1
            if raw.strip():
                return raw.strip(), idx
        return None, idx

    nodes: dict[int, tuple[float, float]] = {}
    tris: list[tuple[int, int, int]] = []
    seen_nodes = seen_elements = False

    while True:
        line, ln = next_line()
        if line is None:
            break
        if line == "$MeshFormat":
            header, ln = next_line()
            if header is None:
                raise MeshParseError("unexpected end of file in $MeshFormat", ln)
            version = header.split()[0]
            if not version.startswith("2."):
                raise MeshParseError(f"unsupported MSH version {version}", ln)
            end, ln = next_line()
            if end != "$EndMeshFormat":
                raise MeshParseError("missing $EndMeshFormat", ln)
        elif line == "$Nodes":
            seen_nodes = True
            count_line, ln = next_line()
            try:
                count = int(count_line)
            except (TypeError, ValueError):
                raise MeshParseError("expected node count", ln) from None
            for _ in range(count):
                row, ln = next_line()
                if row is None:
                    raise MeshParseError("unexpected end of file in $Nodes", ln)
                parts = row.split()
                if len(parts) < 3:
                    raise MeshParseError(f"malformed node line {row!r}", ln)
                try:
                    tag = int(parts[0])
                    x, y = float(parts[1]), float(parts[2])
                except ValueError:
                    raise MeshParseError(f"malformed node line {row!r}", ln) from None
                nodes[tag] = (x, y)
            end, ln = next_line()
            if end != "$EndNodes":
                raise MeshParseError("missing $EndNodes", ln)
        elif line == "$Elements":
            seen_elements = True
            count_line, ln = next_line()
            try:
                count = int(count_line)
            except (TypeError, ValueError):
                raise MeshParseError("expected element count", ln) from None
            for _ in range(count):
                row, ln = next_line()
                if row is None:
                    raise MeshParseError("unexpected end of file in $Elements", ln)
                parts = row.split()
                if len(parts) < 3:
                    raise MeshParseError(f"malformed element line {row!r}", ln)
                try:
                    etype = int(parts[1])
                    ntags = int(parts[2])
                    conn = [int(p) for p in parts[3 + ntags:]]
                except ValueError:
                    raise MeshParseError(f"malformed element line {row!r}", ln) from None
                if etype == _MSH_TRI:
                    if len(conn) != 3:
                        raise MeshParseError("triangle element needs 3 nodes", ln)
                    tris.append(tuple(conn))
                elif etype == _MSH_LINE:
                    continue
                else:
                    continue
            end, ln = next_line()
            if end != "$EndElements":
                raise MeshParseError("missing $EndElements", ln)

    if not seen_nodes:
        raise MeshParseError("no $Nodes section")
    if not seen_elements:
        raise MeshParseError("no $Elements section")
    if not tris:
        raise MeshParseError("no triangle elements found")

    tags = sorted(nodes)
    remap = {tag: i for i, tag in enumerate(tags)}
    vertices = np.array([nodes[t] for t in tags], dtype=float)
    triangles = np.array([[remap[a] for a in tri] for tri in tris], dtype=int)
    used = np.zeros(len(vertices), dtype=bool)
    used[triangles.ravel()] = True
    if not used.all():
        keep = np.flatnonzero(used)
        new_index = -np.ones(len(vertices), dtype=int)
        new_index[keep] = np.arange(len(keep))
        vertices = vertices[keep]
        triangles = new_index[triangles]
    return _finalize(vertices, triangles)


# ---------------------------------------------------------------------------
# Preset domains
# ---------------------------------------------------------------------------

def _disk_points(r: float, h: float) -> np.ndarray:
    n = max(2, round(r / h))
    pts = [(0.0, 0.0)]
    for j in range(1, n + 1):
        rj = r * j / n
        m = 6 * j
        theta = 2 * np.pi * np.arange(m) / m
        pts.extend(zip(rj * np.cos(theta), rj * np.sin(theta)))
    return np.array(pts)


def _mesh_disk(r: float, h: float) -> Mesh:
    if r <= 0 or h <= 0:
        raise GeometryError("disk radius and edge length must be positive")
    pts = _disk_points(r, h)
    tri = Delaunay(pts).simplices
    # delaunay of a convex point set covers the hull; drop slivers only
    p = pts[tri]
    areas = np.abs(cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]))
    tri = tri[areas > 1e-12 * r * r]
    return _finalize(pts, tri)


def _mesh_ellipse(a: float, b: float, h: float) -> Mesh:
    if a <= 0 or b <= 0 or h <= 0:
        raise GeometryError("ellipse axes and edge length must be positive")
    scale = max(a, b)
    unit = _mesh_disk(1.0, h / scale)
    pts = unit.vertices * np.array([a, b])
    return _finalize(pts, unit.triangles)


def _mesh_annulus(r1: float, r2: float, h: float) -> Mesh:
    if not 0 < r1 < r2:
        raise GeometryError("annulus needs 0 < r1 < r2")
    if h <= 0:
        raise GeometryError("edge length must be positive")
    n_r = max(1, round((r2 - r1) / h))
    m = max(8, round(2 * np.pi * 0.5 * (r1 + r2) / h))
    radii = np.linspace(r1, r2, n_r + 1)
    theta = 2 * np.pi * np.arange(m) / m
    pts = np.concatenate(
        [np.column_stack((rj * np.cos(theta), rj * np.sin(theta))) for rj in radii]
    )
    tris = []
    for i in range(n_r):
        base0, base1 = i * m, (i + 1) * m
        for j in range(m):
            jn = (j + 1) % m
            tris.append((base0 + j, base1 + j, base1 + jn))
            tris.append((base0 + j, base1 + jn, base0 + jn))
    return _finalize(pts, np.array(tris))


def _polygon_is_simple(points: np.ndarray) -> bool:
    import shapely

    return bool(shapely.Polygon(points).is_valid)


def _mesh_polygon(points: Sequence[Sequence[float]], h: float) -> Mesh:
    import shapely

    points = np.asarray(points, dtype=float)
    if len(points) < 3:
        raise GeometryError("polygon needs at least 3 points")
    if h <= 0:
        raise GeometryError("edge length must be positive")
    poly = shapely.Polygon(points)
    if not poly.is_valid or poly.area <= 0:
        raise GeometryError("polygon must be simple with positive area")
    if _loop_area(points, range(len(points))) < 0:
        points = points[::-1]
        poly = shapely.Polygon(points)

    boundary = []
    n = len(points)
    for i in range(n):
        a, b = points[i], points[(i + 1) % n]
        length = float(np.hypot(*(b - a)))
        segs = max(1, round(length / h))
        for k in range(segs):
            boundary.append(a + (b - a) * (k / segs))
    boundary = np.array(boundary)

    # interior grid, kept clear of the boundary so delaunay preserves the
    # boundary polyline (gabriel condition: margin > half spacing)
    minx, miny, maxx, maxy = poly.bounds
    xs = np.arange(minx + h / 2, maxx, h)
    ys = np.arange(miny + h / 2, maxy, h)
    gx, gy = np.meshgrid(xs, ys)
    grid = np.column_stack((gx.ravel(), gy.ravel()))
    if len(grid):
        inside = shapely.contains_xy(poly, grid[:, 0], grid[:, 1])
        grid = grid[inside]
    if len(grid):
        ring = poly.exterior
        dist = shapely.distance(shapely.points(grid), ring)
        grid = grid[dist > 0.6 * h]

    pts = np.concatenate([boundary, grid]) if len(grid) else boundary
    tri = Delaunay(pts).simplices
    cent = pts[tri].mean(axis=1)
    keep = shapely.contains_xy(poly, cent[:, 0], cent[:, 1])
    p = pts[tri]
    areas = np.abs(cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]))
    keep &= areas > 1e-12 * poly.area
    return _finalize(pts, tri[keep])


_SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]


def preset_domain(kind: str, *, target_edge_length: float, **params) -> Mesh:
    """Synthesize a preset mesh.

    ``kind`` is one of ``disk`` (r), ``annulus`` (r1, r2), ``ellipse``
    (a, b), ``polygon`` (points, or ``"square"`` for the unit square).
    Boundary vertices lie on the requested analytic curve.
    """
    h = target_edge_length
    if kind == "disk":
        return _mesh_disk(params["r"], h)
    if kind == "annulus":
        return _mesh_annulus(params["r1"], params["r2"], h)
    if kind == "ellipse":
        return _mesh_ellipse(params["a"], params["b"], h)
    if kind == "polygon":
        pts = params["points"]
        if isinstance(pts, str):
            if pts != "square":
                raise GeometryError(f"unknown named polygon {pts!r}")
            pts = _SQUARE
        return _mesh_polygon(pts, h)
    raise GeometryError(f"unknown preset kind {kind!r}")


# ---------------------------------------------------------------------------
# Hole drilling
# ---------------------------------------------------------------------------

def _triangle_adjacency(triangles: np.ndarray):
    edge_to_tris: dict[frozenset, list[int]] = {}
    for t, (a, b, c) in enumerate(triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            edge_to_tris.setdefault(frozenset((int(u), int(v))), []).append(t)
    return edge_to_tris


def _connected(triangles: np.ndarray) -> bool:
    if len(triangles) == 0:
        return False
    edge_to_tris = _triangle_adjacency(triangles)
    adj: dict[int, set[int]] = {t: set() for t in range(len(triangles))}
    for tris in edge_to_tris.values():
        if len(tris) == 2:
            a, b = tris
            adj[a].add(b)
            adj[b].add(a)
    seen = {0}
    stack = [0]
    while stack:
        for nb in adj[stack.pop()]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(triangles)


def removed_triangles(mesh: Mesh, hole: HoleSpec) -> np.ndarray:
    """Indices of triangles a hole removes (centroid rule / single triangle)."""
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    c = np.asarray(hole.center, dtype=float)
    if hole.single_triangle:
        d = np.linalg.norm(cent - c, axis=1)
        p = mesh.vertices[mesh.triangles]
        v0, v1, v2 = p[:, 0], p[:, 1], p[:, 2]
        d00 = cross2(v1 - v0, c - v0)
        d11 = cross2(v2 - v1, c - v1)
        d22 = cross2(v0 - v2, c - v2)
        inside = (d00 >= 0) & (d11 >= 0) & (d22 >= 0)
        if inside.any():
            return np.array([int(np.flatnonzero(inside)[0])])
        return np.array([int(np.argmin(d))])
    return np.flatnonzero(np.linalg.norm(cent - c, axis=1) < hole.radius)


def drill_holes(mesh: Mesh, holes: Sequence[HoleSpec]) -> Mesh:
    """Remove the triangles covered by each hole and record the new loops.

    Deterministic centroid-in-disk removal (no remeshing).  Each hole must
    stay strictly inside the domain, produce exactly one new simple
    boundary cycle, and leave the domain connected.
    """
    if not holes:
        return mesh
    removed_sets = []
    all_removed: set[int] = set()
    for hole in holes:
        rm = set(map(int, removed_triangles(mesh, hole)))
        if not rm:
            raise PlacementError(f"hole at {hole.center} removes no triangle")
        if rm & all_removed:
            raise PlacementError(f"hole at {hole.center} overlaps another hole")
        removed_sets.append((hole, rm))
        all_removed |= rm

    # non-adjacency across holes: removed sets must not share vertices
    verts_by_hole = [
        set(mesh.triangles[sorted(rm)].ravel().tolist()) for _, rm in removed_sets
    ]
    for i in range(len(verts_by_hole)):
        for j in range(i + 1, len(verts_by_hole)):
            if verts_by_hole[i] & verts_by_hole[j]:
                raise PlacementError(
                    f"holes {holes[i].center} and {holes[j].center} touch"
                )

    boundary_verts = set()
    for loop in mesh.boundary_loops:
        boundary_verts.update(loop)
    for (hole, rm), verts in zip(removed_sets, verts_by_hole):
        if verts & boundary_verts:
            raise PlacementError(f"hole at {hole.center} overlaps the boundary")

    keep = np.ones(mesh.num_triangles, dtype=bool)
    keep[sorted(all_removed)] = False
    new_tris = mesh.triangles[keep]
    if len(new_tris) == 0 or not _connected(new_tris):
        raise TopologyError("hole removal disconnects the domain")

    # recover loops on the reduced triangle set, then identify each new
    # loop with the hole whose removed vertices it borders
    try:
        loops = _chain_loops(_boundary_edges(new_tris))
    except RemeshNeededError:
        raise RemeshNeededError(
            "hole removal yields a pinched boundary; refine the mesh"
        ) from None
    old_loops = {tuple(sorted(lp)) for lp in
                 (list(loop) for loop in mesh.boundary_loops)}
    new_loops = [lp for lp in loops if tuple(sorted(lp)) not in old_loops]
    if len(new_loops) != len(holes):
        raise RemeshNeededError(
            f"expected {len(holes)} new loops, found {len(new_loops)}; "
            "refine the mesh or adjust hole radii"
        )

    hole_loops = list(mesh.hole_loops)
    for hole, verts in zip([h for h, _ in removed_sets], verts_by_hole):
        match = [lp for lp in new_loops if set(lp) & verts]
        if len(match) != 1:
            raise RemeshNeededError(f"ambiguous loop for hole at {hole.center}")
        cycle = list(match[0])
        if _loop_area(mesh.vertices, cycle) < 0:
            cycle = cycle[::-1]   # ccw around the hole
        hole_loops.append((tuple(cycle), hole))

    # compact away vertices stranded inside the removed disks
    used = np.unique(new_tris)
    new_index = -np.ones(mesh.num_vertices, dtype=int)
    new_index[used] = np.arange(len(used))
    new_tris = new_index[new_tris]
    hole_loops = [
        (tuple(int(new_index[v]) for v in loop), spec) for loop, spec in hole_loops
    ]
    out = _finalize(mesh.vertices[used], new_tris, hole_loops=tuple(hole_loops))
    expected_chi = mesh.euler_characteristic - len(holes)
    if out.euler_characteristic != expected_chi:
        raise TopologyError(
            f"drilling changed chi to {out.euler_characteristic}, "
            f"expected {expected_chi}"
        )
    return out


# ---------------------------------------------------------------------------
# Boundary analysis
# ---------------------------------------------------------------------------

def loop_turning_angles(vertices: np.ndarray, loop: Sequence[int]) -> np.ndarray:
    """Signed tangent turning at each loop vertex, traversal order."""
    pts = vertices[list(loop)]
    d_in = pts - np.roll(pts, 1, axis=0)
    d_out = np.roll(pts, -1, axis=0) - pts
    return np.arctan2(
        cross2(d_in, d_out), np.einsum("ij,ij->i", d_in, d_out)
    )


def boundary_analysis(
    mesh: Mesh, corner_threshold: float = DEFAULT_CORNER_THRESHOLD
):
    """Classify boundary vertices into corners and smooth turning.

    Returns ``(corners, smooth_turning, chi)``: corners are vertices with
    |tangent jump| above the threshold; ``smooth_turning`` sums the jumps
    of the remaining boundary vertices over every loop (inner loops count
    negatively, matching their stored orientation).
    """
    corners: list[CornerInfo] = []
    smooth = 0.0
    for li, loop in enumerate(mesh.boundary_loops):
        deltas = loop_turning_angles(mesh.vertices, loop)
        for v, d in zip(loop, deltas):
            if abs(d) > corner_threshold:
                corners.append(
                    CornerInfo(
                        vertex=int(v),
                        interior_angle=float(math.pi - d),
                        tangent_jump=float(d),
                        loop=li,
                    )
                )
            else:
                smooth += float(d)
    return corners, smooth, mesh.euler_characteristic
