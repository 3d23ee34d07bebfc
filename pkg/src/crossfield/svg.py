"""Deterministic SVG rendering: cross glyphs, norm heatmap, iso-lines."""

from __future__ import annotations

import numpy as np

from .mesh import Mesh


def _fmt(x: float) -> str:
    return f"{x:.5g}"


def _header(mesh: Mesh, size: int = 800):
    lo = mesh.vertices.min(axis=0)
    hi = mesh.vertices.max(axis=0)
    span = max(hi - lo) * 1.05 + 1e-12
    cx, cy = (lo + hi) / 2
    x0, y0 = cx - span / 2, cy - span / 2
    head = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
        f'viewBox="{_fmt(x0)} {_fmt(y0)} {_fmt(span)} {_fmt(span)}">'
        f'<g transform="translate(0 {_fmt(2 * cy)}) scale(1 -1)">'
    )
    return head, span


def _mesh_edges(mesh: Mesh, width: float) -> str:
    seen = set()
    parts = []
    for a, b, c in mesh.triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (min(u, v), max(u, v))
            if key in seen:
                continue
            seen.add(key)
            p, q = mesh.vertices[u], mesh.vertices[v]
            parts.append(
                f'M{_fmt(p[0])} {_fmt(p[1])}L{_fmt(q[0])} {_fmt(q[1])}'
            )
    return (
        f'<path d="{"".join(parts)}" stroke="#ccc" fill="none" '
        f'stroke-width="{_fmt(width)}"/>'
    )


def _heat_color(t: float) -> str:
    # dark blue -> teal -> yellow, clamped
    t = min(1.0, max(0.0, t))
    stops = [(68, 1, 84), (33, 145, 140), (253, 231, 37)]
    if t < 0.5:
        a, b, s = stops[0], stops[1], t * 2
    else:
        a, b, s = stops[1], stops[2], (t - 0.5) * 2
    rgb = [round(a[i] + (b[i] - a[i]) * s) for i in range(3)]
    return f"rgb({rgb[0]},{rgb[1]},{rgb[2]})"


def render_field_svg(
    mesh: Mesh,
    sites: np.ndarray,
    angles: np.ndarray,
    norms: np.ndarray,
    holes=(),
    heatmap: bool = False,
    site_norm_raw: np.ndarray = None,
) -> str:
    """Cross glyphs (4 strokes per site, length scaling with the norm)."""
    head, span = _header(mesh)
    glyph = span / max(20.0, np.sqrt(len(sites))) * 0.45
    parts = [head]
    if heatmap and site_norm_raw is not None:
        vmax = float(site_norm_raw.max()) or 1.0
        # per-triangle fill keyed on the first local site
        for t, dofs in enumerate(_triangle_sites(mesh, sites)):
            tri = mesh.vertices[mesh.triangles[t]]
            val = float(np.mean(site_norm_raw[dofs])) / vmax
            pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in tri)
            parts.append(f'<polygon points="{pts}" fill="{_heat_color(val)}"/>')
    parts.append(_mesh_edges(mesh, span / 2000))
    nmax = float(norms.max()) if len(norms) and norms.max() > 0 else 1.0
    for (x, y), ang, nr in zip(sites, angles, norms):
        L = glyph * (nr / nmax)
        strokes = []
        for k in range(4):
            a = ang + k * np.pi / 2
            strokes.append(
                f'M{_fmt(x)} {_fmt(y)}L{_fmt(x + L * np.cos(a))} '
                f'{_fmt(y + L * np.sin(a))}'
            )
        parts.append(
            f'<path d="{"".join(strokes)}" stroke="#15508a" fill="none" '
            f'stroke-width="{_fmt(span / 1500)}"/>'
        )
    for spec in holes:
        cx, cy = spec.center
        r = spec.radius if spec.radius > 0 else span / 100
        parts.append(
            f'<circle cx="{_fmt(cx)}" cy="{_fmt(cy)}" r="{_fmt(r)}" '
            f'fill="none" stroke="#c0392b" stroke-width="{_fmt(span / 800)}"/>'
        )
    parts.append("</g></svg>")
    return "".join(parts)


def _triangle_sites(mesh: Mesh, sites: np.ndarray):
    # sites correspond either to vertices (P1) or edge midpoints (CR);
    # match by count
    if len(sites) == mesh.num_vertices:
        return mesh.triangles
    from .assembly import _edge_index

    _, _, tri_edges = _edge_index(mesh)
    return tri_edges


def render_scalar_svg(mesh: Mesh, values: np.ndarray, n_levels: int = 24) -> str:
    """Heatmap of a vertex field plus marching iso-lines."""
    from .conjugate import iso_segments

    head, span = _header(mesh)
    parts = [head]
    vmin, vmax = float(values.min()), float(values.max())
    rng = (vmax - vmin) or 1.0
    tri_vals = values[mesh.triangles].mean(axis=1)
    for t, tv in enumerate(tri_vals):
        tri = mesh.vertices[mesh.triangles[t]]
        pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in tri)
        parts.append(
            f'<polygon points="{pts}" fill="{_heat_color((tv - vmin) / rng)}"/>'
        )
    levels = [vmin + rng * (i + 0.5) / n_levels for i in range(n_levels)]
    segs = iso_segments(mesh, values, levels)
    path = "".join(
        f'M{_fmt(a[0])} {_fmt(a[1])}L{_fmt(b[0])} {_fmt(b[1])}' for a, b in segs
    )
    parts.append(
        f'<path d="{path}" stroke="#222" fill="none" '
        f'stroke-width="{_fmt(span / 1200)}"/>'
    )
    parts.append("</g></svg>")
    return "".join(parts)
