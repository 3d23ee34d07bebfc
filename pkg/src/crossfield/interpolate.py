"""Point location and linear interpolation on triangle meshes."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import EvaluationError
from .mesh import Mesh


class TriangleLocator:
    """Locates query points via a centroid KD-tree with barycentric checks."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        p = mesh.vertices[mesh.triangles]
        self._p = p
        self._centroids = p.mean(axis=1)
        self._tree = cKDTree(self._centroids)
        # affine maps for barycentric coordinates
        self._origin = p[:, 0]
        cols = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
        self._inv = np.linalg.inv(cols)

    def barycentric(self, tri: int, point) -> np.ndarray:
        st = self._inv[tri] @ (np.asarray(point) - self._origin[tri])
        return np.array([1.0 - st[0] - st[1], st[0], st[1]])

    def locate(self, point, k: int = 16, tol: float = 1e-9):
        """Containing triangle and barycentric coordinates, or raise."""
        point = np.asarray(point, dtype=float)
        k = min(k, len(self._centroids))
        _, idx = self._tree.query(point, k=k)
        idx = np.atleast_1d(idx)
        best = None
        for t in idx:
            lam = self.barycentric(int(t), point)
            worst = float(lam.min())
            if worst >= -tol:
                return int(t), lam
            if best is None or worst > best[0]:
                best = (worst, int(t), lam)
        if best is not None and best[0] >= -1e-6:
            return best[1], best[2]
        raise EvaluationError(f"point {point.tolist()} is outside the mesh")


def interpolate_p1(locator: TriangleLocator, nodal: np.ndarray, points) -> np.ndarray:
    """Evaluate a vertex-based field at arbitrary interior points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    nodal = np.asarray(nodal)
    out = []
    for pt in points:
        t, lam = locator.locate(pt)
        out.append(lam @ nodal[locator.mesh.triangles[t]])
    return np.array(out)


def interpolate_space(locator: TriangleLocator, space, site_values, points):
    """Evaluate a P1 or midpoint-element field at interior points."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    site_values = np.asarray(site_values)
    out = []
    for pt in points:
        t, lam = locator.locate(pt)
        basis = 1.0 - 2.0 * lam if space.kind == "CR" else lam
        out.append(basis @ site_values[space.element_dofs[t]])
    return np.array(out)
