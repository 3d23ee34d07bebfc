import math

import numpy as np
import pytest

import crossfield as cf
from crossfield.conjugate import iso_segments, solve_conjugate
from crossfield.energy import boundary_turning_loads
from crossfield.errors import IncompatibilityError
from crossfield.interpolate import TriangleLocator, interpolate_p1


class TestSolveConjugate:
    def test_disk_center_matches_log(self, disk_h002):
        sol = solve_conjugate(disk_h002, [((0.0, 0.0), 4)])
        r = np.hypot(disk_h002.vertices[:, 0], disk_h002.vertices[:, 1])
        outside = r > 0.1
        shift = np.mean(sol.values[outside] - np.log(r[outside]))
        err = np.abs(sol.values[outside] - np.log(r[outside]) - shift)
        assert err.max() <= 0.05

    def test_four_symmetric_sources_rotation_invariant(self, disk_h003):
        pts = [(0.5, 0.0), (0.0, 0.5), (-0.5, 0.0), (0.0, -0.5)]
        sol = solve_conjugate(disk_h003, [(p, 1) for p in pts])
        locator = TriangleLocator(disk_h003)
        probes = np.array([[0.25, 0.1], [0.7, -0.2], [-0.3, 0.3]])
        rotated = np.column_stack((-probes[:, 1], probes[:, 0]))
        a = interpolate_p1(locator, sol.values, probes)
        b = interpolate_p1(locator, sol.values, rotated)
        assert np.allclose(a, b, atol=5e-3)

    def test_square_boundary_corner_sources(self, square_mesh):
        corners, _, chi = cf.boundary_analysis(square_mesh)
        sources = [(tuple(square_mesh.vertices[c.vertex]), 1) for c in corners]
        assert sum(k for _, k in sources) == 4 * chi
        sol = solve_conjugate(square_mesh, sources)
        assert np.isfinite(sol.values).all()

    def test_incompatible_sources_rejected(self, disk_coarse):
        with pytest.raises(IncompatibilityError) as err:
            solve_conjugate(disk_coarse, [((0.0, 0.0), 3)])
        assert "4*chi" in str(err.value)

    def test_annulus_compatibility(self):
        mesh = cf.preset_domain("annulus", target_edge_length=0.08, r1=0.4, r2=1.0)
        # chi = 0: a balanced source pair is fine, an unbalanced one is not
        sol = solve_conjugate(mesh, [((0.7, 0.0), 4), ((-0.7, 0.0), -4)])
        assert np.isfinite(sol.values).all()
        with pytest.raises(IncompatibilityError):
            solve_conjugate(mesh, [((0.7, 0.0), 4)])

    def test_mean_zero(self, disk_coarse):
        sol = solve_conjugate(disk_coarse, [((0.0, 0.0), 4)])
        from crossfield.assembly import build_space

        space = build_space(disk_coarse, "P1")
        w = space.lumped_area
        assert abs(np.dot(w, sol.values) / w.sum()) < 1e-10


class TestDiscreteCompat:
    def test_gauss_bonnet_turning(self, disk_coarse, square_mesh):
        for mesh in (disk_coarse, square_mesh):
            total = sum(boundary_turning_loads(mesh).values())
            assert total == pytest.approx(
                2 * math.pi * mesh.euler_characteristic, abs=1e-9
            )

    def test_superposition(self, disk_h003):
        from crossfield.energy import SingularityConfig, vortex_potential

        s1 = solve_conjugate(disk_h003, [((0.3, 0.0), 4)])
        s2 = solve_conjugate(disk_h003, [((-0.3, 0.0), 4)])
        # moving the source is linear: the difference of the two solves is
        # the zero-flux dipole potential (all three are mean-zero)
        dipole = vortex_potential(
            disk_h003,
            SingularityConfig(points=((0.3, 0.0), (-0.3, 0.0)), degrees=(1, -1)),
            {},
        )
        assert np.allclose(s1.values - s2.values, dipole.values, atol=1e-9)

    def test_boundary_tangential_gradient_small(self, disk_h002):
        # iso-lines against the boundary: the tangential derivative along
        # boundary edges stays far below the interior gradient magnitude
        sol = solve_conjugate(disk_h002, [((0.0, 0.0), 4)])
        loop = disk_h002.boundary_loops[0]
        vals = sol.values
        tangential = []
        for j, v in enumerate(loop):
            w = loop[(j + 1) % len(loop)]
            length = np.linalg.norm(
                disk_h002.vertices[w] - disk_h002.vertices[v]
            )
            tangential.append(abs(vals[w] - vals[v]) / length)
        # |grad H| = 4/r = 4 on the unit circle for the analytic solution
        assert max(tangential) <= 0.1 * 4.0


class TestIsoSegments:
    def test_marching_produces_closed_level_structure(self, disk_coarse):
        sol = solve_conjugate(disk_coarse, [((0.0, 0.0), 4)])
        levels = [float(np.median(sol.values))]
        segs = iso_segments(disk_coarse, sol.values, levels)
        assert len(segs) > 10
        # every segment endpoint interpolates the level on an edge
        for a, b in segs[:20]:
            assert np.isfinite(a).all() and np.isfinite(b).all()
