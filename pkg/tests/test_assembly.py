import math

import numpy as np
import pytest

import crossfield as cf
from crossfield.assembly import assemble, build_space, scalar_stiffness
from crossfield.degree import winding_degree
from crossfield.errors import AssemblyError
from crossfield.mesh import Mesh, _finalize
from crossfield.solver import SolveOptions, dirichlet_energy, solve


def grid_mesh(n):
    """Structured (n+1)^2 unit-square grid, 2*n^2 triangles."""
    xs = np.linspace(0, 1, n + 1)
    pts = np.array([(x, y) for y in xs for x in xs])
    tris = []
    for j in range(n):
        for i in range(n):
            a = j * (n + 1) + i
            b = a + 1
            c = a + n + 1
            d = c + 1
            tris.append((a, b, d))
            tris.append((a, d, c))
    return _finalize(pts, np.array(tris))


class TestBuildSpace:
    def test_single_triangle_counts(self):
        mesh = _finalize(np.array([[0, 0], [1, 0], [0, 1.0]]), np.array([[0, 1, 2]]))
        assert build_space(mesh, "CR").count == 3
        assert build_space(mesh, "P1").count == 3

    def test_grid_cr_dof_count(self):
        mesh = grid_mesh(2)
        assert mesh.num_triangles == 8
        assert build_space(mesh, "CR").count == 16
        assert build_space(mesh, "P1").count == 9

    def test_midpoint_sites(self):
        mesh = _finalize(np.array([[0, 0], [1, 0], [0, 1.0]]), np.array([[0, 1, 2]]))
        space = build_space(mesh, "CR")
        expected = {(0.5, 0.0), (0.5, 0.5), (0.0, 0.5)}
        got = {tuple(np.round(s, 12)) for s in space.sites}
        assert got == expected

    def test_hole_cycles_exposed(self, disk_coarse):
        drilled = cf.drill_holes(
            disk_coarse, [cf.HoleSpec(center=(0, 0), radius=0.15, degree=1)]
        )
        for kind in ("P1", "CR"):
            space = build_space(drilled, kind)
            assert len(space.hole_cycles) == 1
            hi, cyc = space.hole_cycles[0]
            assert len(cyc) >= 3
            pts = space.sites[list(cyc)]
            x, y = pts[:, 0], pts[:, 1]
            area = 0.5 * np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y)
            assert area > 0  # ccw around the hole

    def test_unknown_kind(self, disk_coarse):
        with pytest.raises(AssemblyError):
            build_space(disk_coarse, "P2")


class TestStiffness:
    @pytest.mark.parametrize("kind", ["P1", "CR"])
    def test_affine_in_kernel_interiorly(self, kind):
        mesh = grid_mesh(4)
        space = build_space(mesh, kind)
        K = scalar_stiffness(space)
        vals = 2.0 * space.sites[:, 0] - 0.7 * space.sites[:, 1] + 0.3
        res = K @ vals
        interior = space.site_loop == -1
        assert np.abs(res[interior]).max() < 1e-12

    @pytest.mark.parametrize("kind", ["P1", "CR"])
    def test_row_sums_zero(self, kind):
        mesh = grid_mesh(3)
        K = scalar_stiffness(build_space(mesh, kind))
        assert np.abs(K @ np.ones(K.shape[0])).max() < 1e-12

    def test_symmetry(self, disk_coarse):
        K = scalar_stiffness(build_space(disk_coarse, "CR"))
        assert abs(K - K.T).max() < 1e-12

    def test_degenerate_triangle_rejected(self):
        pts = np.array([[0, 0], [1, 0], [2, 0], [0, 1.0]])
        with pytest.raises(Exception):
            _finalize(pts, np.array([[0, 1, 2], [0, 1, 3]]))


class TestBoundaryData:
    def test_square_tangent_power_is_constant(self):
        mesh = grid_mesh(4)
        system = assemble(build_space(mesh, "CR"))
        g = system.dirichlet_values[system.dirichlet_mask].reshape(-1, 2)
        assert np.allclose(g, [1.0, 0.0], atol=1e-12)

    def test_square_constant_solution(self):
        mesh = grid_mesh(4)
        system = assemble(build_space(mesh, "CR"))
        field, report = solve(system)
        assert report.converged
        assert report.iterations == 1
        assert np.allclose(field.values, [1.0, 0.0], atol=1e-10)

    @pytest.mark.parametrize("kind", ["P1", "CR"])
    def test_disk_boundary_unit_norm_and_winding(self, disk_coarse, kind):
        space = build_space(disk_coarse, kind)
        system = assemble(space)
        mask = system.dirichlet_mask.reshape(-1, 2)[:, 0]
        g = system.dirichlet_values.reshape(-1, 2)[mask]
        assert np.allclose(np.hypot(g[:, 0], g[:, 1]), 1.0, atol=1e-12)
        # order the boundary sites along the outer loop and measure winding
        loop = disk_coarse.boundary_loops[0]
        if kind == "P1":
            cycle_vals = system.dirichlet_values.reshape(-1, 2)[list(loop)]
        else:
            edge_sites = {tuple(np.round(s, 9)): i
                          for i, s in enumerate(space.sites)}
            ids = []
            for j, v in enumerate(loop):
                w = loop[(j + 1) % len(loop)]
                mid = 0.5 * (disk_coarse.vertices[v] + disk_coarse.vertices[w])
                ids.append(edge_sites[tuple(np.round(mid, 9))])
            cycle_vals = system.dirichlet_values.reshape(-1, 2)[ids]
        assert round(winding_degree(cycle_vals)) == 4

    def test_cr_p1_energy_agreement(self):
        # unconstrained solves agree within O(h) in energy
        h = 0.08
        mesh = cf.preset_domain("disk", target_edge_length=h, r=1.0)
        energies = {}
        for kind in ("P1", "CR"):
            system = assemble(build_space(mesh, kind))
            field, report = solve(system)
            energies[kind] = report.dirichlet_energy
        rel = abs(energies["CR"] - energies["P1"]) / max(energies.values())
        assert rel <= 2 * h
