import math

import numpy as np
import pytest

import crossfield as cf
from crossfield.assembly import assemble, build_space
from crossfield.degree import hole_constraint_matrix
from crossfield.errors import InfeasibleTopologyError
from crossfield.mesh import _finalize
from crossfield.solver import (
    FieldU,
    SolveOptions,
    detect_singular_triangles,
    dirichlet_energy,
    extract_crosses,
    seed_vortices,
    solve,
    _penalty_terms,
)


class TestSolve:
    def test_annulus_no_holes_single_iteration(self):
        mesh = cf.preset_domain("annulus", target_edge_length=0.08, r1=0.4, r2=1.0)
        system = assemble(build_space(mesh, "CR"))
        field, report = solve(system)
        assert report.converged
        assert report.iterations == 1
        assert np.isfinite(field.values).all()

    def test_four_holes_converges(self, solved_four_holes):
        report = solved_four_holes.report_
        assert report.converged
        assert report.iterations <= 30
        for r in report.constraint_residuals.values():
            assert abs(r) <= 1e-8 * 4 * math.pi

    def test_boundary_values_pinned(self, solved_four_holes):
        system = solved_four_holes.system_
        x = solved_four_holes.field_.flat
        mask = system.dirichlet_mask
        assert np.array_equal(x[mask], system.dirichlet_values[mask])

    def test_stationarity_at_convergence(self, solved_four_holes):
        report = solved_four_holes.report_
        assert report.gradient_norm <= 1e-6

    def test_infeasible_refused_and_override(self, disk_coarse):
        bad = [cf.HoleSpec(center=(0, 0), radius=0.1, degree=3)]
        with pytest.raises(InfeasibleTopologyError):
            cf.CrossFieldSolver(holes=bad).fit(disk_coarse)
        est = cf.CrossFieldSolver(holes=bad, override_topology=True, max_iter=40)
        est.fit(disk_coarse)  # runs; convergence not promised
        assert est.ledger_.verdict == "fail"

    def test_nonconvergence_still_returns_field(self, disk_coarse, four_holes):
        est = cf.CrossFieldSolver(holes=four_holes, max_iter=2)
        est.fit(disk_coarse)
        assert not est.report_.converged
        assert "max iterations" in est.report_.message
        assert np.isfinite(est.field_.values).all()

    def test_gradient_check_finite_differences(self, disk_coarse):
        drilled = cf.drill_holes(
            disk_coarse, [cf.HoleSpec(center=(0, 0), radius=0.15, degree=4)]
        )
        space = build_space(drilled, "P1")
        system = assemble(space)
        form = hole_constraint_matrix(
            space.count, space.hole_cycles[0][1], 4, 0
        )
        K, b = system.K, system.b
        free = ~system.dirichlet_mask
        rng = np.random.default_rng(7)
        x = system.dirichlet_values.copy()
        x[free] = rng.standard_normal(int(free.sum()))
        lam = 0.37
        grad = (K @ x - b) + 2 * lam * (form.matrix @ x)

        def lagrangian(xv):
            return (
                0.5 * xv @ (K @ xv) - b @ xv
                + lam * (xv @ (form.matrix @ xv) - form.target)
            )

        for _ in range(10):
            d = np.zeros_like(x)
            d[free] = rng.standard_normal(int(free.sum()))
            d /= np.linalg.norm(d)
            # central differences are exact on quadratics; the step only
            # needs to be large enough to dominate summation roundoff
            eps = 1e-4
            fd = (lagrangian(x + eps * d) - lagrangian(x - eps * d)) / (2 * eps)
            an = grad @ d
            assert fd == pytest.approx(an, rel=1e-6, abs=1e-9)

    def test_unit_norm_holes_exact(self, disk_h003, four_holes):
        est = cf.CrossFieldSolver(
            holes=four_holes, space="CR", unit_norm_holes="all"
        )
        est.fit(disk_h003)
        assert est.report_.converged
        for entry in est.degrees_.values():
            assert entry["min_norm"] == pytest.approx(1.0, abs=1e-9)
            assert entry["max_norm"] == pytest.approx(1.0, abs=1e-9)
            assert round(entry["degree"]) == 1

    def test_energy_monotone_in_radius(self):
        mesh = cf.preset_domain("disk", target_edge_length=0.04, r=1.0)
        energies = []
        for rho in (0.1, 0.2, 0.3):
            est = cf.CrossFieldSolver(
                holes=[cf.HoleSpec(center=(0, 0), radius=rho, degree=4)],
                space="P1", gl_penalty=0.01, max_iter=40,
            )
            est.fit(mesh)
            assert est.report_.converged
            energies.append(est.report_.dirichlet_energy)
        assert energies[0] > energies[1] > energies[2]

    def test_seed_vortices_changes_winding(self, disk_coarse):
        space = build_space(disk_coarse, "P1")
        x = np.tile([1.0, 0.0], space.count).astype(float)
        seeded = seed_vortices(space, x, [((0.05, 0.03), 1)])
        theta = 2 * np.pi * np.arange(48) / 48
        ring = 0.5 * np.column_stack((np.cos(theta), np.sin(theta)))
        z = ring[:, 0] + 1j * ring[:, 1]
        zc = z - complex(0.05, 0.03)
        vals = np.column_stack(((zc / abs(zc)).real, (zc / abs(zc)).imag))
        assert round(cf.winding_degree(vals)) == 1


class TestCrossExtraction:
    def test_axis_aligned(self):
        mesh = _finalize(np.array([[0, 0], [1, 0], [0, 1.0]]), np.array([[0, 1, 2]]))
        space = build_space(mesh, "P1")
        field = FieldU(values=np.array([[1.0, 0.0]] * 3), space=space)
        angles, norms, zero = extract_crosses(field)
        assert np.allclose(angles, 0.0)
        assert np.allclose(norms, 1.0)
        assert not zero.any()

    def test_fourth_roots(self):
        mesh = _finalize(np.array([[0, 0], [1, 0], [0, 1.0]]), np.array([[0, 1, 2]]))
        space = build_space(mesh, "P1")
        field = FieldU(
            values=np.array([[0.0, 1.0], [-4.0, 0.0], [0.0, 0.0]]), space=space
        )
        angles, norms, zero = extract_crosses(field)
        assert angles[0] == pytest.approx(math.pi / 8)
        assert norms[0] == pytest.approx(1.0)
        assert angles[1] == pytest.approx(math.pi / 4)
        assert norms[1] == pytest.approx(math.sqrt(2.0))
        assert zero[2] and angles[2] == 0.0

    def test_angles_reduced_mod_quarter_turn(self):
        mesh = _finalize(np.array([[0, 0], [1, 0], [0, 1.0]]), np.array([[0, 1, 2]]))
        space = build_space(mesh, "P1")
        rng = np.random.default_rng(1)
        field = FieldU(values=rng.standard_normal((3, 2)), space=space)
        angles, _, _ = extract_crosses(field)
        assert np.all(angles >= 0.0) and np.all(angles < math.pi / 2)


class TestSingularityDetection:
    def test_regular_solved_field_has_none(self, solved_four_holes):
        assert detect_singular_triangles(solved_four_holes.field_) == []

    def test_aliased_central_vortex(self, disk_coarse):
        # samples of (z/|z|)^4 on a triangle around the origin coincide with
        # samples of z/|z|; detection therefore reports quarter indices that
        # sum to the full boundary winding of 4 across the origin cluster
        space = build_space(disk_coarse, "P1")
        z = space.sites[:, 0] + 1j * space.sites[:, 1]
        z = np.where(np.abs(z) < 1e-12, 1e-9 * (1 + 1j), z)
        u = (z / np.abs(z)) ** 4
        field = FieldU(values=np.column_stack((u.real, u.imag)), space=space)
        found = detect_singular_triangles(field)
        assert found
        total = sum(q for _, q in found if q is not None)
        assert total == pytest.approx(1.0)  # cross units: u-degree 4
        cents = disk_coarse.vertices[disk_coarse.triangles].mean(axis=1)
        for t, _ in found:
            assert np.hypot(*cents[t]) < 0.2

    def test_degenerate_triangle_flagged_unknown(self, disk_coarse):
        space = build_space(disk_coarse, "P1")
        vals = np.tile([1.0, 0.0], (space.count, 1))
        vals[space.element_dofs[10][0]] = (0.0, 0.0)
        field = FieldU(values=vals, space=space)
        found = detect_singular_triangles(field)
        assert any(q is None for _, q in found)


class TestDirichletEnergy:
    def test_constant_field_zero(self, square_mesh):
        space = build_space(square_mesh, "CR")
        system = assemble(space)
        field = FieldU(values=np.tile([0.3, -1.2], (space.count, 1)), space=space)
        total, density = dirichlet_energy(field, system)
        assert total == pytest.approx(0.0, abs=1e-10)
        assert np.abs(density).max() < 1e-12

    @pytest.mark.parametrize("kind", ["P1", "CR"])
    def test_linear_field_on_unit_square(self, kind):
        from .test_assembly import grid_mesh

        mesh = grid_mesh(5)
        space = build_space(mesh, kind)
        system = assemble(space)
        field = FieldU(values=space.sites.copy(), space=space)
        total, density = dirichlet_energy(field, system)
        assert total == pytest.approx(2.0, abs=1e-10)
        assert density.sum() == pytest.approx(2.0, abs=1e-10)

    def test_annulus_interpolant_energy(self):
        mesh = cf.preset_domain("annulus", target_edge_length=0.02, r1=0.1, r2=1.0)
        space = build_space(mesh, "CR")
        system = assemble(space)
        z = space.sites[:, 0] + 1j * space.sites[:, 1]
        u = (z / np.abs(z)) ** 4
        field = FieldU(values=np.column_stack((u.real, u.imag)), space=space)
        total, _ = dirichlet_energy(field, system)
        target = 32 * math.pi * math.log(10)
        assert total == pytest.approx(target, rel=0.03)

    def test_penalty_terms_match_finite_differences(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(12)
        sites = np.array([0, 2, 4])
        w = np.array([0.3, 0.2, 0.5])
        eps = 0.05
        val, grad, hess = _penalty_terms(x, sites, w, eps)

        def f(v):
            return _penalty_terms(v, sites, w, eps)[0]

        for i in list(2 * sites) + list(2 * sites + 1):
            d = np.zeros_like(x)
            d[i] = 1e-6
            fd = (f(x + d) - f(x - d)) / 2e-6
            assert fd == pytest.approx(grad[i], rel=1e-5, abs=1e-8)
