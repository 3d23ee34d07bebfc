"""Estimator-style front ends so the solvers compose with pipelines.

``CrossFieldSolver`` follows the scikit-learn protocol: construction only
stores parameters, ``fit`` consumes a mesh and exposes trailing-underscore
attributes, ``predict`` evaluates the fitted crosses at query points, and
``get_params``/``set_params``/cloning come from ``BaseEstimator``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from sklearn.base import BaseEstimator

from .assembly import LinearSystem, assemble, build_space
from .conjugate import solve_conjugate
from .degree import ConstraintForm, hole_constraint_matrix, measured_hole_degrees
from .errors import InfeasibleTopologyError
from .interpolate import TriangleLocator, interpolate_p1, interpolate_space
from .mesh import DEFAULT_CORNER_THRESHOLD, Mesh, drill_holes
from .solver import FieldU, SolveOptions, solve, unit_norm_constraint
from .topology import ph_check
from .validation import as_hole_specs, as_points, check_mesh


@dataclass(frozen=True)
class _ReducedSpace:
    """Bookkeeping stub standing in for a DofSpace after loop reduction."""

    kind: str
    count: int
    lumped_area: np.ndarray
    mesh: object = None


def _uniform_loop_reduction(space, unit_hole_degrees: dict):
    """Substitute unit-norm hole loops by one rotation dof each.

    On a unit-norm loop the degree form pins the value sequence to the
    uniform winding cycle up to a global phase (the sine quadrature is
    strictly concave), so the loop collapses to a single 2-vector whose
    unit circle is the only remaining constraint.  This removes the
    constraint-qualification degeneracy per-site multipliers run into.
    Returns the substitution matrix ``x_full = S @ x_reduced``, the
    virtual site per hole, and the reduced lumped areas.
    """
    n = space.count
    unit_cycles = {
        hi: cyc for hi, cyc in space.hole_cycles if hi in unit_hole_degrees
    }
    in_loop = np.zeros(n, dtype=bool)
    for cyc in unit_cycles.values():
        in_loop[list(cyc)] = True
    keep = np.flatnonzero(~in_loop)
    reduced_of = -np.ones(n, dtype=int)
    reduced_of[keep] = np.arange(len(keep))
    n_red = len(keep) + len(unit_cycles)

    rows = list(2 * keep) + list(2 * keep + 1)
    cols = list(2 * reduced_of[keep]) + list(2 * reduced_of[keep] + 1)
    vals = [1.0] * (2 * len(keep))

    lumped = np.concatenate([space.lumped_area[keep], np.zeros(len(unit_cycles))])
    virtual_site = {}
    for slot, (hi, cyc) in enumerate(sorted(unit_cycles.items())):
        vs = len(keep) + slot
        virtual_site[hi] = vs
        m = len(cyc)
        d = unit_hole_degrees[hi]
        lumped[vs] = float(np.sum(space.lumped_area[list(cyc)]))
        for idx, s in enumerate(cyc):
            psi = 2 * np.pi * d * idx / m
            rows += [2 * s, 2 * s, 2 * s + 1, 2 * s + 1]
            cols += [2 * vs, 2 * vs + 1, 2 * vs, 2 * vs + 1]
            vals += [np.cos(psi), -np.sin(psi), np.sin(psi), np.cos(psi)]
    S = sp.csr_matrix((vals, (rows, cols)), shape=(2 * n, 2 * n_red))
    return S, virtual_site, lumped


class CrossFieldSolver(BaseEstimator):
    """Boundary-aligned cross field with user-prescribed hole singularities.

    Parameters
    ----------
    holes : sequence of HoleSpec / dict / (x, y, radius, degree)
        Drilled singularities with their target degrees (field units).
    space : {"CR", "P1"}
        Dof placement: edge midpoints (default) or vertices.
    max_iter, tol : Newton iteration budget and relative tolerance.
    gl_penalty : float or None
        Norm penalty strength ``eps``; ``None`` disables it.
    unit_norm_holes : "all" or sequence of hole indices
        Holes whose loop values are additionally pinned to unit norm.
    override_topology : bool
        Skip the feasibility gate (the solve may then not converge).
    """

    def __init__(
        self,
        holes=(),
        space="CR",
        max_iter=30,
        tol=1e-8,
        gl_penalty=None,
        unit_norm_holes=(),
        override_topology=False,
        corner_threshold=DEFAULT_CORNER_THRESHOLD,
    ):
        self.holes = holes
        self.space = space
        self.max_iter = max_iter
        self.tol = tol
        self.gl_penalty = gl_penalty
        self.unit_norm_holes = unit_norm_holes
        self.override_topology = override_topology
        self.corner_threshold = corner_threshold

    def fit(self, X: Mesh, y=None):
        """Drill, assemble, and solve on the given base mesh."""
        mesh = check_mesh(X)
        holes = as_hole_specs(self.holes)
        self.ledger_ = ph_check(mesh, holes, self.corner_threshold)
        if holes and not self.override_topology and self.ledger_.verdict != "pass":
            raise InfeasibleTopologyError(
                f"placed degree {self.ledger_.placed} != target "
                f"{self.ledger_.u_target}; set override_topology=True to force",
                ledger=self.ledger_,
            )
        drilled = drill_holes(mesh, holes) if holes else mesh
        space = build_space(drilled, self.space)
        system = assemble(space)

        norm_ids = self.unit_norm_holes
        if norm_ids == "all":
            norm_ids = [hi for hi, _ in space.hole_cycles]
        norm_ids = set(norm_ids)
        degree_of = {
            hi: drilled.hole_loops[hi][1].degree for hi, _ in space.hole_cycles
        }

        opts = SolveOptions(
            max_iter=self.max_iter,
            tol=self.tol,
            gl_penalty=self.gl_penalty,
            unit_norm_holes=tuple(sorted(norm_ids)),
            normalized_init=(
                True if (self.gl_penalty is not None or norm_ids) else None
            ),
        )

        if norm_ids:
            S, virtual_site, lumped = _uniform_loop_reduction(
                space, {hi: degree_of[hi] for hi in norm_ids}
            )
            n_red = S.shape[1] // 2
            red_space = _ReducedSpace(
                kind=space.kind, count=n_red, lumped_area=lumped, mesh=drilled
            )
            K_red = (S.T @ system.K @ S).tocsr()
            mask = np.zeros(2 * n_red, dtype=bool)
            values = np.zeros(2 * n_red)
            # boundary sites are never on hole loops, so they map one-to-one
            full_fixed = np.flatnonzero(system.dirichlet_mask)
            red_fixed = S[full_fixed].nonzero()[1]
            mask[red_fixed] = True
            values[red_fixed] = system.dirichlet_values[full_fixed]
            red_system = LinearSystem(
                space=red_space, K=K_red, K_scalar=system.K_scalar,
                b=np.zeros(2 * n_red), dirichlet_mask=mask,
                dirichlet_values=values,
            )
            constraints = [
                unit_norm_constraint(n_red, virtual_site[hi], hi)
                for hi in sorted(norm_ids)
            ]
            for hole_idx, cycle in space.hole_cycles:
                if hole_idx in norm_ids:
                    continue  # loop values already carry the exact winding
                form = hole_constraint_matrix(
                    space.count, cycle, degree_of[hole_idx], hole_idx
                )
                reduced = ConstraintForm(
                    matrix=(S.T @ form.matrix @ S).tocsr(),
                    target=form.target,
                    hole_id=form.hole_id,
                    cycle=form.cycle,
                )
                constraints.append(reduced)
            red_field, report = solve(red_system, constraints, opts)
            full = S @ red_field.flat
            field = FieldU(values=full.reshape(-1, 2), space=space)
            report.dirichlet_energy = float(full @ (system.K @ full))
        else:
            constraints = [
                hole_constraint_matrix(
                    space.count, cycle, degree_of[hole_idx], hole_idx
                )
                for hole_idx, cycle in space.hole_cycles
            ]
            field, report = solve(system, constraints, opts)

        self.mesh_ = drilled
        self.space_ = space
        self.system_ = system
        self.constraints_ = constraints
        self.field_ = field
        self.report_ = report
        self.degrees_ = measured_hole_degrees(
            field.values, {hi: list(cyc) for hi, cyc in space.hole_cycles}
        )
        self._locator = TriangleLocator(drilled)
        return self

    def predict(self, points) -> np.ndarray:
        """Cross angle in [0, pi/2) and norm |u|^(1/4) at query points."""
        pts = as_points(points)
        u = interpolate_space(self._locator, self.space_, self.field_.values, pts)
        angles = np.mod(np.arctan2(u[:, 1], u[:, 0]) / 4.0, np.pi / 2)
        norms = np.hypot(u[:, 0], u[:, 1]) ** 0.25
        return np.column_stack((angles, norms))


class HarmonicConjugateSolver(BaseEstimator):
    """Scalar conjugate-phase solve with quarter-index sources.

    ``sources`` is a sequence of ``((x, y), k)`` in quarter units.
    """

    def __init__(self, sources=()):
        self.sources = sources

    def fit(self, X: Mesh, y=None):
        mesh = check_mesh(X)
        self.solution_ = solve_conjugate(mesh, list(self.sources))
        self.values_ = self.solution_.values
        self._locator = TriangleLocator(mesh)
        return self

    def predict(self, points) -> np.ndarray:
        pts = as_points(points)
        return interpolate_p1(self._locator, self.values_, pts)
