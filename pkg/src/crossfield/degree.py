"""Discrete winding numbers on closed cycles and hole constraint forms.

The winding estimator uses centered differences of the field components
around the cycle.  On a counter-clockwise cycle a unit vortex measures
``m*sin(2*pi/m)/(2*pi)`` with ``m`` samples, converging to +1 at O(1/m^2).

The same quadrature, without the normalization, is what the solver imposes
per hole: a sparse quadratic form ``x^T M x`` whose value on the analytic
unit winding-1 field tends to ``4*pi`` (each node pair is counted twice by
the symmetric matrix), so a hole of prescribed degree ``d`` carries the
target ``4*pi*d``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DegenerateFieldError

NORM_FLOOR = 1e-8


@dataclass(frozen=True)
class ConstraintForm:
    """Quadratic degree constraint ``x^T M x = target`` for one hole."""

    matrix: sp.csr_matrix          # over interleaved global dofs (v1, v2)
    target: float
    hole_id: int
    cycle: tuple[int, ...]         # dof site indices, ccw around the hole

    def value(self, x: np.ndarray) -> float:
        return float(x @ (self.matrix @ x))


def winding_degree(values: np.ndarray) -> float:
    """Winding number of a closed cycle of 2-vectors, ccw-positive.

    ``values`` has shape (m, 2) with m >= 3, ordered counter-clockwise
    around the enclosed region.  Values are normalized per site before the
    centered-difference quadrature; a near-zero value makes the winding
    undefined and raises :class:`DegenerateFieldError`.
    """
    v = np.asarray(values, dtype=float)
    if v.ndim != 2 or v.shape[1] != 2 or len(v) < 3:
        raise ValueError("cycle must be an (m>=3, 2) array")
    norms = np.hypot(v[:, 0], v[:, 1])
    if np.min(norms) < NORM_FLOOR:
        raise DegenerateFieldError(
            f"cycle value norm {np.min(norms):.3e} below {NORM_FLOOR:.0e}"
        )
    u = v / norms[:, None]
    nxt = np.roll(u, -1, axis=0)
    prv = np.roll(u, 1, axis=0)
    incr = 0.5 * (u[:, 0] * (nxt[:, 1] - prv[:, 1]) - u[:, 1] * (nxt[:, 0] - prv[:, 0]))
    return float(np.sum(incr) / (2 * np.pi))


def cycle_phase_winding(values: np.ndarray) -> float:
    """Exact winding from per-edge phase increments (arg-based).

    Unlike :func:`winding_degree` this returns an exact integer whenever
    no single edge jumps by pi or more; it is the estimator used for
    per-triangle singularity detection where only 3 samples exist.
    """
    v = np.asarray(values, dtype=float)
    norms = np.hypot(v[:, 0], v[:, 1])
    if np.min(norms) < NORM_FLOOR:
        raise DegenerateFieldError("zero value on cycle")
    z = v[:, 0] + 1j * v[:, 1]
    ratio = np.roll(z, -1) / z
    return float(np.sum(np.angle(ratio)) / (2 * np.pi))


def cycle_quadrature_target(m: int, degree: int) -> float:
    """Exact form value of the unit winding-``degree`` field on an m-cycle.

    The asymptotic target ``4*pi*d`` is unattainable by unit-norm cycles
    (the sine quadrature saturates), so solves that also pin the loop
    norms must aim for this finite-m value instead.
    """
    return float(2 * m * np.sin(2 * np.pi * degree / m))


def hole_constraint_matrix(
    n_sites: int,
    cycle: Sequence[int],
    degree: int,
    hole_id: int = 0,
    exact_cycle_target: bool = False,
) -> ConstraintForm:
    """Assemble the sparse degree form for one hole cycle.

    ``cycle`` lists dof-site indices counter-clockwise around the hole;
    the matrix lives on the interleaved vector dofs (site s -> rows 2s,
    2s+1 for the two components).  Couplings are +-1 between the first
    component of a site and the second component of its cycle neighbours;
    the target is ``4*pi*degree``, or the finite-cycle quadrature value
    when ``exact_cycle_target`` is set (required for unit-norm loops).
    """
    cycle = [int(c) for c in cycle]
    if len(cycle) < 3:
        raise ValueError("hole cycle needs at least 3 sites")
    if len(set(cycle)) != len(cycle):
        raise ValueError("duplicate dof in hole cycle")
    m = len(cycle)
    rows, cols, vals = [], [], []
    for i in range(m):
        s = cycle[i]
        s_next = cycle[(i + 1) % m]
        s_prev = cycle[(i - 1) % m]
        # v1^i couples +1 to v2^{i+1} and -1 to v2^{i-1}; v2^i the opposite
        rows += [2 * s, 2 * s, 2 * s + 1, 2 * s + 1]
        cols += [2 * s_next + 1, 2 * s_prev + 1, 2 * s_next, 2 * s_prev]
        vals += [1.0, -1.0, -1.0, 1.0]
    mat = sp.csr_matrix(
        (vals, (rows, cols)), shape=(2 * n_sites, 2 * n_sites)
    )
    if exact_cycle_target:
        target = cycle_quadrature_target(m, degree)
    else:
        target = float(4 * np.pi * degree)
    return ConstraintForm(
        matrix=mat,
        target=target,
        hole_id=hole_id,
        cycle=tuple(cycle),
    )


def measured_hole_degrees(field_values: np.ndarray, hole_cycles) -> dict:
    """Winding per hole loop plus the value-norm range on each loop.

    ``hole_cycles`` maps hole id -> sequence of dof site indices (ccw
    around the hole).  A loop whose values degenerate reports degree
    ``None`` and is flagged.
    """
    out = {}
    for hole_id, cycle in hole_cycles.items():
        vals = field_values[list(cycle)]
        norms = np.hypot(vals[:, 0], vals[:, 1])
        entry = {
            "min_norm": float(norms.min()),
            "max_norm": float(norms.max()),
        }
        try:
            entry["degree"] = winding_degree(vals)
            entry["degenerate"] = False
        except DegenerateFieldError:
            entry["degree"] = None
            entry["degenerate"] = True
        out[hole_id] = entry
    return out
