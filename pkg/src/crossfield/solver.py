"""Constrained field solve: linear Dirichlet objective, quadratic degree
constraints per hole, Newton iteration on the KKT system.

The stationary point of

    1/2 x^T K x - b^T x + sum_j lambda_j (x^T M_j x - t_j)  [+ norm penalty]

is found by full Newton steps with residual-increase halving.  The
optional norm penalty integrates ``(|u|^2 - 1)^2 / (4 eps^2)`` with lumped
site areas and is linearized once per outer iteration.  A singular KKT
matrix falls back to a unit entry in the multiplier diagonal for that
iteration.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Optional, Sequence

import numpy as np

from .mesh import cross2
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import LinearSystem, DofSpace
from .degree import ConstraintForm, cycle_phase_winding, NORM_FLOOR
from .errors import DegenerateFieldError


@dataclass(frozen=True)
class FieldU:
    """Solved representation field: one 2-vector per dof site."""

    values: np.ndarray            # (n, 2)
    space: DofSpace

    @property
    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def norms(self) -> np.ndarray:
        return np.hypot(self.values[:, 0], self.values[:, 1])

    def to_json(self):
        return {
            "space": self.space.kind,
            "values": [[float(a), float(b)] for a, b in self.values],
        }


@dataclass
class SolveOptions:
    max_iter: int = 30
    tol: float = 1e-8
    unit_norm_holes: tuple = ()       # hole ids, or "all"
    gl_penalty: Optional[float] = None  # eps; 1/100 is the conventional value
    singular_fallback: bool = True
    max_halvings: int = 8
    # start from the pointwise-normalized harmonic field; default follows
    # the penalty switch (a sagged-norm start defeats the norm penalty)
    normalized_init: Optional[bool] = None
    init_perturbation: float = 0.0    # deterministic symmetry-breaking noise
    initial_guess: Optional[np.ndarray] = None  # full interleaved start vector

    def __post_init__(self):
        if self.gl_penalty is not None and self.gl_penalty <= 0:
            raise ValueError("penalty eps must be positive")

    @property
    def use_normalized_init(self) -> bool:
        if self.normalized_init is None:
            return self.gl_penalty is not None
        return self.normalized_init


@dataclass
class SolveReport:
    iterations: int = 0
    converged: bool = False
    gradient_norm: float = float("inf")
    constraint_residuals: dict = dc_field(default_factory=dict)
    dirichlet_energy: float = 0.0
    message: str = ""

    def to_json(self):
        return {
            "iterations": self.iterations,
            "converged": self.converged,
            "gradient_norm": self.gradient_norm,
            "constraint_residuals": {
                str(k): float(v) for k, v in self.constraint_residuals.items()
            },
            "dirichlet_energy": self.dirichlet_energy,
            "message": self.message,
        }


def unit_norm_constraint(n_sites: int, site: int, hole_id: int) -> ConstraintForm:
    """Per-site constraint |v|^2 = 1 expressed as a quadratic form."""
    idx = [2 * site, 2 * site + 1]
    mat = sp.csr_matrix(
        (np.ones(2), (idx, idx)), shape=(2 * n_sites, 2 * n_sites)
    )
    return ConstraintForm(matrix=mat, target=1.0, hole_id=hole_id, cycle=(site,))


def _penalty_terms(x, free_sites, weights, eps):
    """Gradient and Hessian blocks of the lumped norm penalty."""
    a = x[2 * free_sites]
    b = x[2 * free_sites + 1]
    w = weights / (eps * eps)
    r2m1 = a * a + b * b - 1.0
    grad = np.zeros_like(x)
    grad[2 * free_sites] = w * r2m1 * a
    grad[2 * free_sites + 1] = w * r2m1 * b
    haa = w * (r2m1 + 2 * a * a)
    hbb = w * (r2m1 + 2 * b * b)
    hab = w * 2 * a * b
    rows = np.concatenate(
        [2 * free_sites, 2 * free_sites + 1, 2 * free_sites, 2 * free_sites + 1]
    )
    cols = np.concatenate(
        [2 * free_sites, 2 * free_sites + 1, 2 * free_sites + 1, 2 * free_sites]
    )
    vals = np.concatenate([haa, hbb, hab, hab])
    hess = sp.csr_matrix((vals, (rows, cols)), shape=(len(x), len(x)))
    value = float(np.sum(weights * r2m1 * r2m1) / (4 * eps * eps))
    return value, grad, hess


def seed_vortices(space: DofSpace, x: np.ndarray, seeds) -> np.ndarray:
    """Multiply a field by unimodular vortex factors at given points.

    ``seeds`` is a sequence of ``((x, y), sign)``; each factor winds once
    around its point with the given orientation, leaving norms unchanged.
    Used to start a penalized solve in a prescribed vortex class.
    """
    out = np.array(x, dtype=float, copy=True)
    z = space.sites[:, 0] + 1j * space.sites[:, 1]
    w = out[0::2] + 1j * out[1::2]
    for (px, py), sign in seeds:
        zc = z - complex(px, py)
        r = np.abs(zc)
        if np.min(r) < 1e-12:
            raise ValueError("vortex seed coincides with a dof site")
        w = w * (zc / r) ** int(sign)
    out[0::2] = w.real
    out[1::2] = w.imag
    return out


def _normalize_sites(x: np.ndarray, sites: np.ndarray) -> None:
    v1, v2 = x[2 * sites], x[2 * sites + 1]
    r = np.hypot(v1, v2)
    ok = r > 1e-12
    x[2 * sites[ok]] = v1[ok] / r[ok]
    x[2 * sites[ok] + 1] = v2[ok] / r[ok]
    x[2 * sites[~ok]] = 1.0
    x[2 * sites[~ok] + 1] = 0.0


def solve(
    system: LinearSystem,
    constraints: Sequence[ConstraintForm] = (),
    opts: Optional[SolveOptions] = None,
) -> tuple[FieldU, SolveReport]:
    """Newton/Lagrange solve of the constrained Dirichlet problem.

    Returns the field and a report; a non-converged run still returns the
    last iterate with ``converged=False``.  Callers are expected to have
    validated the topological feasibility of the constraint targets.

    With degree constraints the full KKT system is solved each iteration
    (full steps, residual-increase halving).  A penalized problem without
    constraints instead runs damped Newton descent on the energy, with a
    diagonal shift whenever the Hessian loses positive definiteness.
    """
    opts = opts or SolveOptions()
    free = ~system.dirichlet_mask
    x = system.dirichlet_values.copy()
    lam = np.zeros(len(constraints))

    K = system.K
    # eliminate the boundary: rhs for the free block
    b_free = system.b[free] - K[free][:, ~free] @ x[~free]
    K_ff = K[free][:, free].tocsc()
    ref = max(1.0, float(np.linalg.norm(b_free)))

    x[free] = spla.spsolve(K_ff, b_free)
    iterations = 1

    free_sites = np.flatnonzero(free[0::2] & free[1::2])
    weights = system.space.lumped_area[free_sites]

    if opts.initial_guess is not None:
        x[free] = np.asarray(opts.initial_guess, dtype=float)[free]
    if opts.use_normalized_init:
        _normalize_sites(x, free_sites)
    if opts.init_perturbation > 0:
        rng = np.random.default_rng(0)
        noise = rng.standard_normal(2 * len(free_sites)) * opts.init_perturbation
        x[2 * free_sites] += noise[0::2]
        x[2 * free_sites + 1] += noise[1::2]

    if constraints:
        x, lam, grad, cons, iterations, done, message = _kkt_loop(
            system, constraints, opts, x, lam, free, free_sites, weights,
            ref, iterations,
        )
    elif opts.gl_penalty is not None:
        x, grad, iterations, done, message = _descent_loop(
            system, opts, x, free, free_sites, weights, ref, iterations
        )
        cons = np.zeros(0)
    else:
        grad = K @ x - system.b
        cons = np.zeros(0)
        done = bool(np.linalg.norm(grad[free]) <= opts.tol * ref)
        message = "" if done else "linear solve left a residual"

    field = FieldU(values=x.reshape(-1, 2), space=system.space)
    report = SolveReport(
        iterations=iterations,
        converged=done,
        gradient_norm=float(np.linalg.norm(grad[free])),
        constraint_residuals={
            (c.hole_id if c.target != 1.0 else f"norm:{c.cycle[0]}"): float(r)
            for c, r in zip(constraints, cons)
        },
        dirichlet_energy=float(x @ (K @ x)),
        message=message or ("" if done else "max iterations reached"),
    )
    return field, report


def _kkt_loop(system, constraints, opts, x, lam, free, free_sites, weights,
              ref, iterations):
    K = system.K
    mats = [c.matrix for c in constraints]
    targets = np.array([c.target for c in constraints])
    # one degree unit as the absolute floor for zero targets
    c_scale = np.maximum(np.abs(targets), 4 * np.pi)

    def residuals(x, lam):
        grad = K @ x - system.b
        for lj, Mj in zip(lam, mats):
            grad += (2 * lj) * (Mj @ x)
        pen_hess = None
        if opts.gl_penalty is not None:
            _, pgrad, pen_hess = _penalty_terms(
                x, free_sites, weights, opts.gl_penalty
            )
            grad = grad + pgrad
        cons = np.array([x @ (Mj @ x) for Mj in mats]) - targets
        return grad, cons, pen_hess

    grad, cons, pen_hess = residuals(x, lam)
    res_norm = float(np.sqrt(np.sum(grad[free] ** 2) + np.sum(cons**2)))

    def converged(grad, cons):
        ok_g = np.linalg.norm(grad[free]) <= opts.tol * ref
        ok_c = np.all(np.abs(cons) <= opts.tol * c_scale)
        return bool(ok_g and ok_c)

    done = converged(grad, cons)
    message = ""
    while not done and iterations < opts.max_iter:
        A = K + sum((2 * lj) * Mj for lj, Mj in zip(lam, mats))
        if pen_hess is not None:
            A = A + pen_hess
        A_ff = A[free][:, free]
        J = sp.csc_matrix(np.column_stack([(2 * (Mj @ x))[free] for Mj in mats]))

        rhs = -np.concatenate([grad[free], cons])
        step = None
        for dd in (0.0, 1.0):
            D = sp.identity(len(constraints), format="csc") * dd
            kkt = sp.bmat([[A_ff, J], [J.T, D]], format="csc")
            try:
                cand = spla.splu(kkt).solve(rhs)
            except RuntimeError:
                cand = None
            if cand is not None and np.all(np.isfinite(cand)):
                step = cand
                break
            if not opts.singular_fallback:
                break
        if step is None:
            message = "singular KKT system"
            break

        nf = int(np.sum(free))
        dx, dlam = step[:nf], step[nf:]
        alpha = 1.0
        best = None
        for _ in range(opts.max_halvings + 1):
            x_try = x.copy()
            x_try[free] = x[free] + alpha * dx
            lam_try = lam + alpha * dlam
            g_try, c_try, ph_try = residuals(x_try, lam_try)
            r_try = float(np.sqrt(np.sum(g_try[free] ** 2) + np.sum(c_try**2)))
            if best is None or r_try < best[0]:
                best = (r_try, x_try, lam_try, g_try, c_try, ph_try)
            if r_try < res_norm * (1 + 1e-12):
                break
            alpha *= 0.5
        res_norm, x, lam, grad, cons, pen_hess = best
        iterations += 1
        done = converged(grad, cons)
    return x, lam, grad, cons, iterations, done, message


def _descent_loop(system, opts, x, free, free_sites, weights, ref, iterations):
    """Damped Newton minimization of energy + penalty (no constraints)."""
    K = system.K
    eps = opts.gl_penalty

    def energy_grad_hess(x):
        pen_val, pgrad, phess = _penalty_terms(x, free_sites, weights, eps)
        e = 0.5 * float(x @ (K @ x)) - float(system.b @ x) + pen_val
        return e, (K @ x - system.b + pgrad), phess

    e_cur, grad, phess = energy_grad_hess(x)
    done = bool(np.linalg.norm(grad[free]) <= opts.tol * ref)
    message = ""
    shift = 0.0
    diag_scale = float(np.mean(K.diagonal())) or 1.0
    while not done and iterations < opts.max_iter:
        H = (K + phess)[free][:, free]
        g = grad[free]
        d = None
        tau = shift
        for _ in range(40):
            Ht = H if tau == 0 else H + tau * sp.identity(H.shape[0], format="csr")
            try:
                cand = spla.splu(Ht.tocsc()).solve(-g)
            except RuntimeError:
                cand = None
            if cand is not None and np.all(np.isfinite(cand)) and g @ cand < 0:
                d = cand
                break
            tau = max(1e-6 * diag_scale, 2 * tau)
        if d is None:
            message = "no descent direction"
            break
        shift = tau / 4  # reuse a fraction of the last successful shift
        slope = float(g @ d)
        alpha = 1.0
        accepted = False
        for _ in range(30):
            x_try = x.copy()
            x_try[free] = x[free] + alpha * d
            e_try, g_try, ph_try = energy_grad_hess(x_try)
            if e_try <= e_cur + 1e-4 * alpha * slope:
                x, e_cur, grad, phess = x_try, e_try, g_try, ph_try
                accepted = True
                break
            alpha *= 0.5
        iterations += 1
        if not accepted:
            message = "line search stalled"
            break
        done = bool(np.linalg.norm(grad[free]) <= opts.tol * ref)
    return x, grad, iterations, done, message


# ---------------------------------------------------------------------------
# Post-processing
# ---------------------------------------------------------------------------

def extract_crosses(field: FieldU):
    """Cross angle in [0, pi/2) and norm |u|^(1/4) per dof site.

    Zero-norm sites get angle 0 and are flagged.
    """
    u = field.values
    norms = np.hypot(u[:, 0], u[:, 1])
    zero = norms < NORM_FLOOR
    angles = np.arctan2(u[:, 1], u[:, 0]) / 4.0
    angles = np.mod(angles, np.pi / 2)
    angles[zero] = 0.0
    return angles, norms**0.25, zero


def detect_singular_triangles(field: FieldU, index_threshold: float = 0.25):
    """Triangles whose 3-site cycle carries a nonzero winding.

    Uses exact per-edge phase increments, so an isolated vortex inside a
    triangle measures an integer.  Returns ``(triangle, cross_index)``
    pairs; degenerate triangles are reported with index ``None``.
    """
    space = field.space
    out = []
    vals = field.values
    for t, dofs in enumerate(space.element_dofs):
        cyc = vals[dofs]
        try:
            w = cycle_phase_winding(cyc)
        except DegenerateFieldError:
            out.append((t, None))
            continue
        if abs(w) > index_threshold:
            out.append((t, round(w) / 4))
    return out


def dirichlet_energy(field: FieldU, system: LinearSystem):
    """Full gradient energy x^T K x plus the per-triangle density."""
    x = field.flat
    total = float(x @ (system.K @ x))
    space = system.space
    mesh = space.mesh
    p = mesh.vertices[mesh.triangles]
    areas = 0.5 * cross2(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    grads = np.empty((len(areas), 3, 2))
    for i in range(3):
        e = p[:, (i + 2) % 3] - p[:, (i + 1) % 3]
        grads[:, i, 0] = -e[:, 1]
        grads[:, i, 1] = e[:, 0]
    grads /= (2 * areas)[:, None, None]
    if space.kind == "CR":
        grads = -2.0 * grads
    vals = field.values[space.element_dofs]          # (nt, 3, 2 comps)
    g = np.einsum("tid,tic->tdc", grads, vals)       # (nt, 2 xy, 2 comps)
    density = np.sum(g * g, axis=(1, 2)) * areas
    return total, density
