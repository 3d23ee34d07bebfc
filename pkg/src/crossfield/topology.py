"""Valence, interior degree targets, and the index bookkeeping verdict.

Cross-field boundary alignment pins the total interior singularity index
of a domain.  The target splits into two boundary contributions:

* ``valence``: at every corner, the smallest rotation (mod pi/2) that maps
  the boundary cross on one side onto the other, summed in turn units;
* the smooth tangent turning of the remaining boundary.

For a closed polygonal loop the two add up to an exact quarter-integer,
which is computed in rational arithmetic: every corner contributes the
integer ``round(jump / (pi/2))`` and the loop count fixes the rest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .mesh import (
    DEFAULT_CORNER_THRESHOLD,
    CornerInfo,
    HoleSpec,
    Mesh,
    boundary_analysis,
)

_HALF_PI = math.pi / 2


def quarter_steps(tangent_jump: float) -> int:
    """Nearest quarter-turn count with ties resolved downward.

    Ties round toward the lower multiple so the residual lands in
    (-pi/4, pi/4]; e.g. a jump of exactly pi/4 keeps residual +pi/4.
    """
    return math.ceil(tangent_jump / _HALF_PI - 0.5)


def corner_residual(tangent_jump: float) -> float:
    """Smallest cross-equivalent rotation left at a corner, in (-pi/4, pi/4]."""
    return tangent_jump - _HALF_PI * quarter_steps(tangent_jump)


def valence(corners: Sequence[CornerInfo]) -> tuple[Fraction, float]:
    """Sum of corner residuals in turn units.

    Returns ``(rational, float)``: the float is the raw residual sum over
    2*pi; the rational is the nearest quarter when the float sits within
    1e-6 of one (the generic case for polygonal boundaries), and ``None``
    otherwise.
    """
    total = sum(corner_residual(c.tangent_jump) for c in corners)
    v_float = total / (2 * math.pi)
    snapped = Fraction(round(v_float * 4), 4)
    if abs(v_float - float(snapped)) <= 1e-6:
        return snapped, v_float
    return None, v_float


def interior_target(
    mesh: Mesh, corner_threshold: float = DEFAULT_CORNER_THRESHOLD
) -> tuple[Fraction, int]:
    """Required total interior index: cross units and field units.

    cross_target = valence + smooth_turning / 2*pi.  Using the closed-loop
    identity (total turning = 2*pi per loop, signed by orientation) this
    equals ``(1 - n_inner_loops) - sum(corner quarter steps)/4`` exactly,
    so the result is an exact rational and the field-unit target
    ``4 * cross_target`` is an exact integer.
    """
    corners, smooth, chi = boundary_analysis(mesh, corner_threshold)
    n_inner = max(0, len(mesh.boundary_loops) - 1)
    steps = sum(quarter_steps(c.tangent_jump) for c in corners)
    cross = Fraction(1 - n_inner) - Fraction(steps, 4)
    # cross-check against the float split; large deviation means the
    # corner threshold misclassified boundary jitter
    v_rat, v_float = valence(corners)
    float_cross = v_float + smooth / (2 * math.pi)
    if abs(float_cross - float(cross)) > 1e-6:
        raise Warning(
            f"non-quarter interior target {float_cross:.6f}; "
            "check the corner threshold against the mesh resolution"
        )
    return cross, int(4 * cross)


@dataclass(frozen=True)
class PHLedger:
    """Index bookkeeping verdict for a prescribed hole configuration."""

    valence: Optional[Fraction]
    smooth_turns: float
    cross_target: Fraction
    u_target: int
    placed: int
    verdict: str                   # "pass" | "fail"
    deficit: int                   # u_target - placed

    def to_json(self):
        return {
            "valence": None if self.valence is None else str(self.valence),
            "smooth_turns": self.smooth_turns,
            "cross_target": str(self.cross_target),
            "u_target": self.u_target,
            "placed": self.placed,
            "verdict": self.verdict,
            "deficit": self.deficit,
        }


def ph_check(
    mesh: Mesh,
    holes: Sequence[HoleSpec],
    corner_threshold: float = DEFAULT_CORNER_THRESHOLD,
) -> PHLedger:
    """Compare prescribed hole degrees against the topological target.

    ``mesh`` is the base domain (before drilling); inner boundaries the
    domain already has are part of the target, drilled holes are the
    placed side.  A failed check is a verdict, not an error.
    """
    corners, smooth, _ = boundary_analysis(mesh, corner_threshold)
    cross, u_target = interior_target(mesh, corner_threshold)
    placed = int(sum(h.degree for h in holes))
    v_rat, _ = valence(corners)
    return PHLedger(
        valence=v_rat,
        smooth_turns=smooth / (2 * math.pi),
        cross_target=cross,
        u_target=u_target,
        placed=placed,
        verdict="pass" if placed == u_target else "fail",
        deficit=u_target - placed,
    )
