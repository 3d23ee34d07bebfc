"""Boundary corner indices: singular energy and optimal quarter assignment.

A corner of interior angle ``alpha`` can absorb a boundary singularity of
quarter index ``k``.  The rotational cost of holding index ``k`` at the
corner is ``(pi - alpha - 2*pi*k)^2 / (2*alpha)``; an interior singularity
of index ``l`` costs ``(2*pi*|l|)^2 / (2*pi)``.  Whether raising or
lowering ``k`` (compensated by an interior quarter) pays off depends on
how the boundary budget compares with the Euler characteristic, which
yields three admissibility regimes:

* ``balanced`` (budget met):   3/8 - 9/8*a <= k <= 5/8 - 7/8*a
* ``scarce``   (budget short): 3/8 - 7/8*a <= k <= 5/8 - 7/8*a
* ``excess``   (budget over):  3/8 - 9/8*a <= k <= 5/8 - 9/8*a

with ``a = alpha / 2*pi`` and closed endpoints.  The balanced band is the
only one where consecutive quarter ranges overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence, Union

from .errors import GeometryError

SCENARIOS = ("balanced", "scarce", "excess")
_QUARTERS = tuple(Fraction(q, 4) for q in range(-2, 3))

# (lower intercept, lower slope, upper intercept, upper slope) on a = alpha/2pi
_BOUNDS = {
    "balanced": (Fraction(3, 8), Fraction(9, 8), Fraction(5, 8), Fraction(7, 8)),
    "scarce": (Fraction(3, 8), Fraction(7, 8), Fraction(5, 8), Fraction(7, 8)),
    "excess": (Fraction(3, 8), Fraction(9, 8), Fraction(5, 8), Fraction(9, 8)),
}


def admissible_indices(
    turn: Union[Fraction, float], scenario: str
) -> tuple[Fraction, ...]:
    """Admissible quarter indices at a corner of angle ``turn * 2*pi``.

    ``turn`` may be an exact :class:`~fractions.Fraction`, in which case
    every comparison is exact rational arithmetic (interval endpoints are
    attained, both sides closed).
    """
    if scenario not in _BOUNDS:
        raise ValueError(f"unknown scenario {scenario!r}")
    a = turn if isinstance(turn, Fraction) else Fraction(float(turn))
    if not 0 < a < 1:
        raise GeometryError("corner angle must lie strictly in (0, 2*pi)")
    lo_c, lo_s, hi_c, hi_s = _BOUNDS[scenario]
    lo = lo_c - lo_s * a
    hi = hi_c - hi_s * a
    return tuple(k for k in _QUARTERS if lo <= k <= hi)


def classify_corner(alpha: float, scenario: str) -> tuple[Fraction, ...]:
    """Float-angle wrapper around :func:`admissible_indices`."""
    turn = Fraction(float(alpha)) / (2 * Fraction(math.pi))
    return admissible_indices(turn, scenario)


def corner_energy(alpha: float, k) -> float:
    """Rotational cost of holding index ``k`` at an ``alpha`` corner."""
    if alpha <= 0 or alpha >= 2 * math.pi:
        raise GeometryError("corner angle must lie strictly in (0, 2*pi)")
    r = math.pi - alpha - 2 * math.pi * float(k)
    return r * r / (2 * alpha)


def interior_energy(indices: Sequence) -> float:
    """Rotational cost of a set of interior singularities."""
    return sum((2 * math.pi * abs(float(l))) ** 2 for l in indices) / (2 * math.pi)


@dataclass(frozen=True)
class InteriorPlan:
    """Interior indices (quarter multiples) completing a boundary choice."""

    indices: tuple

    @property
    def total(self) -> Fraction:
        return sum(self.indices, Fraction(0))

    def to_json(self):
        return [str(l) for l in self.indices]


@dataclass(frozen=True)
class CornerAssignment:
    """Chosen quarter index per corner plus the scenario that won."""

    angles: tuple
    indices: tuple              # Fractions, one per corner
    scenario: str
    interior: InteriorPlan
    energy: float

    @property
    def boundary_total(self) -> Fraction:
        return sum(self.indices, Fraction(0))

    def to_json(self):
        return {
            "scenario": self.scenario,
            "corners": [
                {"angle": float(a), "k": str(k)}
                for a, k in zip(self.angles, self.indices)
            ],
            "interior": self.interior.to_json(),
            "energy": self.energy,
        }


def boundary_singular_energy(
    assignment: CornerAssignment, interior: InteriorPlan
) -> float:
    """Total singular energy of a boundary assignment plus interior plan."""
    total = sum(
        corner_energy(a, k) for a, k in zip(assignment.angles, assignment.indices)
    )
    return total + interior_energy(interior.indices)


def _quarters_plan(total: Fraction) -> tuple:
    """Cheapest interior realization of a required total: all quarters."""
    q = int(total * 4)
    sign = 1 if q > 0 else -1
    return tuple(Fraction(sign, 4) for _ in range(abs(q)))


def assign_boundary_singularities(
    corner_angles: Sequence[float], chi: int
) -> CornerAssignment:
    """Pick corner indices and the forced interior plan of least energy.

    All three scenarios are evaluated; within a scenario each corner takes
    the admissible index with the lowest local cost (ties break toward
    smaller magnitude, then toward the positive index).  The interior plan
    tops the total up to ``chi`` with quarter singularities.  Any chosen
    half index is split into a quarter at the corner plus a nearby
    interior quarter.
    """
    candidates = []
    for scenario in SCENARIOS:
        ks = []
        for alpha in corner_angles:
            options = classify_corner(alpha, scenario)
            ks.append(
                min(options, key=lambda k: (corner_energy(alpha, k), abs(k), -k))
            )
        extra = []
        for i, k in enumerate(ks):
            if abs(k) == Fraction(1, 2):
                ks[i] = k / 2
                extra.append(k / 2)
        need = Fraction(chi) - sum(ks, Fraction(0)) - sum(extra, Fraction(0))
        interior = InteriorPlan(indices=tuple(extra) + _quarters_plan(need))
        assignment = CornerAssignment(
            angles=tuple(float(a) for a in corner_angles),
            indices=tuple(ks),
            scenario=scenario,
            interior=interior,
            energy=0.0,
        )
        energy = boundary_singular_energy(assignment, interior)
        candidates.append(
            CornerAssignment(
                angles=assignment.angles,
                indices=assignment.indices,
                scenario=scenario,
                interior=interior,
                energy=energy,
            )
        )
    return min(candidates, key=lambda c: (c.energy, SCENARIOS.index(c.scenario)))
