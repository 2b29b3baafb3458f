"""Footstep actions, directional subsets and the adaptive per-subset selection.

Candidate tables are written for a swinging LEFT foot (stance foot RIGHT),
so lateral offsets ``dy`` are positive. Actions for the other foot are
obtained with :func:`mirror`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Callable, Iterable, Sequence

from .energy import EnergyParams, StepGeometry, UndefinedCOT, cot, step_energy
from .geometry import FootState, Side, rotate, wrap_angle

SUBSET_ORDER = (
    "forward",
    "diag_left",
    "diag_right",
    "side_left",
    "side_right",
    "rotate_left",
    "rotate_right",
)


@dataclass(frozen=True)
class FootstepAction:
    dx: float
    dy: float
    dtheta: float = 0.0
    subset_id: str = "forward"
    sidestep: bool = False
    rotate_in_place: bool = False

    @property
    def swing_side(self) -> Side:
        return Side.LEFT if self.dy > 0 else Side.RIGHT

    def displacement(self, nominal_width: float) -> tuple[float, float]:
        """Travel of the body reference point, in the stance-foot frame."""
        half = 0.5 * nominal_width
        s = 1.0 if self.dy > 0 else -1.0
        # new stance offset rotated by dtheta, minus the old stance offset
        ox, oy = rotate(0.0, -s * half, self.dtheta)
        return self.dx + ox, self.dy + oy - s * half

    def geometry(self, nominal_width: float) -> StepGeometry:
        ddx, ddy = self.displacement(nominal_width)
        return StepGeometry(
            length=math.hypot(ddx, ddy),
            width=abs(self.dy),
            yaw=self.dtheta,
            sidestep=self.sidestep,
        )


def _swap_lr(name: str) -> str:
    if "left" in name:
        return name.replace("left", "right")
    if "right" in name:
        return name.replace("right", "left")
    return name


def mirror(action: FootstepAction) -> FootstepAction:
    """Reflect an action for the opposite swing foot."""
    return replace(
        action,
        dy=-action.dy,
        dtheta=-action.dtheta,
        subset_id=_swap_lr(action.subset_id),
    )


def oriented(action: FootstepAction, stance: Side) -> FootstepAction:
    """Return ``action`` expressed for a step off the given stance foot."""
    wanted = stance.other
    return action if action.swing_side is wanted else mirror(action)


def successor(state: FootState, action: FootstepAction) -> FootState:
    """Place the swing foot; the caller passes an action already oriented for ``state.side``."""
    wx, wy = rotate(action.dx, action.dy, state.theta)
    return FootState(
        state.x + wx,
        state.y + wy,
        wrap_angle(state.theta + action.dtheta),
        state.side.other,
        state.step_index + 1,
    )


def step_in_place(nominal_width: float) -> FootstepAction:
    return FootstepAction(0.0, nominal_width, 0.0, "in_place")


@dataclass(frozen=True)
class ActionProfile:
    """Kinematic limits plus the ordered candidate table of every subset."""

    name: str
    l_max: float
    w_min: float
    w_max: float
    w_nominal: float
    dtheta_max: float
    subsets: tuple[tuple[str, tuple[FootstepAction, ...]], ...]

    def __post_init__(self):
        if not (0 < self.w_min <= self.w_nominal <= self.w_max):
            raise ValueError("need 0 < w_min <= w_nominal <= w_max")
        if self.l_max <= 0 or self.dtheta_max <= 0:
            raise ValueError("l_max and dtheta_max must be positive")
        for sid, cands in self.subsets:
            for a in cands:
                problem = self.kinematic_violation(a)
                if problem:
                    raise ValueError(f"candidate {a} in subset {sid!r}: {problem}")

    def kinematic_violation(self, a: FootstepAction) -> str | None:
        tol = 1e-9
        if a.dx < -tol:
            return "backward steps are not allowed"
        if a.dx > self.l_max + tol:
            return f"dx exceeds l_max={self.l_max}"
        if not (self.w_min - tol <= abs(a.dy) <= self.w_max + tol):
            return f"|dy| outside [{self.w_min}, {self.w_max}]"
        if abs(a.dtheta) > self.dtheta_max + tol:
            return f"|dtheta| exceeds {math.degrees(self.dtheta_max):.1f} deg"
        return None

    @cached_property
    def candidates(self) -> tuple[FootstepAction, ...]:
        return tuple(a for _, cands in self.subsets for a in cands)

    def subsets_for(self, stance: Side) -> list[tuple[str, tuple[FootstepAction, ...]]]:
        if stance is Side.RIGHT:
            return [(sid, cands) for sid, cands in self.subsets]
        return [(_swap_lr(sid), tuple(mirror(a) for a in cands)) for sid, cands in self.subsets]

    def with_subsets(self, subsets) -> "ActionProfile":
        return replace(self, subsets=tuple((sid, tuple(c)) for sid, c in subsets))


def _make(subset, rows, **flags):
    return (subset, tuple(FootstepAction(dx, dy, math.radians(deg), subset, **flags) for dx, dy, deg in rows))


def _default_subsets(scale: float, w: float):
    s = scale
    return (
        # most-extended first; the widened step has the longest reach
        _make("forward", [(0.40 * s, w + 0.05, 0), (0.40 * s, w, 0), (0.30 * s, w, 0), (0.20 * s, w, 0)]),
        _make("diag_left", [(0.32 * s, w + 0.06, 15), (0.28 * s, w + 0.05, 10),
                            (0.20 * s, w + 0.03, 10), (0.10 * s, w + 0.02, 5)]),
        _make("diag_right", [(0.32 * s, w - 0.05, -15), (0.28 * s, w - 0.04, -10),
                             (0.20 * s, w - 0.03, -10), (0.10 * s, w - 0.02, -5)]),
        _make("side_left", [(0.0, w + 0.10, 0), (0.0, w + 0.07, 0), (0.0, w + 0.04, 0)], sidestep=True),
        _make("side_right", [(0.0, w - 0.07, 0), (0.0, w - 0.05, 0), (0.0, w - 0.03, 0)], sidestep=True),
        # full-yaw turns; the wider stance is a fallback when the nominal foothold is blocked
        _make("rotate_left", [(0.0, w, 15), (0.0, w + 0.04, 15)], rotate_in_place=True),
        _make("rotate_right", [(0.0, w, -15), (0.0, w + 0.04, -15)], rotate_in_place=True),
    )


def sim_profile() -> ActionProfile:
    """Simulated-robot limits: 0.40 m step, width 0.18-0.35 m, 15 deg yaw."""
    return ActionProfile("sim", 0.40, 0.18, 0.35, 0.25, math.radians(15.0), _default_subsets(1.0, 0.25))


def real_profile() -> ActionProfile:
    """Hardware limits: 0.30 m step, width 0.18-0.35 m, 15 deg yaw."""
    return ActionProfile("real", 0.30, 0.18, 0.35, 0.25, math.radians(15.0), _default_subsets(0.75, 0.25))


PROFILES: dict[str, Callable[[], ActionProfile]] = {"sim": sim_profile, "real": real_profile}


def get_profile(name: str) -> ActionProfile:
    try:
        return PROFILES[name]()
    except KeyError:
        raise ValueError(f"unknown action profile {name!r}; choose from {sorted(PROFILES)}") from None


def selection_key(action: FootstepAction, p: EnergyParams, nominal_width: float):
    """Sort key for min-COT selection: COT, then longer step, then smaller yaw.

    Rotate-in-place candidates, and any candidate whose COT is undefined,
    are ranked by raw step energy.
    """
    geom = action.geometry(nominal_width)
    if action.rotate_in_place:
        score = step_energy(geom, p)
    else:
        try:
            score = cot(geom, p)
        except UndefinedCOT:
            score = step_energy(geom, p)
    return (score, -geom.length, abs(action.dtheta))


def ordered_subsets(profile: ActionProfile, stance: Side, p: EnergyParams, selection: str = "min-cot"):
    """Per-subset candidate lists in the order they should be tried."""
    out = []
    for sid, cands in profile.subsets_for(stance):
        if selection == "min-cot":
            cands = tuple(sorted(cands, key=lambda a: selection_key(a, p, profile.w_nominal)))
        elif selection != "farthest":
            raise ValueError(f"unknown selection rule {selection!r}")
        out.append((sid, cands))
    return out


def adaptive_set(
    state: FootState,
    feasible: Callable[[FootstepAction], bool],
    p: EnergyParams,
    profile: ActionProfile,
    selection: str = "min-cot",
    ordered: Sequence | None = None,
) -> list[FootstepAction]:
    """One action per subset: the best-ranked candidate that passes ``feasible``.

    With ``selection="min-cot"`` the best candidate is the feasible one with the
    lowest COT; with ``"farthest"`` it is the first feasible one in table order.
    """
    if ordered is None:
        ordered = ordered_subsets(profile, state.side, p, selection)
    chosen = []
    for _, cands in ordered:
        for a in cands:
            if feasible(a):
                chosen.append(a)
                break
    return chosen


def full_set(state: FootState, profile: ActionProfile) -> list[FootstepAction]:
    return [a for _, cands in profile.subsets_for(state.side) for a in cands]


def action_from_row(row: Iterable, subset_id: str) -> FootstepAction:
    dx, dy, dtheta, *flags = row
    return FootstepAction(
        float(dx), float(dy), float(dtheta), subset_id,
        sidestep="sidestep" in flags, rotate_in_place="rotate" in flags,
    )
