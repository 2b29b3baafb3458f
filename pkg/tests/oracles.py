"""Independent reference computations used by the tests.

Nothing here calls the planner. Pose composition, mirroring and the goal
test are re-derived from scratch; only feasibility checks and the per-step
energy formula are shared with the package (both have their own tests).
"""
from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass

import numpy as np

from footplan.energy import EnergyParams, StepGeometry, step_energy
from footplan.geometry import Side


# ---------------------------------------------------------------------------
# energy


def hand_step_energy(l, w=0.0, yaw=0.0, sidestep=False, A=44.0, B=0.2112, C=4.0, D=0.2, F=0.4, m=80.0, g=9.81):
    e = m * g * (A * l**4 + B * l + C) + m * g * D * w**2 + m * g * F * yaw**2
    return e + (m * g * 10 * C if sidestep else 0.0)


def grid_scan_optimum(A=44.0, B=0.2112, C=4.0, l_max=0.4, step=1e-4):
    ls = np.arange(step, l_max + step / 2, step)
    c = (A * ls**4 + B * ls + C) / ls
    i = int(np.argmin(c))
    return float(ls[i]), float(c[i])


def min_square_split(n_parts: int, units: int, allow_negative: int = 0) -> int:
    """Smallest sum of squares over integer splits of ``units`` into ``n_parts``.

    Parts may go down to ``-allow_negative``. Plain enumeration over bar
    positions (stars and bars).
    """
    total = units + n_parts * allow_negative
    best = None
    for bars in itertools.combinations(range(total + n_parts - 1), n_parts - 1):
        edges = (-1,) + bars + (total + n_parts - 1,)
        parts = [edges[i + 1] - edges[i] - 1 - allow_negative for i in range(n_parts)]
        s = sum(p * p for p in parts)
        if best is None or s < best:
            best = s
    return best


# ---------------------------------------------------------------------------
# exhaustive footstep search


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    theta: float
    side: str  # stance foot, "left" or "right"


def _wrap(a):
    a = math.remainder(a, 2 * math.pi)
    return a + 2 * math.pi if a <= -math.pi else a


def step(pose: Pose, dx, dy, dth) -> Pose:
    """Place the swing foot; (dx, dy, dth) are written for a left swing foot."""
    if pose.side == "left":  # swing foot is the right one: reflect
        dy, dth = -dy, -dth
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return Pose(
        pose.x + c * dx - s * dy,
        pose.y + s * dx + c * dy,
        _wrap(pose.theta + dth),
        "right" if pose.side == "left" else "left",
    )


def body_center(pose: Pose, width: float):
    # the other foot sits to the right of a left stance foot
    off = -0.5 * width if pose.side == "left" else 0.5 * width
    return pose.x - off * math.sin(pose.theta), pose.y + off * math.cos(pose.theta)


def exhaustive_optimum(start: Pose, start_other: Pose, actions, goal_xy, goal_radius, depth, width,
                       params: EnergyParams, checker=None):
    """Cheapest cost of any action sequence of at most ``depth`` steps that
    first enters the goal disk; returns (cost, sequence) or (inf, None).

    ``actions`` are (dx, dy, dth, flags) rows written for a left swing foot.
    """
    costs = []
    for dx, dy, dth, flags in actions:
        # step length is the body-center travel
        half = 0.5 * width
        ox = half * math.sin(dth)
        oy = -half * math.cos(dth)
        ddx, ddy = dx + ox, dy + oy - half
        costs.append(step_energy(StepGeometry(math.hypot(ddx, ddy), abs(dy), dth, "sidestep" in flags), params))

    def at_goal(p):
        cx, cy = body_center(p, width)
        return math.hypot(goal_xy[0] - cx, goal_xy[1] - cy) < goal_radius

    best = [math.inf, None]

    def feasible(stance, other, new):
        if checker is None:
            return True
        ref = checker.height_at(stance.x, stance.y)
        if math.isnan(ref):
            ref = 0.0
        if not checker.foothold((new.x, new.y, new.theta), ref):
            return False
        return checker.body((stance.x, stance.y, stance.theta), (other.x, other.y, other.theta),
                            (new.x, new.y, new.theta), ref)

    def dfs(stance, other, g, seq):
        if g >= best[0]:
            return
        if at_goal(stance):
            best[0], best[1] = g, list(seq)
            return
        if len(seq) == depth:
            return
        for i, (dx, dy, dth, _) in enumerate(actions):
            new = step(stance, dx, dy, dth)
            if feasible(stance, other, new):
                seq.append(i)
                dfs(new, stance, g + costs[i], seq)
                seq.pop()

    dfs(start, start_other, 0.0, [])
    return best[0], best[1], min(costs)


def serialize_instance(**kw) -> str:
    def default(o):
        if isinstance(o, Side):
            return o.value
        if hasattr(o, "__dict__"):
            return o.__dict__
        return str(o)

    return json.dumps(kw, default=default, sort_keys=True)
