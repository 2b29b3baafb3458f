"""Human-locomotion energy model, cost of transport and the goal heuristic.

Every energy is in Joules and carries the ``m * g`` prefactor, so scaling
mass or gravity rescales all costs without moving any argmin.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

from .geometry import FootState, GoalSpec, wrap_angle

DISPLACEMENT_EPSILON = 1e-4


class UndefinedCOT(ValueError):
    """Raised when cost of transport is requested for a (near) zero displacement."""


@dataclass(frozen=True)
class EnergyParams:
    A: float = 44.0
    B: float = 0.2112
    C: float = 4.0
    D: float = 0.2
    E: float = 0.23  # tabulated with the others; no cost term uses it
    F: float = 0.4
    mass: float = 80.0
    gravity: float = 9.81
    side_penalty_multiplier: float = 10.0
    step_time: float = 1.0
    yaw_inertia: float = 0.1

    def __post_init__(self):
        for name in ("A", "C", "D", "F", "mass", "gravity", "step_time"):
            if not getattr(self, name) > 0:
                raise ValueError(f"EnergyParams.{name} must be positive")
        if self.B < 0 or self.side_penalty_multiplier < 0 or self.yaw_inertia < 0:
            raise ValueError("EnergyParams.B, side_penalty_multiplier and yaw_inertia must be >= 0")

    @property
    def mg(self) -> float:
        return self.mass * self.gravity


@dataclass(frozen=True)
class StepGeometry:
    """Step length, lateral foot distance and yaw change of a single footstep."""

    length: float
    width: float = 0.0
    yaw: float = 0.0
    sidestep: bool = False

    def __post_init__(self):
        if self.length < 0 or self.width < 0:
            raise ValueError("step length and width are magnitudes (>= 0)")
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))


def length_energy(length: float, p: EnergyParams) -> float:
    return p.mg * (p.A * length**4 + p.B * length + p.C)


def step_energy(geom: StepGeometry, p: EnergyParams) -> float:
    mg = p.mg
    energy = length_energy(geom.length, p) + mg * p.D * geom.width**2 + mg * p.F * geom.yaw**2
    if geom.sidestep:
        energy += mg * p.side_penalty_multiplier * p.C
    return energy


def cot(geom: StepGeometry, p: EnergyParams) -> float:
    if geom.length <= DISPLACEMENT_EPSILON:
        raise UndefinedCOT(f"cost of transport undefined for displacement {geom.length:g} m")
    return step_energy(geom, p) / (p.mg * geom.length)


def optimal_straight_step(p: EnergyParams, l_max: float, xtol: float = 1e-6) -> tuple[float, float]:
    """Step length minimising straight-walking COT on (0, l_max], and that minimum."""
    if l_max <= 0:
        raise ValueError("l_max must be positive")

    def straight_cot(l):
        return (p.A * l**4 + p.B * l + p.C) / l

    res = optimize.minimize_scalar(
        straight_cot, bounds=(DISPLACEMENT_EPSILON, l_max), method="bounded",
        options={"xatol": xtol * 0.1},
    )
    l_opt, alpha = float(res.x), float(res.fun)
    # bounded Brent stops xatol short of an active bound
    if straight_cot(l_max) <= alpha:
        l_opt, alpha = float(l_max), float(straight_cot(l_max))
    return l_opt, alpha


@dataclass(frozen=True)
class StepCountPolicy:
    """Lower bound on the number of steps left, used to split the heading error."""

    l_max: float = 0.40
    dtheta_max: float = math.radians(15.0)
    nominal_width: float = 0.25
    fixed_n: int | None = None

    def steps(self, distance: float, dtheta: float) -> int:
        if self.fixed_n is not None:
            return max(1, self.fixed_n)
        return max(
            1,
            math.ceil(distance / self.l_max - 1e-12),
            math.ceil(abs(dtheta) / self.dtheta_max - 1e-12),
        )


def goal_offsets(state: FootState, goal: GoalSpec, nominal_width: float) -> tuple[float, float]:
    """Distance from the body reference point to the goal disk and the heading error.

    The goal test accepts any point inside ``goal.radius``, so the distance is
    measured to the disk edge; measuring to its center would overestimate.
    """
    cx, cy = state.center(nominal_width)
    dist = math.hypot(goal.x - cx, goal.y - cy)
    if dist > goal.radius:
        dtheta = wrap_angle(math.atan2(goal.y - cy, goal.x - cx) - state.theta)
    elif goal.heading is not None:
        dtheta = wrap_angle(goal.heading - state.theta)
    else:
        dtheta = 0.0
    return max(dist - goal.radius, 0.0), dtheta


def heuristic(
    state: FootState,
    goal: GoalSpec,
    p: EnergyParams,
    policy: StepCountPolicy,
    alpha: float,
    use_angle: bool = True,
) -> float:
    dist, dtheta = goal_offsets(state, goal, policy.nominal_width)
    h = alpha * p.mg * dist
    if use_angle and dtheta != 0.0:
        h += p.mg * p.F * dtheta**2 / policy.steps(dist, dtheta)
    return h


def yaw_trajectory_energy(theta_des: float, step_time: float, yaw_inertia: float, n: int = 4000) -> float:
    """Actuator energy of a single-inertia yaw move along a cosine velocity profile.

    Integrates ``|I * a(t) * v(t)|`` over one step with the peak speed chosen
    so the yaw reaches ``theta_des`` at ``step_time``. Composite Simpson on
    ``n`` intervals; ``n`` is rounded up to a multiple of 4 so the |.| kink at
    mid-step lands on a panel boundary.
    """
    if step_time <= 0:
        raise ValueError("step_time must be positive")
    n = max(4, -(-n // 4) * 4)
    v_m = theta_des / step_time
    t = np.linspace(0.0, step_time, n + 1)
    phase = 2.0 * np.pi * t / step_time
    vel = v_m * (1.0 - np.cos(phase))
    acc = 2.0 * np.pi * v_m / step_time * np.sin(phase)
    return float(integrate.simpson(np.abs(yaw_inertia * acc * vel), x=t))


def yaw_trajectory_energy_closed_form(theta_des: float, step_time: float, yaw_inertia: float) -> float:
    return 4.0 * yaw_inertia * theta_des**2 / step_time**2
