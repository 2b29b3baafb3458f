"""Best-first footstep search with adaptive action sets and energy costs."""
from __future__ import annotations

import csv
import enum
import heapq
import io
import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .actions import (
    ActionProfile,
    FootstepAction,
    get_profile,
    ordered_subsets,
    successor,
)
from .energy import EnergyParams, StepCountPolicy, heuristic, optimal_straight_step, step_energy
from .feasibility import FeasibilityChecker, FeasibilityConfig
from .geometry import FootState, GoalSpec, Side
from .worldmap import ElevationMap, filter_chain

HEURISTICS = ("distance+angle", "distance", "zero")


class PlanStatus(str, enum.Enum):
    SUCCESS = "Success"
    ITERATION_LIMIT = "IterationLimit"
    DEAD_END = "DeadEnd"
    CANCELLED = "Cancelled"


@dataclass(frozen=True)
class PenaltyConfig:
    """Obstacle-proximity penalty added to the heuristic.

    ``weight`` and ``reverse_rotation_penalty`` are expressed in multiples of
    the per-step constant ``m*g*C`` (weight per metre of intrusion).
    """

    enabled: bool = True
    check_dist: float = 0.5
    weight: float = 10.0
    rotate_relief: float = 0.25
    reverse_rotation_penalty: float = 4.0

    def __post_init__(self):
        if self.check_dist <= 0 or self.weight < 0 or self.reverse_rotation_penalty < 0:
            raise ValueError("penalty check_dist must be positive and weights non-negative")
        if not 0.0 <= self.rotate_relief <= 1.0:
            raise ValueError("rotate_relief must lie in [0, 1]")


@dataclass(frozen=True)
class PlannerConfig:
    goal_radius: float = 0.15
    max_iterations: int = 2000
    heuristic: str = "distance+angle"
    selection: str = "min-cot"
    action_mode: str = "adaptive"  # or "full"
    near_goal_radius: float | None = None  # default 2 * l_max
    dedup_xy: float | None = 0.05
    dedup_theta: float | None = math.radians(5.0)
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    step_count: int | None = None  # fixed N for the heading term; None = lower-bound policy
    trace: bool = False

    def __post_init__(self):
        if self.goal_radius <= 0:
            raise ValueError("goal_radius must be positive")
        if self.max_iterations <= 0:
            raise ValueError("max_iterations must be positive")
        if self.heuristic not in HEURISTICS:
            raise ValueError(f"heuristic must be one of {HEURISTICS}")
        if self.selection not in ("min-cot", "farthest"):
            raise ValueError("selection must be 'min-cot' or 'farthest'")
        if self.action_mode not in ("adaptive", "full"):
            raise ValueError("action_mode must be 'adaptive' or 'full'")


@dataclass(slots=True)
class SearchNode:
    id: int
    state: FootState
    other: FootState  # the foot that swings next
    g: float
    h: float
    parent: int | None
    action: FootstepAction | None
    penalty: float = 0.0

    @property
    def f(self) -> float:
        return self.g + self.h


@dataclass
class PlanResult:
    footsteps: list[FootState]
    actions: list[FootstepAction]
    g: list[float]
    h: list[float]
    total_cost: float
    iterations: int
    expansions: int
    status: PlanStatus
    trace: list[tuple] | None = None

    @property
    def success(self) -> bool:
        return self.status is PlanStatus.SUCCESS

    @property
    def n_steps(self) -> int:
        return max(len(self.footsteps) - 1, 0)

    def records(self) -> list[dict]:
        return [
            {
                "step_index": i,
                "side": s.side.value,
                "x": s.x,
                "y": s.y,
                "theta": s.theta,
                "g": g,
                "h": h,
                "f": g + h,
            }
            for i, (s, g, h) in enumerate(zip(self.footsteps, self.g, self.h))
        ]


PLAN_FIELDS = ("step_index", "side", "x", "y", "theta", "g", "h", "f")


def plan_to_csv(result: PlanResult, path=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(PLAN_FIELDS)
    for rec in result.records():
        writer.writerow([rec["step_index"], rec["side"]] + [f"{rec[k]:.6f}" for k in PLAN_FIELDS[2:]])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def plan_to_json(result: PlanResult, path=None) -> str:
    doc = {
        "status": result.status.value,
        "total_cost": round(result.total_cost, 6),
        "iterations": result.iterations,
        "expansions": result.expansions,
        "footsteps": [{k: (round(v, 6) if isinstance(v, float) else v) for k, v in r.items()} for r in result.records()],
    }
    text = json.dumps(doc, indent=2) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


def trace_to_csv(result: PlanResult, path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(("iteration", "node", "x", "y", "theta", "side", "g", "h", "f"))
        for row in result.trace or []:
            writer.writerow(row)


def reconstruct(node: SearchNode, arena: Sequence[SearchNode]) -> list[SearchNode]:
    """Walk parent links back to the root; returns root-first node list."""
    chain = [node]
    while chain[-1].parent is not None:
        chain.append(arena[chain[-1].parent])
    chain.reverse()
    return chain


def _rotation_sign(action: FootstepAction | None) -> int:
    if action is None or not action.rotate_in_place or action.dtheta == 0:
        return 0
    return 1 if action.dtheta > 0 else -1


def obstacle_penalty(
    state: FootState,
    action: FootstepAction | None,
    previous_action: FootstepAction | None,
    checker: FeasibilityChecker | None,
    penalty: PenaltyConfig,
    params: EnergyParams,
    nominal_width: float,
) -> float:
    """Heuristic surcharge for states facing a nearby tall obstacle."""
    if not penalty.enabled or checker is None:
        return 0.0
    unit = params.mg * params.C
    cx, cy = state.center(nominal_width)
    d_obs = checker.ray((cx, cy), state.theta, penalty.check_dist)
    p = 0.0
    if d_obs is not None and d_obs < penalty.check_dist:
        p = penalty.weight * unit * (penalty.check_dist - d_obs)
    rot = _rotation_sign(action)
    if rot:
        prev = _rotation_sign(previous_action)
        if prev and prev != rot:
            p += penalty.reverse_rotation_penalty * unit
        else:
            p *= penalty.rotate_relief
    return max(p, 0.0)


def penalized_h(
    state: FootState,
    action: FootstepAction | None,
    previous_action: FootstepAction | None,
    goal: GoalSpec,
    checker: FeasibilityChecker | None,
    params: EnergyParams,
    policy: StepCountPolicy,
    alpha: float,
    penalty: PenaltyConfig,
    use_angle: bool = True,
) -> float:
    h = heuristic(state, goal, params, policy, alpha, use_angle)
    return h + obstacle_penalty(state, action, previous_action, checker, penalty, params, policy.nominal_width)


class _DedupKey:
    def __init__(self, xy: float | None, theta: float | None):
        self.xy = xy or 1e-6
        self.theta = theta or 1e-6

    def __call__(self, s: FootState):
        return (
            round(s.x / self.xy),
            round(s.y / self.xy),
            round(s.theta / self.theta) % max(1, round(2 * math.pi / self.theta)),
            s.side,
        )


def plan(
    start: FootState,
    start_swing: FootState,
    goal: GoalSpec,
    emap: ElevationMap | None,
    params: EnergyParams | None = None,
    profile: ActionProfile | None = None,
    feasibility: FeasibilityConfig | None = None,
    config: PlannerConfig | None = None,
    cancel: Callable[[], bool] | None = None,
    checker: FeasibilityChecker | None = None,
) -> PlanResult:
    """A* over stance-foot states.

    ``emap=None`` plans in free space (every step feasible, no penalty).
    ``start_swing`` is the pose of the foot that swings first.
    """
    params = params or EnergyParams()
    profile = profile or get_profile("sim")
    config = config or PlannerConfig()
    if checker is None and emap is not None:
        checker = FeasibilityChecker(emap, feasibility)
    if goal.radius != config.goal_radius:
        goal = replace(goal, radius=config.goal_radius)

    w_nom = profile.w_nominal
    policy = StepCountPolicy(profile.l_max, profile.dtheta_max, w_nom, config.step_count)
    _, alpha = optimal_straight_step(params, profile.l_max)
    use_h = config.heuristic != "zero"
    use_angle = config.heuristic == "distance+angle"
    near_goal = config.near_goal_radius if config.near_goal_radius is not None else 2.0 * profile.l_max
    penalty = config.penalty

    ordered = {
        side: ordered_subsets(profile, side, params, config.selection) for side in (Side.LEFT, Side.RIGHT)
    }
    full = {side: [a for _, c in profile.subsets_for(side) for a in c] for side in (Side.LEFT, Side.RIGHT)}
    # per-action energies are state independent
    energy_cache: dict[FootstepAction, float] = {}

    def energy(a: FootstepAction) -> float:
        e = energy_cache.get(a)
        if e is None:
            e = energy_cache[a] = step_energy(a.geometry(w_nom), params)
        return e

    def h_of(state, action, prev_action):
        if not use_h:
            return 0.0, 0.0
        h = heuristic(state, goal, params, policy, alpha, use_angle)
        p = obstacle_penalty(state, action, prev_action, checker, penalty, params, w_nom)
        return h + p, p

    def feasible(node: SearchNode, succ: FootState, ref: float) -> bool:
        if checker is None:
            return True
        if not checker.foothold((succ.x, succ.y, succ.theta), ref):
            return False
        return checker.body(
            (node.state.x, node.state.y, node.state.theta),
            (node.other.x, node.other.y, node.other.theta),
            (succ.x, succ.y, succ.theta),
            ref,
        )

    key_of = _DedupKey(config.dedup_xy, config.dedup_theta)
    start = start.with_index(0)
    h0, p0 = h_of(start, None, None)
    root = SearchNode(0, start, start_swing, 0.0, h0, None, None, p0)
    arena: list[SearchNode] = [root]
    best_g: dict = {key_of(start): 0.0}
    counter = 0
    open_list: list[tuple[float, float, int, int]] = [(root.f, root.g, counter, root.id)]
    iterations = expansions = 0
    trace = [] if config.trace else None

    def result(node: SearchNode | None, status: PlanStatus) -> PlanResult:
        chain = reconstruct(node, arena) if node is not None else []
        return PlanResult(
            footsteps=[n.state for n in chain],
            actions=[n.action for n in chain[1:]],
            g=[n.g for n in chain],
            h=[n.h for n in chain],
            total_cost=node.g if node is not None else math.inf,
            iterations=iterations,
            expansions=expansions,
            status=status,
            trace=trace,
        )

    while open_list:
        if iterations >= config.max_iterations:
            return result(None, PlanStatus.ITERATION_LIMIT)
        if cancel is not None and cancel():
            return result(None, PlanStatus.CANCELLED)
        _, g, _, nid = heapq.heappop(open_list)
        node = arena[nid]
        if g > best_g.get(key_of(node.state), math.inf):
            continue  # superseded by a cheaper duplicate
        iterations += 1
        if trace is not None:
            s = node.state
            trace.append((iterations, nid, s.x, s.y, s.theta, s.side.value, node.g, node.h, node.f))

        cx, cy = node.state.center(w_nom)
        dist = math.hypot(goal.x - cx, goal.y - cy)
        if dist < goal.radius:
            return result(node, PlanStatus.SUCCESS)

        side = node.state.side
        ref = checker.height_at(node.state.x, node.state.y) if checker is not None else 0.0
        if math.isnan(ref):
            ref = 0.0
        if config.action_mode == "full" or dist < near_goal:
            actions = []
            for a in full[side]:
                succ = successor(node.state, a)
                if feasible(node, succ, ref):
                    actions.append((a, succ))
        else:
            actions = []
            for _, cands in ordered[side]:
                for a in cands:
                    succ = successor(node.state, a)
                    if feasible(node, succ, ref):
                        actions.append((a, succ))
                        break

        for a, succ in actions:
            g_child = node.g + energy(a)
            k = key_of(succ)
            if g_child >= best_g.get(k, math.inf) - 1e-9:
                continue
            best_g[k] = g_child
            h, p = h_of(succ, a, node.action)
            child = SearchNode(len(arena), succ, node.state, g_child, h, nid, a, p)
            arena.append(child)
            counter += 1
            heapq.heappush(open_list, (child.f, child.g, counter, child.id))
            expansions += 1

    return result(None, PlanStatus.DEAD_END)


class FootstepPlanner(BaseEstimator):
    """Estimator-style front end: ``fit`` binds a terrain map, ``predict`` plans.

    ``fit`` filters an unfiltered map with ``avg_radius`` and precomputes the
    straight-walking COT bound used by the heuristic.
    """

    def __init__(
        self,
        profile="sim",
        selection="min-cot",
        heuristic="distance+angle",
        penalty=True,
        max_iterations=2000,
        goal_radius=0.15,
        action_mode="adaptive",
        near_goal_radius=None,
        dedup_xy=0.05,
        dedup_theta_deg=5.0,
        avg_radius=0.1,
        energy_params=None,
        feasibility_config=None,
        penalty_config=None,
        trace=False,
    ):
        self.profile = profile
        self.selection = selection
        self.heuristic = heuristic
        self.penalty = penalty
        self.max_iterations = max_iterations
        self.goal_radius = goal_radius
        self.action_mode = action_mode
        self.near_goal_radius = near_goal_radius
        self.dedup_xy = dedup_xy
        self.dedup_theta_deg = dedup_theta_deg
        self.avg_radius = avg_radius
        self.energy_params = energy_params
        self.feasibility_config = feasibility_config
        self.penalty_config = penalty_config
        self.trace = trace

    def _profile(self) -> ActionProfile:
        return self.profile if isinstance(self.profile, ActionProfile) else get_profile(self.profile)

    def planner_config(self) -> PlannerConfig:
        pen = self.penalty_config or PenaltyConfig()
        pen = replace(pen, enabled=bool(self.penalty))
        return PlannerConfig(
            goal_radius=self.goal_radius,
            max_iterations=self.max_iterations,
            heuristic=self.heuristic,
            selection=self.selection,
            action_mode=self.action_mode,
            near_goal_radius=self.near_goal_radius,
            dedup_xy=self.dedup_xy,
            dedup_theta=None if self.dedup_theta_deg is None else math.radians(self.dedup_theta_deg),
            penalty=pen,
            trace=self.trace,
        )

    def fit(self, X: ElevationMap | None, y=None):
        config = self.planner_config()  # validates parameters
        self.profile_ = self._profile()
        self.energy_params_ = self.energy_params or EnergyParams()
        if X is not None and not isinstance(X, ElevationMap):
            raise TypeError(f"expected an ElevationMap, got {type(X).__name__}")
        if X is not None and not X.is_filtered:
            X = filter_chain(X, self.avg_radius)
        self.map_ = X
        self.checker_ = None if X is None else FeasibilityChecker(X, self.feasibility_config)
        self.l_opt_, self.alpha_ = optimal_straight_step(self.energy_params_, self.profile_.l_max)
        self.config_ = config
        return self

    def plan(self, start: FootState, start_swing: FootState, goal: GoalSpec, cancel=None) -> PlanResult:
        check_is_fitted(self, "config_")
        return plan(
            start, start_swing, goal, self.map_, self.energy_params_, self.profile_,
            self.feasibility_config, self.config_, cancel=cancel, checker=self.checker_,
        )

    def predict(self, X):
        """Plan every ``(start, start_swing, goal)`` query in ``X``."""
        check_is_fitted(self, "config_")
        return [self.plan(*query) for query in X]

    def score(self, X, y=None) -> float:
        """Fraction of queries that produce a successful plan."""
        results = self.predict(X)
        return sum(r.success for r in results) / max(len(results), 1)
