"""Kinematic replanning loop: step counters, preview windows and stale-plan fallback.

One tick is one footstep and one planning cycle. A plan requested at the end
of tick ``k`` is stamped with the robot step number at that moment and becomes
available ``ceil(iterations / iteration_budget)`` ticks later. The walker only
follows a plan whose stamp equals its current step number; anything else is
stale and the robot steps in place.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

from .actions import oriented, step_in_place, successor
from .energy import step_energy
from .feasibility import FeasibilityChecker
from .geometry import FootState
from .planner import PlanResult, PlanStatus, plan
from .scenario import Scenario, apply_event
from .worldmap import ElevationMap, filter_chain, update_region

PREVIEW_STEPS = 3


class Decision(str, enum.Enum):
    USE_PLAN = "UsePlan"
    STEP_IN_PLACE = "StepInPlace"


def sync_check(robot_step_number: int, plan_step_number: int | None, result: PlanResult | None,
               swing_side=None) -> Decision:
    if result is None or plan_step_number is None:
        return Decision.STEP_IN_PLACE
    if robot_step_number != plan_step_number or result.status is not PlanStatus.SUCCESS:
        return Decision.STEP_IN_PLACE
    if len(result.footsteps) < 2:
        return Decision.STEP_IN_PLACE
    if swing_side is not None and result.footsteps[1].side is not swing_side:
        return Decision.STEP_IN_PLACE
    return Decision.USE_PLAN


def in_place_pose(stance: FootState, nominal_width: float) -> FootState:
    return successor(stance, oriented(step_in_place(nominal_width), stance.side))


def preview_window(result: PlanResult | None, nominal_width: float = 0.25) -> list[FootState]:
    """The next three footsteps of ``result``, padded with steps in place."""
    if result is None or not result.success or not result.footsteps:
        return []
    window = list(result.footsteps[1:PREVIEW_STEPS + 1])
    last = result.footsteps[len(window)]
    while len(window) < PREVIEW_STEPS:
        last = in_place_pose(last, nominal_width)
        window.append(last)
    return window


def padded_window(result: PlanResult | None, stance: FootState, nominal_width: float = 0.25) -> list[FootState]:
    """Like :func:`preview_window` but also covers missing or failed plans."""
    window = preview_window(result, nominal_width)
    last = stance
    while len(window) < PREVIEW_STEPS:
        last = in_place_pose(last, nominal_width)
        window.append(last)
    return window


@dataclass
class PlanRequest:
    step_number: int
    issued: int
    ready: int
    result: PlanResult


@dataclass(frozen=True)
class TickRecord:
    clock: int
    step_number: int  # after the step
    decision: Decision
    reason: str
    pose: FootState
    plan_status: str
    iterations: int
    plan_step_number: int | None
    feasible: bool
    energy: float


TICK_FIELDS = ("clock", "step_number", "decision", "reason", "side", "x", "y", "theta",
               "plan_status", "iterations", "plan_step_number", "feasible", "energy")


@dataclass
class SimState:
    stance: FootState
    swing: FootState
    emap: ElevationMap
    primitives: list
    robot_step_number: int = 0
    clock: int = 0
    requests: list[PlanRequest] = field(default_factory=list)
    latest: PlanRequest | None = None
    applied_events: int = 0
    log: list[TickRecord] = field(default_factory=list)
    stale_run: int = 0
    max_stale_run: int = 0
    reached: bool = False
    planner_iterations: int = 0
    planner_expansions: int = 0


class ReplanSimulator:
    """Drives a scenario through the planner/walker loop."""

    def __init__(self, scenario: Scenario, planner_config=None, iteration_budget: int | None = None):
        self.scenario = scenario
        self.config = planner_config or scenario.planner
        self.budget = iteration_budget or scenario.sim.iteration_budget
        if self.budget <= 0:
            raise ValueError("iteration_budget must be positive")
        self.profile = scenario.action_profile()
        self.width = self.profile.w_nominal
        self._in_place_energy = step_energy(step_in_place(self.width).geometry(self.width), scenario.energy)
        self.events = sorted(scenario.events, key=lambda e: e.step)
        emap = filter_chain(scenario.build_map(), scenario.avg_radius)
        self.state = SimState(scenario.start, scenario.swing, emap, list(scenario.primitives))
        self._checker = FeasibilityChecker(emap, scenario.feasibility)
        self._request(issued=-1)

    # -- internals --------------------------------------------------------
    def _plan(self) -> PlanResult:
        s = self.state
        sc = self.scenario
        return plan(s.stance, s.swing, sc.goal, s.emap, sc.energy, self.profile, sc.feasibility,
                    self.config, checker=self._checker)

    def _request(self, issued: int) -> None:
        s = self.state
        result = self._plan()
        s.planner_iterations += result.iterations
        s.planner_expansions += result.expansions
        latency = max(1, math.ceil(result.iterations / self.budget))
        s.requests.append(PlanRequest(s.robot_step_number, issued, issued + latency, result))

    def _apply_events(self) -> None:
        s = self.state
        sc = self.scenario
        changed = []
        while s.applied_events < len(self.events) and self.events[s.applied_events].step <= s.robot_step_number:
            ev = self.events[s.applied_events]
            old = {p.id: p for p in s.primitives}
            s.primitives = apply_event(s.primitives, ev)
            if ev.primitive_id in old:
                changed.append(old[ev.primitive_id])
            if ev.kind == "insert":
                changed.append(ev.primitive)
            s.applied_events += 1
        if changed:
            s.emap = update_region(s.emap, s.primitives, changed, sc.grid, sc.seed)
            self._checker = FeasibilityChecker(s.emap, sc.feasibility)

    def _feasible(self, new: FootState) -> bool:
        s = self.state
        ref = self._checker.height_at(s.stance.x, s.stance.y)
        if math.isnan(ref):
            return False
        pose = (new.x, new.y, new.theta)
        return self._checker.foothold(pose, ref) and self._checker.body(
            (s.stance.x, s.stance.y, s.stance.theta), (s.swing.x, s.swing.y, s.swing.theta), pose, ref
        )

    def at_goal(self) -> bool:
        g = self.scenario.goal
        cx, cy = self.state.stance.center(self.width)
        return math.hypot(g.x - cx, g.y - cy) < g.radius

    # -- public -----------------------------------------------------------
    def tick(self) -> TickRecord:
        s = self.state
        self._apply_events()
        arrived = [r for r in s.requests if r.ready <= s.clock]
        if arrived:
            newest = max(arrived, key=lambda r: r.issued)
            if s.latest is None or newest.issued > s.latest.issued:
                s.latest = newest
            s.requests = [r for r in s.requests if r.ready > s.clock]
        latest = s.latest
        result = latest.result if latest else None
        stamp = latest.step_number if latest else None
        decision = sync_check(s.robot_step_number, stamp, result, s.stance.side.other)
        if decision is Decision.USE_PLAN:
            target, reason = result.footsteps[1], "synced"
            energy = result.g[1] - result.g[0]
        else:
            if result is None:
                reason = "no_plan"
            elif stamp != s.robot_step_number:
                reason = "stale"
            else:
                reason = "failed"
            target = None
        if target is not None and not self._feasible(target):
            decision, reason, target = Decision.STEP_IN_PLACE, "unsafe", None
        if target is None:
            energy = self._in_place_energy
            target = in_place_pose(s.stance, self.width)
            if not self._feasible(target):
                # put the swing foot back down where it already is
                target = s.swing
        ok = self._feasible(target) or target == s.swing
        target = FootState(target.x, target.y, target.theta, s.stance.side.other, s.robot_step_number + 1)
        s.swing, s.stance = s.stance, target
        s.robot_step_number += 1
        s.stale_run = s.stale_run + 1 if reason == "stale" else 0
        s.max_stale_run = max(s.max_stale_run, s.stale_run)
        rec = TickRecord(
            s.clock, s.robot_step_number, decision, reason, target,
            result.status.value if result else "None", result.iterations if result else 0, stamp, ok, energy,
        )
        s.log.append(rec)
        s.reached = self.at_goal()
        if not s.reached:
            self._request(issued=s.clock)
        s.clock += 1
        return rec

    def run(self, max_ticks: int | None = None) -> "SimResult":
        limit = max_ticks or self.scenario.sim.max_ticks
        self.state.reached = self.at_goal()
        while not self.state.reached and self.state.clock < limit:
            self.tick()
        s = self.state
        return SimResult(s.reached, s.clock, list(s.log), s.max_stale_run, s.emap,
                         s.planner_iterations, s.planner_expansions)


@dataclass
class SimResult:
    reached: bool
    ticks: int
    log: list[TickRecord]
    max_stale_run: int
    final_map: ElevationMap
    planner_iterations: int = 0
    planner_expansions: int = 0

    @property
    def executed(self) -> list[FootState]:
        return [r.pose for r in self.log]

    @property
    def total_energy(self) -> float:
        return sum(r.energy for r in self.log)

    @property
    def planned_steps(self) -> int:
        return sum(r.decision is Decision.USE_PLAN for r in self.log)


def simulate(scenario: Scenario, planner_config=None, iteration_budget: int | None = None,
             max_ticks: int | None = None) -> SimResult:
    return ReplanSimulator(scenario, planner_config, iteration_budget).run(max_ticks)


def log_to_csv(log: list[TickRecord], path=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TICK_FIELDS)
    for r in log:
        w.writerow([
            r.clock, r.step_number, r.decision.value, r.reason, r.pose.side.value,
            f"{r.pose.x:.6f}", f"{r.pose.y:.6f}", f"{r.pose.theta:.6f}",
            r.plan_status, r.iterations, "" if r.plan_step_number is None else r.plan_step_number,
            int(r.feasible), f"{r.energy:.6f}",
        ])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text
