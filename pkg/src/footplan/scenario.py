"""Scenario files: map extents, terrain primitives, start/goal and dynamic events.

The format is line based. ``#`` starts a comment. Quantities carry explicit
units (``m``, ``cm``, ``mm``, ``deg``, ``rad``, ``kg``, ``g``, ``s``, ``ms``,
``m/s2``, ``kg*m2``); dimensionless values are bare numbers.

    name = wall
    size = 6 m, 4 m
    origin = -1 m, -2 m
    resolution = 5 cm
    seed = 3
    start = 0 m, -12.5 cm, 0 deg, right
    swing = 0 m, 12.5 cm, 0 deg
    goal = 4 m, 0 m
    goal_heading = 0 deg
    planner.max_iterations = 2000
    box wall: center = 1.5 m, 0 m; size = 0.3 m, 2 m; height = 1 m
    event 4: insert box person: center = 2 m, 0 m; size = 0.4 m, 0.4 m; height = 1.7 m
    event 9: remove person
    action forward: 0.35 m, 25 cm, 0 deg

``action <subset>`` lines replace that subset's default candidate table; rows
accumulate in the order given and accept trailing ``sidestep``/``rotate`` flags.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

from .actions import FootstepAction, ActionProfile, get_profile
from .energy import EnergyParams
from .feasibility import FeasibilityConfig
from .geometry import FootState, GoalSpec, Side
from .planner import PenaltyConfig, PlannerConfig
from .worldmap import Box, ElevationMap, Grid, Hole, MapError, NoisePatch, Ramp, build_map, check_primitives

UNITS = {
    "length": {"m": 1.0, "cm": 0.01, "mm": 0.001},
    "angle": {"rad": 1.0, "deg": math.pi / 180.0},
    "mass": {"kg": 1.0, "g": 0.001},
    "time": {"s": 1.0, "ms": 0.001},
    "accel": {"m/s2": 1.0, "m/s^2": 1.0},
    "inertia": {"kg*m2": 1.0, "kg*m^2": 1.0},
}


class ScenarioError(ValueError):
    """Malformed scenario text; ``line`` is 1-based (0 when not tied to a line)."""

    def __init__(self, message: str, line: int = 0, source: str = "<scenario>"):
        self.line = line
        self.source = source
        where = f"{source}:{line}: " if line else f"{source}: "
        super().__init__(where + message)


@dataclass(frozen=True)
class Event:
    """Obstacle inserted (``primitive`` set) or removed (``target`` id) before step ``step``."""

    step: int
    kind: str
    primitive: Box | Ramp | NoisePatch | Hole | None = None
    target: str | None = None

    @property
    def primitive_id(self) -> str:
        return self.primitive.id if self.primitive is not None else self.target


@dataclass(frozen=True)
class SimSettings:
    iteration_budget: int = 2000  # planner iterations available per tick
    max_ticks: int = 200

    def __post_init__(self):
        if self.iteration_budget <= 0 or self.max_ticks <= 0:
            raise ValueError("sim iteration_budget and max_ticks must be positive")


@dataclass(frozen=True)
class Scenario:
    name: str
    grid: Grid
    primitives: tuple
    start: FootState
    swing: FootState
    goal: GoalSpec
    seed: int = 0
    events: tuple[Event, ...] = ()
    profile: str = "sim"
    energy: EnergyParams = field(default_factory=EnergyParams)
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    feasibility: FeasibilityConfig = field(default_factory=FeasibilityConfig)
    sim: SimSettings = field(default_factory=SimSettings)
    avg_radius: float = 0.1
    action_rows: tuple[tuple[str, tuple[FootstepAction, ...]], ...] = ()

    def __post_init__(self):
        check_primitives(self.primitives, self.grid)
        if self.start.side is self.swing.side:
            raise ValueError("start stance and swing feet must be on opposite sides")
        ids = [p.id for p in self.primitives]
        dup = {i for i in ids if ids.count(i) > 1}
        if dup:
            raise MapError(f"duplicate primitive ids: {sorted(dup)}")
        known = set(ids)
        for ev in self.events:
            if ev.kind == "insert":
                check_primitives([ev.primitive], self.grid)
                known.add(ev.primitive.id)
            elif ev.target not in known:
                raise MapError(f"event at step {ev.step} removes unknown primitive {ev.target!r}")

    def build_map(self) -> ElevationMap:
        return build_map(self)

    def action_profile(self) -> ActionProfile:
        prof = get_profile(self.profile)
        if not self.action_rows:
            return prof
        overrides = dict(self.action_rows)
        unknown = set(overrides) - {sid for sid, _ in prof.subsets}
        if unknown:
            raise ValueError(f"unknown action subsets {sorted(unknown)}")
        return prof.with_subsets([(sid, overrides.get(sid, cands)) for sid, cands in prof.subsets])

    def primitives_at(self, step: int) -> tuple:
        """Primitive list after applying every event with ``event.step <= step``."""
        prims = list(self.primitives)
        for ev in sorted(self.events, key=lambda e: e.step):
            if ev.step > step:
                break
            prims = apply_event(prims, ev)
        return tuple(prims)


def apply_event(primitives, event: Event) -> list:
    if event.kind == "insert":
        return [p for p in primitives if p.id != event.primitive.id] + [event.primitive]
    return [p for p in primitives if p.id != event.target]


# ---------------------------------------------------------------------------
# parsing

_NUM = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_QTY = re.compile(rf"^\s*({_NUM})\s*([A-Za-z/*^0-9]*)\s*$")

# key -> (target, dimension); target None means top-level
_PARAM_DIMS: dict[str, dict[str, str]] = {
    "energy": {
        "A": "scalar", "B": "scalar", "C": "scalar", "D": "scalar", "E": "scalar", "F": "scalar",
        "mass": "mass", "gravity": "accel", "side_penalty_multiplier": "scalar",
        "step_time": "time", "yaw_inertia": "inertia",
    },
    "planner": {
        "goal_radius": "length", "max_iterations": "count", "heuristic": "text", "selection": "text",
        "action_mode": "text", "near_goal_radius": "length", "dedup_xy": "length",
        "dedup_theta": "angle", "step_count": "count",
    },
    "penalty": {
        "enabled": "bool", "check_dist": "length", "weight": "scalar",
        "rotate_relief": "scalar", "reverse_rotation_penalty": "scalar",
    },
    "feasibility": {
        "traversability_min": "scalar", "foothold_height_max": "length", "foot_length": "length",
        "foot_width": "length", "body_half_width": "length", "sway_margin": "length",
        "body_obstacle_height": "length",
    },
    "sim": {"iteration_budget": "count", "max_ticks": "count"},
    "filter": {"avg_radius": "length"},
}

_PRIM_FIELDS = {
    "box": {"center": ("length", 2), "size": ("length", 2), "height": ("length", 1)},
    "ramp": {"x": ("length", 2), "y": ("length", 2), "slope": ("angle", 1), "axis": ("text", 1),
             "base": ("length", 1)},
    "noise": {"x": ("length", 2), "y": ("length", 2), "amplitude": ("length", 1)},
    "hole": {"x": ("length", 2), "y": ("length", 2)},
}
_PRIM_REQUIRED = {
    "box": ("center", "size", "height"),
    "ramp": ("x", "y", "slope"),
    "noise": ("x", "y", "amplitude"),
    "hole": ("x", "y"),
}


def parse_quantity(text: str, dim: str) -> Any:
    text = text.strip()
    if dim == "text":
        return text
    if dim == "bool":
        low = text.lower()
        if low in ("on", "true", "yes", "1"):
            return True
        if low in ("off", "false", "no", "0"):
            return False
        raise ValueError(f"expected on/off, got {text!r}")
    if dim == "count":
        if not re.fullmatch(r"[-+]?\d+", text):
            raise ValueError(f"expected an integer, got {text!r}")
        return int(text)
    m = _QTY.match(text)
    if not m:
        raise ValueError(f"cannot read quantity {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if dim == "scalar":
        if unit:
            raise ValueError(f"{text!r} should be dimensionless")
        return value
    table = UNITS[dim]
    if not unit:
        raise ValueError(f"{text!r} needs a {dim} unit ({', '.join(table)})")
    if unit not in table:
        raise ValueError(f"unit {unit!r} is not a {dim} unit ({', '.join(table)})")
    return value * table[unit]


def _split(text: str, n: int | None = None) -> list[str]:
    parts = [p.strip() for p in text.split(",")]
    if n is not None and len(parts) != n:
        raise ValueError(f"expected {n} comma-separated values, got {len(parts)}")
    return parts


def _pose(text: str, need_side: bool) -> tuple[float, float, float, Side | None]:
    parts = _split(text)
    if len(parts) not in (3, 4) or (need_side and len(parts) != 4):
        raise ValueError("pose is 'x, y, heading[, side]'")
    x = parse_quantity(parts[0], "length")
    y = parse_quantity(parts[1], "length")
    th = parse_quantity(parts[2], "angle")
    side = Side.parse(parts[3]) if len(parts) == 4 else None
    return x, y, th, side


def _primitive(kind: str, pid: str, body: str):
    fields = _PRIM_FIELDS.get(kind)
    if fields is None:
        raise ValueError(f"unknown primitive kind {kind!r}")
    values: dict[str, Any] = {}
    for item in filter(None, (s.strip() for s in body.split(";"))):
        if "=" not in item:
            raise ValueError(f"expected 'field = value' in {item!r}")
        key, val = (s.strip() for s in item.split("=", 1))
        if key not in fields:
            raise ValueError(f"{kind} has no field {key!r}")
        dim, n = fields[key]
        vals = [parse_quantity(v, dim) for v in _split(val, n)]
        values[key] = vals if n > 1 else vals[0]
    missing = [k for k in _PRIM_REQUIRED[kind] if k not in values]
    if missing:
        raise ValueError(f"{kind} {pid!r} is missing {', '.join(missing)}")
    if kind == "box":
        (cx, cy), (sx, sy) = values["center"], values["size"]
        return Box(pid, cx, cy, sx, sy, values["height"])
    (x0, x1), (y0, y1) = values["x"], values["y"]
    if kind == "ramp":
        return Ramp(pid, x0, x1, y0, y1, values["slope"], values.get("axis", "x"), values.get("base", 0.0))
    if kind == "noise":
        return NoisePatch(pid, x0, x1, y0, y1, values["amplitude"])
    return Hole(pid, x0, x1, y0, y1)


def _action_row(subset: str, text: str) -> FootstepAction:
    parts = _split(text)
    if len(parts) < 3:
        raise ValueError("action row is 'dx, dy, dtheta[, sidestep|rotate]'")
    flags = {p.lower() for p in parts[3:]}
    if flags - {"sidestep", "rotate"}:
        raise ValueError(f"unknown action flags {sorted(flags - {'sidestep', 'rotate'})}")
    return FootstepAction(
        parse_quantity(parts[0], "length"),
        parse_quantity(parts[1], "length"),
        parse_quantity(parts[2], "angle"),
        subset,
        sidestep="sidestep" in flags,
        rotate_in_place="rotate" in flags,
    )


_TOP_KEYS = {"name", "size", "origin", "resolution", "seed", "start", "swing", "goal", "goal_heading", "profile"}


def parse_scenario(text: str, source: str = "<scenario>") -> Scenario:
    top: dict[str, tuple[Any, int]] = {}
    params: dict[str, dict[str, Any]] = {k: {} for k in _PARAM_DIMS}
    primitives = []
    events = []
    actions: dict[str, list[FootstepAction]] = {}

    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            head = line.split(None, 1)[0]
            if head in _PRIM_FIELDS and ":" in line:
                rest = line[len(head):]
                pid, body = (s.strip() for s in rest.split(":", 1))
                if not pid:
                    raise ValueError(f"{head} needs an id")
                primitives.append((_primitive(head, pid, body), lineno))
            elif head == "event":
                m = re.match(r"event\s+(\d+)\s*:\s*(insert|remove)\s+(.*)$", line)
                if not m:
                    raise ValueError("event syntax is 'event <step>: insert <kind> <id>: ...' or 'event <step>: remove <id>'")
                step, kind, rest = int(m.group(1)), m.group(2), m.group(3).strip()
                if kind == "remove":
                    events.append((Event(step, "remove", target=rest), lineno))
                else:
                    pk, _, prest = rest.partition(" ")
                    pid, body = (s.strip() for s in prest.split(":", 1))
                    events.append((Event(step, "insert", primitive=_primitive(pk, pid, body)), lineno))
            elif head == "action":
                m = re.match(r"action\s+(\w+)\s*:\s*(.*)$", line)
                if not m:
                    raise ValueError("action syntax is 'action <subset>: dx, dy, dtheta[, flags]'")
                actions.setdefault(m.group(1), []).append(_action_row(m.group(1), m.group(2)))
            elif "=" in line:
                key, val = (s.strip() for s in line.split("=", 1))
                if "." in key:
                    group, name = key.split(".", 1)
                    dims = _PARAM_DIMS.get(group)
                    if dims is None or name not in dims:
                        raise ValueError(f"unknown parameter {key!r}")
                    params[group][name] = parse_quantity(val, dims[name])
                elif key in _TOP_KEYS:
                    if key in top:
                        raise ValueError(f"{key!r} given twice (first on line {top[key][1]})")
                    top[key] = (val, lineno)
                else:
                    raise ValueError(f"unknown key {key!r}")
            else:
                raise ValueError(f"cannot parse {line!r}")
        except (ValueError, TypeError) as exc:
            raise ScenarioError(str(exc), lineno, source) from None

    def get(key, conv, default=None, required=False):
        if key not in top:
            if required:
                raise ScenarioError(f"missing required key {key!r}", 0, source)
            return default
        val, ln = top[key]
        try:
            return conv(val)
        except (ValueError, TypeError) as exc:
            raise ScenarioError(str(exc), ln, source) from None

    def length_pair(v):
        return tuple(parse_quantity(p, "length") for p in _split(v, 2))

    size = get("size", length_pair, required=True)
    origin = get("origin", length_pair, (0.0, 0.0))
    resolution = get("resolution", lambda v: parse_quantity(v, "length"), 0.05)
    try:
        grid = Grid.from_extent(size[0], size[1], resolution, origin)
    except MapError as exc:
        raise ScenarioError(str(exc), top["size"][1], source) from None

    sx, sy, sth, sside = get("start", lambda v: _pose(v, True), required=True)
    start = FootState(sx, sy, sth, sside)
    swing_pose = get("swing", lambda v: _pose(v, False))
    if swing_pose is None:
        swing = _default_swing(start, 0.25)
    else:
        wx, wy, wth, wside = swing_pose
        if wside is not None and wside is sside:
            raise ScenarioError("swing foot must be on the other side from the stance foot", top["swing"][1], source)
        swing = FootState(wx, wy, wth, sside.other)
    gx, gy = get("goal", length_pair, required=True)
    heading = get("goal_heading", lambda v: parse_quantity(v, "angle"))

    for prim, ln in primitives + [(e.primitive, ln) for e, ln in events if e.primitive is not None]:
        if not grid.contains(prim.bounds()):
            raise ScenarioError(f"{type(prim).__name__.lower()} {prim.id!r} lies outside the map extents", ln, source)

    try:
        planner_kw = dict(params["planner"])
        penalty = replace(PenaltyConfig(), **params["penalty"])
        planner = PlannerConfig(penalty=penalty, **planner_kw)
        goal = GoalSpec(gx, gy, heading, planner.goal_radius)
        return Scenario(
            name=get("name", str, Path(source).stem),
            grid=grid,
            primitives=tuple(p for p, _ in primitives),
            start=start,
            swing=swing,
            goal=goal,
            seed=get("seed", lambda v: parse_quantity(v, "count"), 0),
            events=tuple(e for e, _ in events),
            profile=get("profile", str, "sim"),
            energy=replace(EnergyParams(), **params["energy"]),
            planner=planner,
            feasibility=replace(FeasibilityConfig(), **params["feasibility"]),
            sim=replace(SimSettings(), **params["sim"]),
            avg_radius=params["filter"].get("avg_radius", 0.1),
            action_rows=tuple((k, tuple(v)) for k, v in actions.items()),
        )
    except (ValueError, TypeError) as exc:
        raise ScenarioError(str(exc), 0, source) from None


def _default_swing(start: FootState, width: float) -> FootState:
    # the swing foot sits one nominal width toward the other side
    off = -start.side.sign * width
    return FootState(
        start.x - off * math.sin(start.theta),
        start.y + off * math.cos(start.theta),
        start.theta,
        start.side.other,
    )


def load_scenario(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ScenarioError("file not found", 0, str(path)) from None
    return parse_scenario(text, str(path))


def corpus_dir() -> Path:
    return Path(__file__).parent / "scenarios"


def corpus(pattern: str = "*.scn") -> list[Path]:
    return sorted(corpus_dir().glob(pattern))


def _fmt(v: float, unit: str = "m") -> str:
    return f"{float(v)!r} {unit}"


def dump_scenario(sc: Scenario) -> str:
    """Serialize the geometric content of a scenario (parameters left at their values)."""
    g = sc.grid
    lines = [
        f"name = {sc.name}",
        f"size = {_fmt(g.nx * g.resolution)}, {_fmt(g.ny * g.resolution)}",
        f"origin = {_fmt(g.origin[0])}, {_fmt(g.origin[1])}",
        f"resolution = {_fmt(g.resolution)}",
        f"seed = {sc.seed}",
        f"profile = {sc.profile}",
        f"start = {_fmt(sc.start.x)}, {_fmt(sc.start.y)}, {_fmt(sc.start.theta, 'rad')}, {sc.start.side.value}",
        f"swing = {_fmt(sc.swing.x)}, {_fmt(sc.swing.y)}, {_fmt(sc.swing.theta, 'rad')}",
        f"goal = {_fmt(sc.goal.x)}, {_fmt(sc.goal.y)}",
    ]
    if sc.goal.heading is not None:
        lines.append(f"goal_heading = {_fmt(sc.goal.heading, 'rad')}")
    lines += [_prim_line(p) for p in sc.primitives]
    for ev in sc.events:
        if ev.kind == "insert":
            lines.append(f"event {ev.step}: insert {_prim_line(ev.primitive)}")
        else:
            lines.append(f"event {ev.step}: remove {ev.target}")
    return "\n".join(lines) + "\n"


def _prim_line(p) -> str:
    if isinstance(p, Box):
        return (f"box {p.id}: center = {_fmt(p.cx)}, {_fmt(p.cy)}; size = {_fmt(p.sx)}, {_fmt(p.sy)}; "
                f"height = {_fmt(p.height)}")
    xy = f"x = {_fmt(p.x0)}, {_fmt(p.x1)}; y = {_fmt(p.y0)}, {_fmt(p.y1)}"
    if isinstance(p, Ramp):
        return f"ramp {p.id}: {xy}; slope = {_fmt(p.slope, 'rad')}; axis = {p.axis}; base = {_fmt(p.base)}"
    if isinstance(p, NoisePatch):
        return f"noise {p.id}: {xy}; amplitude = {_fmt(p.amplitude)}"
    return f"hole {p.id}: {xy}"
