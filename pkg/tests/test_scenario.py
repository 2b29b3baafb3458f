import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from footplan.geometry import Side
from footplan.scenario import (
    Event,
    ScenarioError,
    apply_event,
    corpus,
    dump_scenario,
    load_scenario,
    parse_quantity,
    parse_scenario,
)
from footplan.worldmap import Box, Ramp

BASE = """\
name = demo
size = 6 m, 4 m
origin = -1 m, -2 m
resolution = 5 cm
start = 0 m, -12.5 cm, 0 deg, right
goal = 4 m, 0 m
"""


def test_minimal_scenario():
    sc = parse_scenario(BASE)
    assert sc.name == "demo"
    assert (sc.grid.nx, sc.grid.ny) == (120, 80)
    assert sc.start.y == pytest.approx(-0.125) and sc.start.side is Side.RIGHT
    # default swing foot one nominal width to the left
    assert (sc.swing.x, sc.swing.y, sc.swing.side) == (pytest.approx(0.0), pytest.approx(0.125), Side.LEFT)
    assert sc.goal.heading is None and sc.goal.radius == 0.15
    assert sc.planner.max_iterations == 2000 and sc.planner.penalty.check_dist == 0.5


@pytest.mark.parametrize("text, dim, want", [
    ("12.5 cm", "length", 0.125),
    ("3 mm", "length", 0.003),
    ("90 deg", "angle", math.pi / 2),
    ("0.5 rad", "angle", 0.5),
    ("500 g", "mass", 0.5),
    ("250 ms", "time", 0.25),
    ("9.81 m/s2", "accel", 9.81),
    ("1.2 kg*m2", "inertia", 1.2),
    ("44", "scalar", 44.0),
    ("off", "bool", False),
    ("17", "count", 17),
])
def test_quantities(text, dim, want):
    assert parse_quantity(text, dim) == pytest.approx(want)


@pytest.mark.parametrize("text, dim", [("12", "length"), ("12 kg", "length"), ("4 m", "scalar"),
                                       ("1.5", "count"), ("maybe", "bool")])
def test_bad_quantities(text, dim):
    with pytest.raises(ValueError):
        parse_quantity(text, dim)


def test_parameters_and_primitives():
    sc = parse_scenario(BASE + """
goal_heading = 90 deg
energy.mass = 60 kg
planner.max_iterations = 500
planner.heuristic = distance
penalty.enabled = off
feasibility.foothold_height_max = 4 cm
sim.iteration_budget = 50
filter.avg_radius = 15 cm
box crate: center = 1 m, 0 m; size = 40 cm, 40 cm; height = 0.6 m  # a crate
ramp r: x = 2 m, 3 m; y = -1 m, 1 m; slope = 5 deg
noise n: x = 0 m, 1 m; y = -1 m, 1 m; amplitude = 1 cm
hole h: x = 3.5 m, 4 m; y = 1 m, 1.5 m
""")
    assert sc.goal.heading == pytest.approx(math.pi / 2)
    assert sc.energy.mass == 60.0 and sc.planner.max_iterations == 500
    assert sc.planner.heuristic == "distance" and not sc.planner.penalty.enabled
    assert sc.feasibility.foothold_height_max == pytest.approx(0.04)
    assert sc.sim.iteration_budget == 50 and sc.avg_radius == pytest.approx(0.15)
    assert [p.id for p in sc.primitives] == ["crate", "r", "n", "h"]
    assert sc.primitives[0] == Box("crate", 1.0, 0.0, 0.4, 0.4, 0.6)
    assert isinstance(sc.primitives[1], Ramp) and sc.primitives[1].slope == pytest.approx(math.radians(5))
    assert sc.build_map().shape == (80, 120)


@pytest.mark.parametrize("extra, line, fragment", [
    ("size = 1 m, 1 m", 7, "given twice"),
    ("bogus = 3", 7, "unknown key"),
    ("planner.speed = 3", 7, "unknown parameter"),
    ("box b: center = 1 m, 0 m; size = 1 m, 1 m", 7, "missing height"),
    ("box b: center = 1, 0; size = 1 m, 1 m; height = 1 m", 7, "needs a length unit"),
    ("box b: center = 9 m, 0 m; size = 1 m, 1 m; height = 1 m", 7, "outside the map"),
    ("event x: remove b", 7, "event syntax"),
    ("action forward: 0.3 m, 25 cm", 7, "action row"),
    ("wiggle", 7, "cannot parse"),
])
def test_errors_carry_line_numbers(extra, line, fragment):
    with pytest.raises(ScenarioError) as err:
        parse_scenario(BASE + extra + "\n", "demo.scn")
    assert err.value.line == line
    assert str(err.value).startswith(f"demo.scn:{line}: ")
    assert fragment in str(err.value)


def test_missing_and_inconsistent():
    with pytest.raises(ScenarioError, match="missing required key 'goal'"):
        parse_scenario(BASE.replace("goal = 4 m, 0 m\n", ""))
    with pytest.raises(ScenarioError, match="other side"):
        parse_scenario(BASE + "swing = 0 m, 12.5 cm, 0 deg, right\n")
    with pytest.raises(ScenarioError, match="ghost"):
        parse_scenario(BASE + "event 2: remove ghost\n")
    with pytest.raises(ScenarioError, match="duplicate"):
        parse_scenario(BASE + "box a: center = 1 m, 0 m; size = 1 m, 1 m; height = 1 m\n" * 2)
    with pytest.raises(ScenarioError, match="file not found"):
        load_scenario("/nonexistent/x.scn")


def test_events_and_primitives_at():
    sc = parse_scenario(BASE + """
box a: center = 1 m, 0 m; size = 0.2 m, 0.2 m; height = 1 m
event 2: insert box p: center = 2 m, 0 m; size = 0.4 m, 0.4 m; height = 1.7 m
event 4: insert box p: center = 2 m, 0.5 m; size = 0.4 m, 0.4 m; height = 1.7 m
event 5: remove a
""")
    assert [p.id for p in sc.primitives_at(1)] == ["a"]
    assert [p.id for p in sc.primitives_at(2)] == ["a", "p"]
    moved = sc.primitives_at(4)
    assert len(moved) == 2 and moved[1].cy == 0.5
    assert [p.id for p in sc.primitives_at(9)] == ["p"]


def test_apply_event_replaces_by_id():
    a = Box("a", 0, 0, 1, 1, 1)
    b = Box("a", 1, 0, 1, 1, 1)
    assert apply_event([a], Event(1, "insert", primitive=b)) == [b]
    assert apply_event([a], Event(1, "remove", target="a")) == []


def test_action_overrides():
    sc = parse_scenario(BASE + "action forward: 30 cm, 25 cm, 0 deg\naction side_left: 0 m, 32 cm, 0 deg, sidestep\n")
    prof = sc.action_profile()
    fwd = dict(prof.subsets)["forward"]
    assert len(fwd) == 1 and fwd[0].dx == pytest.approx(0.3)
    assert dict(prof.subsets)["side_left"][0].sidestep
    bad = parse_scenario(BASE + "action sideways: 0 m, 32 cm, 0 deg\n")
    with pytest.raises(ValueError, match="sideways"):
        bad.action_profile()


def test_corpus_parses():
    paths = corpus()
    assert len(paths) >= 15
    names = {p.stem for p in paths}
    assert {"straight-5m", "wall", "clutter", "dynamic-person", "small-large"} <= names
    assert sum(n.startswith("turning-") for n in names) >= 10
    for p in paths:
        sc = load_scenario(p)
        assert sc.name == p.stem
        sc.build_map()


@pytest.mark.parametrize("path", corpus(), ids=lambda p: p.stem)
def test_corpus_round_trips(path):
    sc = load_scenario(path)
    again = parse_scenario(dump_scenario(sc))
    assert again.primitives == sc.primitives
    assert again.events == sc.events
    assert again.grid == sc.grid
    assert (again.start, again.swing, again.goal, again.seed) == (sc.start, sc.swing, sc.goal, sc.seed)


@given(cx=st.integers(-50, 400), cy=st.integers(-150, 150), sx=st.integers(5, 80), sy=st.integers(5, 80),
       h=st.integers(1, 200), step=st.integers(0, 30))
@settings(max_examples=40, deadline=None)
def test_generated_round_trip(cx, cy, sx, sy, h, step):
    box = Box("b", cx / 100, cy / 100, sx / 100, sy / 100, h / 100)
    lo_x, hi_x, lo_y, hi_y = box.bounds()
    if lo_x < -1 or hi_x > 5 or lo_y < -2 or hi_y > 2:
        return
    sc = parse_scenario(BASE + f"event {step}: insert box b: center = {cx} cm, {cy} cm; size = {sx} cm, {sy} cm; "
                               f"height = {h} cm\n")
    again = parse_scenario(dump_scenario(sc))
    assert again.events == sc.events
