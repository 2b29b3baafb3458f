"""Energy-aware A* footstep planning on 2.5D elevation maps."""
from .actions import ActionProfile, FootstepAction, adaptive_set, full_set, get_profile, mirror, successor
from .energy import EnergyParams, StepCountPolicy, StepGeometry, cot, heuristic, optimal_straight_step, step_energy
from .feasibility import FeasibilityChecker, FeasibilityConfig, body_feasible, foothold_feasible, obstacle_ray
from .geometry import FootState, GoalSpec, Side
from .planner import FootstepPlanner, PenaltyConfig, PlannerConfig, PlanResult, PlanStatus, plan
from .scenario import Scenario, ScenarioError, load_scenario, parse_scenario
from .worldmap import ElevationMap, TerrainFilter, build_map, filter_chain, query

__version__ = "0.1.0"

__all__ = [
    "ActionProfile", "ElevationMap", "EnergyParams", "FeasibilityChecker", "FeasibilityConfig",
    "FootState", "FootstepAction", "FootstepPlanner", "GoalSpec", "PenaltyConfig", "PlanResult",
    "PlanStatus", "PlannerConfig", "Scenario", "ScenarioError", "Side", "StepCountPolicy",
    "StepGeometry", "TerrainFilter", "adaptive_set", "body_feasible", "build_map", "cot",
    "filter_chain", "foothold_feasible", "full_set", "get_profile", "heuristic", "load_scenario",
    "mirror", "obstacle_ray", "optimal_straight_step", "parse_scenario", "plan", "query",
    "step_energy", "successor",
]
