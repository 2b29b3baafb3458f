"""Planar pose primitives shared by the planner, feasibility checks and simulator."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace


def wrap_angle(theta: float) -> float:
    """Wrap an angle to the half-open interval (-pi, pi]."""
    wrapped = math.remainder(theta, 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"

    @property
    def other(self) -> "Side":
        return Side.RIGHT if self is Side.LEFT else Side.LEFT

    @property
    def sign(self) -> int:
        # +1 when the stance foot is the left one
        return 1 if self is Side.LEFT else -1

    @classmethod
    def parse(cls, text: str) -> "Side":
        key = text.strip().lower()
        if key in ("l", "left"):
            return cls.LEFT
        if key in ("r", "right"):
            return cls.RIGHT
        raise ValueError(f"unknown foot side {text!r}")


@dataclass(frozen=True)
class FootState:
    """Stance-foot pose in the world frame.

    ``side`` names the foot currently on the ground; the next swing foot is
    ``side.other``.
    """

    x: float
    y: float
    theta: float
    side: Side
    step_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    def center(self, nominal_width: float) -> tuple[float, float]:
        """Body reference point: half a nominal stance width toward the swing side."""
        # a left stance foot has the other foot on its right (negative local y)
        offset = -self.side.sign * 0.5 * nominal_width
        return (
            self.x - offset * math.sin(self.theta),
            self.y + offset * math.cos(self.theta),
        )

    def with_index(self, step_index: int) -> "FootState":
        return replace(self, step_index=step_index)


@dataclass(frozen=True)
class GoalSpec:
    x: float
    y: float
    heading: float | None = None
    radius: float = 0.15

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("goal radius must be positive")
        if self.heading is not None:
            object.__setattr__(self, "heading", wrap_angle(float(self.heading)))


def rotate(dx: float, dy: float, theta: float) -> tuple[float, float]:
    c, s = math.cos(theta), math.sin(theta)
    return c * dx - s * dy, s * dx + c * dy
