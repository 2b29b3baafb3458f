"""Foothold and body-collision checks on a filtered elevation map.

Cell membership is decided by cell center: a cell belongs to a shape when its
center lies inside it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .worldmap import ElevationMap, MapError


@dataclass(frozen=True)
class FeasibilityConfig:
    traversability_min: float = 0.5
    foothold_height_max: float = 0.05
    foot_length: float = 0.22
    foot_width: float = 0.12
    body_half_width: float = 0.15
    sway_margin: float = 0.05
    body_obstacle_height: float = 0.30

    def __post_init__(self):
        for name in ("foothold_height_max", "foot_length", "foot_width", "body_half_width", "body_obstacle_height"):
            if not getattr(self, name) > 0:
                raise ValueError(f"FeasibilityConfig.{name} must be positive")
        if self.sway_margin < 0:
            raise ValueError("FeasibilityConfig.sway_margin must be >= 0")
        if not 0.0 <= self.traversability_min <= 1.0:
            raise ValueError("FeasibilityConfig.traversability_min must lie in [0, 1]")


Pose = tuple[float, float, float]


class FeasibilityChecker:
    """Feasibility queries bound to one map snapshot and one configuration."""

    def __init__(self, emap: ElevationMap, cfg: FeasibilityConfig | None = None):
        if not emap.is_filtered:
            raise MapError("feasibility checks need a filtered map")
        self.map = emap
        self.cfg = cfg or FeasibilityConfig()
        self._res = emap.resolution
        self._ox, self._oy = emap.origin
        self._ny, self._nx = emap.shape
        self._height = np.where(emap.valid, emap.height, np.nan)
        # -inf for invalid cells so that range maxima ignore them
        self._hmax = np.where(emap.valid, emap.height, -np.inf)
        trav = np.nan_to_num(emap.traversability, nan=-1.0)
        self._bad_foothold = ~emap.valid | (trav < self.cfg.traversability_min)
        self._valid = emap.valid

    # -- helpers ----------------------------------------------------------
    def height_at(self, x: float, y: float) -> float:
        idx = self.map.cell_index(x, y)
        if idx is None or not self._valid[idx[1], idx[0]]:
            return math.nan
        return float(self._height[idx[1], idx[0]])

    def _cells_in_box(self, cx: float, cy: float, half_diag_x: float, half_diag_y: float):
        """Index grids (unclipped) for cell centers in an axis-aligned bounding box."""
        res = self._res
        i0 = math.ceil((cx - half_diag_x - self._ox) / res - 0.5 - 1e-9)
        i1 = math.floor((cx + half_diag_x - self._ox) / res - 0.5 + 1e-9)
        j0 = math.ceil((cy - half_diag_y - self._oy) / res - 0.5 - 1e-9)
        j1 = math.floor((cy + half_diag_y - self._oy) / res - 0.5 + 1e-9)
        ii = np.arange(i0, i1 + 1)
        jj = np.arange(j0, j1 + 1)
        return ii, jj

    def _box_slices(self, cx, cy, ex, ey):
        res = self._res
        i0 = math.ceil((cx - ex - self._ox) / res - 0.5 - 1e-9)
        i1 = math.floor((cx + ex - self._ox) / res - 0.5 + 1e-9) + 1
        j0 = math.ceil((cy - ey - self._oy) / res - 0.5 - 1e-9)
        j1 = math.floor((cy + ey - self._oy) / res - 0.5 + 1e-9) + 1
        if i1 <= i0 or j1 <= j0:
            return None, True
        inside = i0 >= 0 and j0 >= 0 and i1 <= self._nx and j1 <= self._ny
        return (slice(max(j0, 0), max(j1, 0)), slice(max(i0, 0), max(i1, 0))), inside

    def foot_cells(self, pose: Pose) -> tuple[np.ndarray, np.ndarray, bool]:
        """Indices (iy, ix) of cells whose centers lie in the foot rectangle.

        The flag is False when part of the rectangle covers cells outside the map.
        """
        x, y, th = pose
        hl, hw = 0.5 * self.cfg.foot_length, 0.5 * self.cfg.foot_width
        c, s = math.cos(th), math.sin(th)
        ex = abs(c) * hl + abs(s) * hw
        ey = abs(s) * hl + abs(c) * hw
        ii, jj = self._cells_in_box(x, y, ex, ey)
        px = self._ox + (ii + 0.5) * self._res - x
        py = self._oy + (jj + 0.5) * self._res - y
        u = c * px[None, :] + s * py[:, None]
        v = -s * px[None, :] + c * py[:, None]
        inside = (np.abs(u) <= hl + 1e-9) & (np.abs(v) <= hw + 1e-9)
        J, I = np.nonzero(inside)
        iy, ix = jj[J], ii[I]
        in_map = (ix >= 0) & (ix < self._nx) & (iy >= 0) & (iy < self._ny)
        return iy[in_map], ix[in_map], bool(in_map.all())

    def ellipse_cells(self, p0, p1, margin: float) -> tuple[np.ndarray, np.ndarray]:
        """In-map cells whose centers lie in the ellipse spanning two foot positions."""
        (x0, y0), (x1, y1) = p0, p1
        cx, cy = 0.5 * (x0 + x1), 0.5 * (y0 + y1)
        d = math.hypot(x1 - x0, y1 - y0)
        a = 0.5 * d + margin
        b = self.cfg.body_half_width
        if a < 1e-9:
            return np.empty(0, int), np.empty(0, int)
        phi = math.atan2(y1 - y0, x1 - x0) if d > 0 else 0.0
        c, s = math.cos(phi), math.sin(phi)
        ex = math.sqrt((a * c) ** 2 + (b * s) ** 2)
        ey = math.sqrt((a * s) ** 2 + (b * c) ** 2)
        ii, jj = self._cells_in_box(cx, cy, ex, ey)
        ii = ii[(ii >= 0) & (ii < self._nx)]
        jj = jj[(jj >= 0) & (jj < self._ny)]
        px = self._ox + (ii + 0.5) * self._res - cx
        py = self._oy + (jj + 0.5) * self._res - cy
        u = c * px[None, :] + s * py[:, None]
        v = -s * px[None, :] + c * py[:, None]
        inside = (u / a) ** 2 + (v / b) ** 2 <= 1.0 + 1e-12
        J, I = np.nonzero(inside)
        return jj[J], ii[I]

    # -- checks -----------------------------------------------------------
    def foothold(self, pose: Pose, reference_height: float = 0.0) -> bool:
        x, y, th = pose
        hl, hw = 0.5 * self.cfg.foot_length, 0.5 * self.cfg.foot_width
        c, s = abs(math.cos(th)), abs(math.sin(th))
        box, inside = self._box_slices(x, y, c * hl + s * hw, s * hl + c * hw)
        if box is not None and inside:
            # every cell of the bounding box passes, so the rectangle does too
            if not self._bad_foothold[box].any() and (
                self._hmax[box].max() - reference_height <= self.cfg.foothold_height_max + 1e-12
            ):
                return True
        iy, ix, in_map = self.foot_cells(pose)
        if not in_map or iy.size == 0:
            return False
        if self._bad_foothold[iy, ix].any():
            return False
        return bool((self._height[iy, ix] - reference_height <= self.cfg.foothold_height_max + 1e-12).all())

    def body(self, stance: Pose, prev_swing: Pose, new_swing: Pose, reference_height: float | None = None) -> bool:
        if reference_height is None:
            reference_height = self.height_at(stance[0], stance[1])
            if math.isnan(reference_height):
                return False
        limit = reference_height + self.cfg.body_obstacle_height
        for p0, p1, margin in (
            (stance, new_swing, self.cfg.sway_margin),
            (prev_swing, new_swing, 0.0),
        ):
            (x0, y0), (x1, y1) = p0[:2], p1[:2]
            half = 0.5 * math.hypot(x1 - x0, y1 - y0) + margin
            reach = max(half, self.cfg.body_half_width)
            box, _ = self._box_slices(0.5 * (x0 + x1), 0.5 * (y0 + y1), reach, reach)
            if box is None or self._hmax[box].size == 0 or self._hmax[box].max() <= limit + 1e-12:
                continue
            iy, ix = self.ellipse_cells(p0[:2], p1[:2], margin)
            h = self._height[iy, ix]
            if (h[np.isfinite(h)] > limit + 1e-12).any():
                return False
        return True

    def ray(
        self,
        origin: tuple[float, float],
        direction: float,
        max_dist: float,
        reference_height: float | None = None,
        half_width: float | None = None,
    ) -> float | None:
        """Distance along ``direction`` to the first tall cell inside the body corridor."""
        ox, oy = origin
        if reference_height is None:
            reference_height = self.height_at(ox, oy)
            if math.isnan(reference_height):
                reference_height = 0.0
        if half_width is None:
            half_width = self.cfg.body_half_width
        res = self._res
        limit = reference_height + self.cfg.body_obstacle_height + 1e-12
        reach = 0.5 * max_dist + half_width + res
        mx = ox + 0.5 * max_dist * math.cos(direction)
        my = oy + 0.5 * max_dist * math.sin(direction)
        box, _ = self._box_slices(mx, my, reach, reach)
        if box is None or self._hmax[box].size == 0 or self._hmax[box].max() <= limit:
            return None
        steps = np.arange(1, int(math.floor(max_dist / res + 1e-9)) + 1) * res
        nlat = int(math.floor(half_width / res + 1e-9))
        lats = np.arange(-nlat, nlat + 1) * res
        c, s = math.cos(direction), math.sin(direction)
        px = ox + c * steps[:, None] - s * lats[None, :]
        py = oy + s * steps[:, None] + c * lats[None, :]
        ix = np.floor((px - self._ox) / res + 1e-9).astype(int)
        iy = np.floor((py - self._oy) / res + 1e-9).astype(int)
        in_map = (ix >= 0) & (ix < self._nx) & (iy >= 0) & (iy < self._ny)
        h = np.full(px.shape, np.nan)
        h[in_map] = self._height[iy[in_map], ix[in_map]]
        tall = np.nan_to_num(h, nan=-np.inf) > limit
        hit = np.nonzero(tall.any(axis=1))[0]
        if hit.size == 0:
            return None
        return float(steps[hit[0]])


def foothold_feasible(emap: ElevationMap, foot_pose: Pose, cfg: FeasibilityConfig | None = None,
                      reference_height: float = 0.0) -> bool:
    return FeasibilityChecker(emap, cfg).foothold(foot_pose, reference_height)


def body_feasible(emap: ElevationMap, stance_pose: Pose, prev_swing_pose: Pose, new_swing_pose: Pose,
                  cfg: FeasibilityConfig | None = None, reference_height: float | None = None) -> bool:
    return FeasibilityChecker(emap, cfg).body(stance_pose, prev_swing_pose, new_swing_pose, reference_height)


def obstacle_ray(emap: ElevationMap, origin_pose: Pose, direction: float, max_dist: float,
                 cfg: FeasibilityConfig | None = None, half_width: float | None = None) -> float | None:
    return FeasibilityChecker(emap, cfg).ray(origin_pose[:2], direction, max_dist, half_width=half_width)
