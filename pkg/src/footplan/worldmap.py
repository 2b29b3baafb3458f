"""2.5D elevation grids: rasterization of scenario primitives, filtering and queries.

Arrays are indexed ``[iy, ix]``; cell ``(ix, iy)`` covers the half-open
square ``[x0 + ix*res, x0 + (ix+1)*res) x [y0 + iy*res, y0 + (iy+1)*res)``.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np
from scipy import ndimage
from sklearn.base import BaseEstimator, TransformerMixin

LAYERS = ("height", "smoothed_height", "normal_z", "slope", "roughness", "traversability")
_EDGE_EPS = 1e-9


class MapError(ValueError):
    """Invalid map geometry or primitive placement."""


# ---------------------------------------------------------------------------
# primitives


@dataclass(frozen=True)
class Box:
    id: str
    cx: float
    cy: float
    sx: float
    sy: float
    height: float

    def bounds(self):
        return self.cx - self.sx / 2, self.cx + self.sx / 2, self.cy - self.sy / 2, self.cy + self.sy / 2


@dataclass(frozen=True)
class Ramp:
    """Inclined plane rising from ``x0`` (axis "x") or ``y0`` (axis "y") at ``slope`` rad."""

    id: str
    x0: float
    x1: float
    y0: float
    y1: float
    slope: float
    axis: str = "x"
    base: float = 0.0

    def bounds(self):
        return self.x0, self.x1, self.y0, self.y1


@dataclass(frozen=True)
class NoisePatch:
    id: str
    x0: float
    x1: float
    y0: float
    y1: float
    amplitude: float

    def bounds(self):
        return self.x0, self.x1, self.y0, self.y1


@dataclass(frozen=True)
class Hole:
    """Region with no height information (cells marked invalid)."""

    id: str
    x0: float
    x1: float
    y0: float
    y1: float

    def bounds(self):
        return self.x0, self.x1, self.y0, self.y1


Primitive = Box | Ramp | NoisePatch | Hole


# ---------------------------------------------------------------------------
# map container


@dataclass(frozen=True, eq=False)
class ElevationMap:
    resolution: float
    origin: tuple[float, float]
    height: np.ndarray
    valid: np.ndarray
    smoothed_height: np.ndarray | None = None
    normal_z: np.ndarray | None = None
    slope: np.ndarray | None = None
    roughness: np.ndarray | None = None
    traversability: np.ndarray | None = None
    avg_radius: float | None = None

    def __post_init__(self):
        if not self.resolution > 0:
            raise MapError("resolution must be positive")
        shape = self.height.shape
        for name in ("valid",) + LAYERS[1:]:
            arr = getattr(self, name)
            if arr is not None:
                if arr.shape != shape:
                    raise MapError(f"layer {name} has shape {arr.shape}, expected {shape}")
                arr.flags.writeable = False
        self.height.flags.writeable = False

    @property
    def shape(self) -> tuple[int, int]:
        return self.height.shape

    @property
    def size_x(self) -> float:
        return self.shape[1] * self.resolution

    @property
    def size_y(self) -> float:
        return self.shape[0] * self.resolution

    @property
    def is_filtered(self) -> bool:
        return self.traversability is not None

    def cell_index(self, x: float, y: float) -> tuple[int, int] | None:
        ix = math.floor((x - self.origin[0]) / self.resolution + _EDGE_EPS)
        iy = math.floor((y - self.origin[1]) / self.resolution + _EDGE_EPS)
        if 0 <= ix < self.shape[1] and 0 <= iy < self.shape[0]:
            return ix, iy
        return None

    def cell_centers(self) -> tuple[np.ndarray, np.ndarray]:
        """1-D arrays of cell-center x and y coordinates."""
        res = self.resolution
        xs = self.origin[0] + (np.arange(self.shape[1]) + 0.5) * res
        ys = self.origin[1] + (np.arange(self.shape[0]) + 0.5) * res
        return xs, ys

    def layer(self, name: str) -> np.ndarray:
        arr = getattr(self, name)
        if arr is None:
            raise MapError(f"layer {name!r} is empty; run filter_chain first")
        return arr


class CellValues(NamedTuple):
    known: bool
    valid: bool
    height: float
    smoothed_height: float
    normal_z: float
    slope: float
    roughness: float
    traversability: float


UNKNOWN = CellValues(False, False, *([math.nan] * 6))


def query(emap: ElevationMap, x: float, y: float) -> CellValues:
    idx = emap.cell_index(x, y)
    if idx is None:
        return UNKNOWN
    ix, iy = idx
    vals = []
    for name in LAYERS:
        arr = getattr(emap, name)
        vals.append(math.nan if arr is None else float(arr[iy, ix]))
    return CellValues(True, bool(emap.valid[iy, ix]), *vals)


# ---------------------------------------------------------------------------
# rasterization


@dataclass(frozen=True)
class Grid:
    resolution: float
    origin: tuple[float, float]
    nx: int
    ny: int

    @classmethod
    def from_extent(cls, size_x: float, size_y: float, resolution: float, origin=(0.0, 0.0)) -> "Grid":
        if resolution <= 0 or size_x <= 0 or size_y <= 0:
            raise MapError("map size and resolution must be positive")
        nx = int(round(size_x / resolution))
        ny = int(round(size_y / resolution))
        return cls(resolution, (float(origin[0]), float(origin[1])), nx, ny)

    def contains(self, bounds, tol: float = 1e-9) -> bool:
        x0, x1, y0, y1 = bounds
        ox, oy = self.origin
        return (
            x0 >= ox - tol and y0 >= oy - tol
            and x1 <= ox + self.nx * self.resolution + tol
            and y1 <= oy + self.ny * self.resolution + tol
            and x0 <= x1 and y0 <= y1
        )

    def index_range(self, lo: float, hi: float, axis: int) -> tuple[int, int]:
        """Cells whose centers c satisfy lo <= c < hi along one axis."""
        o = self.origin[axis]
        n = self.nx if axis == 0 else self.ny
        a = math.ceil((lo - o) / self.resolution - 0.5 - _EDGE_EPS)
        b = math.ceil((hi - o) / self.resolution - 0.5 - _EDGE_EPS)
        return max(a, 0), min(max(b, 0), n)


def _noise_values(patch: NoisePatch, seed: int, ix: tuple[int, int], iy: tuple[int, int]):
    # generated over the whole patch so that any sub-window reproduces it exactly
    rng = np.random.default_rng([seed, zlib.crc32(patch.id.encode())])
    nxp, nyp = ix[1] - ix[0], iy[1] - iy[0]
    return rng.uniform(-patch.amplitude, patch.amplitude, size=(max(nyp, 0), max(nxp, 0)))


def rasterize(
    primitives: Sequence[Primitive],
    grid: Grid,
    seed: int = 0,
    window: tuple[slice, slice] | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Height and validity over ``window`` (``[iy_slice, ix_slice]``; whole grid if None).

    Boxes and ramps combine by maximum; noise patches add on top; holes clear validity.
    """
    if window is None:
        window = (slice(0, grid.ny), slice(0, grid.nx))
    wy, wx = window
    height = np.zeros((wy.stop - wy.start, wx.stop - wx.start))
    valid = np.ones_like(height, dtype=bool)
    xs = grid.origin[0] + (np.arange(wx.start, wx.stop) + 0.5) * grid.resolution
    ys = grid.origin[1] + (np.arange(wy.start, wy.stop) + 0.5) * grid.resolution

    def clip(prim):
        x0, x1, y0, y1 = prim.bounds()
        ix = grid.index_range(x0, x1, 0)
        iy = grid.index_range(y0, y1, 1)
        cx = (max(ix[0], wx.start), min(ix[1], wx.stop))
        cy = (max(iy[0], wy.start), min(iy[1], wy.stop))
        if cx[0] >= cx[1] or cy[0] >= cy[1]:
            return None
        return ix, iy, (slice(cy[0] - wy.start, cy[1] - wy.start), slice(cx[0] - wx.start, cx[1] - wx.start)), cx, cy

    for prim in primitives:
        if isinstance(prim, (Box, Ramp)):
            c = clip(prim)
            if c is None:
                continue
            _, _, local, _, _ = c
            if isinstance(prim, Box):
                values = prim.height
            else:
                t = math.tan(prim.slope)
                if prim.axis == "x":
                    values = prim.base + t * (xs[local[1]] - prim.x0)[None, :] * np.ones((local[0].stop - local[0].start, 1))
                else:
                    values = prim.base + t * (ys[local[0]] - prim.y0)[:, None] * np.ones((1, local[1].stop - local[1].start))
            height[local] = np.maximum(height[local], values)
    for prim in primitives:
        if isinstance(prim, NoisePatch):
            c = clip(prim)
            if c is None:
                continue
            ix, iy, local, cx, cy = c
            noise = _noise_values(prim, seed, ix, iy)
            height[local] += noise[cy[0] - iy[0]:cy[1] - iy[0], cx[0] - ix[0]:cx[1] - ix[0]]
        elif isinstance(prim, Hole):
            c = clip(prim)
            if c is not None:
                valid[c[2]] = False
    height[~valid] = np.nan
    return height, valid


def check_primitives(primitives: Sequence[Primitive], grid: Grid) -> None:
    for prim in primitives:
        if not grid.contains(prim.bounds()):
            raise MapError(f"primitive {type(prim).__name__.lower()} {prim.id!r} lies outside the map extents")
        if isinstance(prim, Box) and (prim.sx <= 0 or prim.sy <= 0):
            raise MapError(f"box {prim.id!r} must have positive size")
        if isinstance(prim, Ramp) and prim.axis not in ("x", "y"):
            raise MapError(f"ramp {prim.id!r} axis must be 'x' or 'y'")


def build_map(scenario) -> ElevationMap:
    """Rasterize a scenario's static primitives; derived layers stay empty."""
    grid = scenario.grid
    check_primitives(scenario.primitives, grid)
    height, valid = rasterize(scenario.primitives, grid, scenario.seed)
    return ElevationMap(grid.resolution, grid.origin, height, valid)


# ---------------------------------------------------------------------------
# filtering


def _disk_offsets(radius: float, resolution: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    r = int(math.floor(radius / resolution + 1e-9))
    v, u = np.mgrid[-r:r + 1, -r:r + 1]
    mask = (u * u + v * v) * resolution**2 <= radius**2 + 1e-12
    return mask.astype(float), u * resolution, v * resolution


def _filter_arrays(height, valid, resolution, avg_radius, slope_limit, roughness_limit):
    kernel, u, v = _disk_offsets(avg_radius, resolution)
    w = valid.astype(float)
    z = np.where(valid, height, 0.0)

    def corr(f, k):
        return ndimage.correlate(f, k, mode="constant", cval=0.0)

    n = corr(w, kernel)
    smoothed = corr(z, kernel) / np.where(n > 0, n, 1.0)

    # least-squares plane z = a + b*u + c*v through the smoothed heights of the disk
    zs = np.where(valid, smoothed, 0.0)
    su, sv = corr(w, kernel * u), corr(w, kernel * v)
    suu, svv, suv = corr(w, kernel * u * u), corr(w, kernel * v * v), corr(w, kernel * u * v)
    sz, suz, svz = corr(zs, kernel), corr(zs, kernel * u), corr(zs, kernel * v)
    mat = np.stack([
        np.stack([n, su, sv], -1),
        np.stack([su, suu, suv], -1),
        np.stack([sv, suv, svv], -1),
    ], -2)
    rhs = np.stack([sz, suz, svz], -1)
    normal_z = np.ones_like(height)
    det = np.linalg.det(mat)
    ok = valid & (np.abs(det) > 1e-18 * np.maximum(n, 1.0) ** 3)
    if ok.any():
        coef = np.linalg.solve(mat[ok], rhs[ok][..., None])[..., 0]
        normal_z[ok] = 1.0 / np.sqrt(1.0 + coef[:, 1] ** 2 + coef[:, 2] ** 2)
    slope = np.arccos(np.clip(normal_z, -1.0, 1.0))
    roughness = height - smoothed
    trav = 0.5 * (1.0 - slope / slope_limit) + 0.5 * (1.0 - np.abs(roughness) / roughness_limit)
    trav = np.clip(trav, 0.0, 1.0)
    for arr in (smoothed, normal_z, slope, roughness, trav):
        arr[~valid] = np.nan
    return smoothed, normal_z, slope, roughness, trav


def traversability_value(slope: float, roughness: float, slope_limit: float = 0.6, roughness_limit: float = 0.1) -> float:
    """Scalar form of the traversability combination used by :func:`filter_chain`."""
    t = 0.5 * (1.0 - slope / slope_limit) + 0.5 * (1.0 - abs(roughness) / roughness_limit)
    return min(1.0, max(0.0, t))


def filter_chain(
    emap: ElevationMap,
    avg_radius: float = 0.1,
    slope_limit: float = 0.6,
    roughness_limit: float = 0.1,
) -> ElevationMap:
    """Smoothed height, plane-fit normal, slope, roughness and traversability layers.

    Disks clipped by the map border or by invalid cells average over the cells
    that remain.
    """
    if avg_radius < emap.resolution - 1e-12:
        raise MapError("avg_radius must be at least one cell")
    layers = _filter_arrays(emap.height, emap.valid, emap.resolution, avg_radius, slope_limit, roughness_limit)
    return replace(emap, **dict(zip(LAYERS[1:], layers)), avg_radius=avg_radius)


def update_region(
    emap: ElevationMap,
    primitives: Sequence[Primitive],
    changed: Sequence[Primitive],
    grid: Grid,
    seed: int = 0,
    slope_limit: float = 0.6,
    roughness_limit: float = 0.1,
) -> ElevationMap:
    """Re-rasterize and re-filter only the cells affected by ``changed`` primitives."""
    check_primitives(changed, grid)
    if not changed:
        return emap
    x0 = min(p.bounds()[0] for p in changed)
    x1 = max(p.bounds()[1] for p in changed)
    y0 = min(p.bounds()[2] for p in changed)
    y1 = max(p.bounds()[3] for p in changed)
    ix = grid.index_range(x0, x1, 0)
    iy = grid.index_range(y0, y1, 1)
    ix = (max(ix[0] - 1, 0), min(ix[1] + 1, grid.nx))
    iy = (max(iy[0] - 1, 0), min(iy[1] + 1, grid.ny))
    win = (slice(*iy), slice(*ix))
    height = emap.height.copy()
    valid = emap.valid.copy()
    height[win], valid[win] = rasterize(primitives, grid, seed, win)
    if not emap.is_filtered:
        return replace(emap, height=height, valid=valid)

    r = int(math.ceil(emap.avg_radius / emap.resolution))
    # the plane fit runs on smoothed heights, so influence spans 2r each way
    oy = (max(iy[0] - 2 * r, 0), min(iy[1] + 2 * r, grid.ny))
    ox = (max(ix[0] - 2 * r, 0), min(ix[1] + 2 * r, grid.nx))
    cy = (max(oy[0] - 2 * r, 0), min(oy[1] + 2 * r, grid.ny))
    cx = (max(ox[0] - 2 * r, 0), min(ox[1] + 2 * r, grid.nx))
    crop = (slice(*cy), slice(*cx))
    sub = _filter_arrays(height[crop], valid[crop], emap.resolution, emap.avg_radius, slope_limit, roughness_limit)
    inner = (slice(oy[0] - cy[0], oy[1] - cy[0]), slice(ox[0] - cx[0], ox[1] - cx[0]))
    out = {}
    for name, arr in zip(LAYERS[1:], sub):
        full = getattr(emap, name).copy()
        full[oy[0]:oy[1], ox[0]:ox[1]] = arr[inner]
        out[name] = full
    return replace(emap, height=height, valid=valid, **out)


class TerrainFilter(TransformerMixin, BaseEstimator):
    """Estimator wrapper around :func:`filter_chain`.

    ``transform`` accepts an :class:`ElevationMap` or a 2-D height array
    (interpreted at ``resolution`` with origin (0, 0)).
    """

    def __init__(self, avg_radius=0.1, slope_limit=0.6, roughness_limit=0.1, resolution=0.05):
        self.avg_radius = avg_radius
        self.slope_limit = slope_limit
        self.roughness_limit = roughness_limit
        self.resolution = resolution

    def _as_map(self, X) -> ElevationMap:
        if isinstance(X, ElevationMap):
            return X
        arr = np.asarray(X, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"expected a 2-D height array, got shape {arr.shape}")
        return ElevationMap(self.resolution, (0.0, 0.0), arr.copy(), np.isfinite(arr))

    def fit(self, X, y=None):
        emap = self._as_map(X)
        if self.avg_radius < emap.resolution:
            raise ValueError("avg_radius must be at least one cell")
        self.resolution_ = emap.resolution
        return self

    def transform(self, X):
        return filter_chain(self._as_map(X), self.avg_radius, self.slope_limit, self.roughness_limit)


# ---------------------------------------------------------------------------
# export


def export_layer_csv(emap: ElevationMap, name: str, path) -> Path:
    arr = emap.layer(name)
    path = Path(path)
    with path.open("w") as fh:
        fh.write(
            f"# layer={name} resolution={emap.resolution:g} origin_x={emap.origin[0]:g} "
            f"origin_y={emap.origin[1]:g} rows={arr.shape[0]} cols={arr.shape[1]}\n"
        )
        for row in arr:
            fh.write(",".join("nan" if not np.isfinite(v) else f"{v:.6f}" for v in row) + "\n")
    return path


def read_layer_csv(path) -> tuple[dict, np.ndarray]:
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().lstrip("#").split()
    meta = dict(item.split("=", 1) for item in header)
    arr = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)
    return meta, arr


def export_layer_png(emap: ElevationMap, name: str, path) -> Path:
    from PIL import Image

    arr = np.asarray(emap.layer(name), dtype=float)
    finite = np.isfinite(arr)
    img = np.zeros(arr.shape, dtype=np.uint8)
    if finite.any():
        lo, hi = float(arr[finite].min()), float(arr[finite].max())
        scale = 255.0 / (hi - lo) if hi > lo else 0.0
        img[finite] = np.round((arr[finite] - lo) * scale).astype(np.uint8)
    # row 0 is the lowest y; flip so +y points up in the image
    Image.fromarray(img[::-1]).save(path)
    return Path(path)
