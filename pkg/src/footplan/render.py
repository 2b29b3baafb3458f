"""Static SVG top views: height map underlay, footprints and optional body ellipses."""
from __future__ import annotations

import base64
import io
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from .geometry import FootState, GoalSpec
from .worldmap import ElevationMap

_SIDE_COLOR = {"left": "#1f77b4", "right": "#d62728"}


def _height_png(emap: ElevationMap) -> str:
    from PIL import Image

    h = np.where(emap.valid, emap.height, np.nan)
    finite = np.isfinite(h)
    img = np.full(h.shape, 255, dtype=np.uint8)
    if finite.any():
        lo, hi = float(h[finite].min()), float(h[finite].max())
        if hi > lo:
            img[finite] = np.round(235 - 175 * (h[finite] - lo) / (hi - lo)).astype(np.uint8)
        else:
            img[finite] = 235
    img[~finite] = 40
    buf = io.BytesIO()
    Image.fromarray(img[::-1]).save(buf, format="PNG")
    return base64.b64encode(buf.getvalue()).decode("ascii")


def plan_svg(
    emap: ElevationMap,
    footsteps: Sequence[FootState],
    goal: GoalSpec | None = None,
    foot_size: tuple[float, float] = (0.22, 0.12),
    body_half_width: float | None = None,
    title: str = "",
    px_per_m: float = 100.0,
) -> str:
    """SVG document; ``footsteps[0]`` is drawn as the start marker, the rest as footprints."""
    ny, nx = emap.shape
    w_m, h_m = nx * emap.resolution, ny * emap.resolution
    ox, oy = emap.origin
    W, H = w_m * px_per_m, h_m * px_per_m

    def X(x):
        return (x - ox) * px_per_m

    def Y(y):
        return H - (y - oy) * px_per_m

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" viewBox="0 0 {W:.1f} {H:.1f}">',
        f"<title>{title}</title>",
        f'<image x="0" y="0" width="{W:.1f}" height="{H:.1f}" preserveAspectRatio="none" '
        f'href="data:image/png;base64,{_height_png(emap)}"/>',
    ]
    fl, fw = foot_size[0] * px_per_m, foot_size[1] * px_per_m

    if body_half_width is not None:
        for a, b in zip(footsteps, footsteps[1:]):
            cx, cy = X(0.5 * (a.x + b.x)), Y(0.5 * (a.y + b.y))
            d = math.hypot(b.x - a.x, b.y - a.y)
            ang = -math.degrees(math.atan2(b.y - a.y, b.x - a.x))
            out.append(
                f'<ellipse class="body" cx="{cx:.2f}" cy="{cy:.2f}" rx="{max(d / 2, 1e-3) * px_per_m:.2f}" '
                f'ry="{body_half_width * px_per_m:.2f}" transform="rotate({ang:.2f} {cx:.2f} {cy:.2f})" '
                'fill="none" stroke="#999" stroke-width="0.8"/>'
            )

    if footsteps:
        s = footsteps[0]
        out.append(f'<circle class="start" cx="{X(s.x):.2f}" cy="{Y(s.y):.2f}" r="4" fill="#2ca02c"/>')
    for s in footsteps[1:]:
        cx, cy = X(s.x), Y(s.y)
        ang = -math.degrees(s.theta)
        out.append(
            f'<rect class="footstep" x="{cx - fl / 2:.2f}" y="{cy - fw / 2:.2f}" width="{fl:.2f}" height="{fw:.2f}" '
            f'transform="rotate({ang:.2f} {cx:.2f} {cy:.2f})" fill="{_SIDE_COLOR[s.side.value]}" '
            'fill-opacity="0.55" stroke="black" stroke-width="0.6"/>'
        )
    if goal is not None:
        out.append(
            f'<circle class="goal" cx="{X(goal.x):.2f}" cy="{Y(goal.y):.2f}" r="{goal.radius * px_per_m:.2f}" '
            'fill="none" stroke="#2ca02c" stroke-width="1.5"/>'
        )
    out.append("</svg>")
    return "\n".join(out) + "\n"


def write_svg(path, *args, **kwargs) -> Path:
    path = Path(path)
    path.write_text(plan_svg(*args, **kwargs))
    return path
