import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from sklearn.base import clone

from footplan.worldmap import (
    UNKNOWN,
    Box,
    ElevationMap,
    Grid,
    Hole,
    MapError,
    NoisePatch,
    Ramp,
    TerrainFilter,
    build_map,
    export_layer_csv,
    export_layer_png,
    filter_chain,
    query,
    rasterize,
    read_layer_csv,
    traversability_value,
    update_region,
)


def scene(prims=(), size=(3.0, 3.0), res=0.05, origin=(0.0, 0.0), seed=0):
    return SimpleNamespace(grid=Grid.from_extent(*size, res, origin), primitives=list(prims), seed=seed)


def flat(n=20, res=0.05):
    return ElevationMap(res, (0.0, 0.0), np.zeros((n, n)), np.ones((n, n), bool))


def test_empty_world_is_flat():
    m = build_map(scene())
    assert m.shape == (60, 60)
    assert np.all(m.height == 0.0)
    assert not m.is_filtered and m.traversability is None


def test_single_box():
    m = build_map(scene([Box("b", 1.0, 1.0, 0.5, 0.5, 0.3)]))
    xs, ys = m.cell_centers()
    inside = (np.abs(ys[:, None] - 1.0) < 0.25) & (np.abs(xs[None, :] - 1.0) < 0.25)
    assert inside.sum() == 100
    assert np.all(m.height[inside] == 0.3)
    assert np.all(m.height[~inside] == 0.0)


def test_overlapping_boxes_take_max():
    m = build_map(scene([Box("low", 1.0, 1.0, 0.5, 0.5, 0.1), Box("high", 1.2, 1.0, 0.5, 0.5, 0.3)]))
    assert query(m, 1.1, 1.0).height == 0.3
    assert query(m, 0.8, 1.0).height == 0.1
    assert query(m, 1.4, 1.0).height == 0.3


def test_out_of_bounds_primitive_named():
    with pytest.raises(MapError, match="crate"):
        build_map(scene([Box("crate", 2.9, 1.0, 0.5, 0.5, 0.3)]))


def test_ramp_and_hole():
    m = build_map(scene([Ramp("r", 0.0, 2.0, 0.0, 1.0, 0.2), Hole("h", 2.5, 3.0, 2.5, 3.0)]))
    assert query(m, 1.025, 0.5).height == pytest.approx(math.tan(0.2) * 1.025)
    hole = query(m, 2.7, 2.7)
    assert hole.known and not hole.valid and math.isnan(hole.height)


def test_noise_is_seed_deterministic():
    prims = [NoisePatch("n", 0.5, 2.5, 0.5, 2.5, 0.02)]
    a = build_map(scene(prims, seed=4))
    b = build_map(scene(prims, seed=4))
    c = build_map(scene(prims, seed=5))
    assert np.array_equal(a.height, b.height)
    assert not np.array_equal(a.height, c.height)
    assert np.nanmax(np.abs(a.height)) <= 0.02


def test_noise_does_not_depend_on_list_order():
    n = NoisePatch("n", 0.5, 2.5, 0.5, 2.5, 0.02)
    b = Box("b", 0.2, 0.2, 0.2, 0.2, 0.5)
    assert np.array_equal(build_map(scene([n, b], seed=1)).height, build_map(scene([b, n], seed=1)).height)


def test_query_contract():
    m = filter_chain(build_map(scene()))
    c = query(m, 1.5, 1.5)
    assert c.height == 0.0 and c.traversability == 1.0
    assert query(m, -10, -10) is UNKNOWN
    # cell boundaries are lower-inclusive
    assert m.cell_index(0.05, 0.10) == (1, 2)
    assert m.cell_index(0.0, 0.0) == (0, 0)
    assert m.cell_index(3.0, 1.0) is None


def test_flat_filter():
    m = filter_chain(flat())
    assert np.all(m.slope == 0.0)
    assert np.all(m.roughness == 0.0)
    assert np.all(m.traversability == 1.0)
    assert np.all(m.normal_z == 1.0)


def test_constant_map_has_zero_roughness():
    m = filter_chain(ElevationMap(0.05, (0.0, 0.0), np.full((15, 15), 0.7), np.ones((15, 15), bool)))
    assert np.allclose(m.roughness, 0.0, atol=1e-12)


@pytest.mark.parametrize("s", [0.0, 0.1, 0.3, 0.45, 0.6])
def test_plane_slope_recovered(s):
    n = 30
    xs = (np.arange(n) + 0.5) * 0.05
    h = np.tile(math.tan(s) * xs, (n, 1))
    m = filter_chain(ElevationMap(0.05, (0.0, 0.0), h, np.ones_like(h, bool)))
    interior = m.slope[3:-3, 3:-3]
    assert np.max(np.abs(interior - s)) < 0.02


def test_traversability_formula():
    assert traversability_value(0.6, 0.0) == 0.5
    assert traversability_value(0.6, 0.1) == 0.0
    assert traversability_value(0.0, 0.0) == 1.0
    assert traversability_value(0.0, -0.05) == 0.75  # magnitude of roughness
    assert traversability_value(0.3, 0.02) == pytest.approx(0.5 * 0.5 + 0.5 * 0.8)


def _disk_mean_oracle(h, valid, res, radius):
    ny, nx = h.shape
    out = np.full(h.shape, np.nan)
    r = int(radius / res + 1e-9)
    for j in range(ny):
        for i in range(nx):
            vals = []
            for dj in range(-r, r + 1):
                for di in range(-r, r + 1):
                    jj, ii = j + dj, i + di
                    if (di * di + dj * dj) * res * res <= radius * radius + 1e-12 and 0 <= jj < ny and 0 <= ii < nx \
                            and valid[jj, ii]:
                        vals.append(h[jj, ii])
            out[j, i] = np.mean(vals)
    return out


@given(arrays(np.float64, (7, 8), elements=st.floats(-0.3, 0.3)))
@settings(max_examples=25, deadline=None)
def test_smoothed_matches_disk_average_and_stays_in_range(h):
    valid = np.ones(h.shape, bool)
    valid[0, 0] = False
    h = np.where(valid, h, np.nan)
    m = filter_chain(ElevationMap(0.05, (0.0, 0.0), h, valid), 0.1)
    want = _disk_mean_oracle(h, valid, 0.05, 0.1)
    assert np.allclose(m.smoothed_height[valid], want[valid], atol=1e-12)
    t = m.traversability[valid]
    assert np.all((t >= 0) & (t <= 1))
    for j, i in zip(*np.nonzero(valid)):
        lo = np.nanmin(h[max(j - 2, 0):j + 3, max(i - 2, 0):i + 3])
        hi = np.nanmax(h[max(j - 2, 0):j + 3, max(i - 2, 0):i + 3])
        assert lo - 1e-12 <= m.smoothed_height[j, i] <= hi + 1e-12


def test_invalid_cells_propagate():
    valid = np.ones((10, 10), bool)
    valid[4, 4] = False
    h = np.where(valid, 0.0, np.nan)
    m = filter_chain(ElevationMap(0.05, (0.0, 0.0), h, valid))
    assert math.isnan(m.traversability[4, 4])
    assert m.traversability[4, 5] == 1.0


def test_avg_radius_must_cover_a_cell():
    with pytest.raises(MapError):
        filter_chain(flat(), avg_radius=0.01)


def test_layers_are_read_only():
    m = filter_chain(flat())
    with pytest.raises(ValueError):
        m.height[0, 0] = 1.0


def test_update_region_matches_full_rebuild():
    base = [Box("a", 1.0, 1.0, 0.4, 0.4, 0.2), NoisePatch("n", 0.2, 2.8, 0.2, 2.8, 0.01)]
    sc = scene(base, seed=3)
    m0 = filter_chain(build_map(sc))
    person = Box("p", 2.0, 1.5, 0.4, 0.4, 1.7)
    moved = [base[1], person]  # "a" removed, "p" inserted
    m1 = update_region(m0, moved, [base[0], person], sc.grid, 3)
    full = filter_chain(build_map(scene(moved, seed=3)))
    for name in ("height", "smoothed_height", "slope", "roughness", "traversability"):
        np.testing.assert_allclose(getattr(m1, name), getattr(full, name), atol=1e-12, equal_nan=True)


def test_terrain_filter_estimator_api():
    tf = TerrainFilter(avg_radius=0.15)
    assert tf.get_params()["avg_radius"] == 0.15
    assert clone(tf).get_params() == tf.get_params()
    out = tf.fit_transform(np.zeros((12, 12)))
    assert out.is_filtered and np.all(out.traversability == 1.0)
    with pytest.raises(ValueError):
        TerrainFilter().fit(np.zeros(5))
    with pytest.raises(ValueError):
        TerrainFilter(avg_radius=0.01).fit(np.zeros((4, 4)))


def test_csv_round_trip(tmp_path):
    m = filter_chain(build_map(scene([Box("b", 1.0, 1.0, 0.5, 0.5, 0.3)])))
    path = export_layer_csv(m, "height", tmp_path / "h.csv")
    meta, arr = read_layer_csv(path)
    assert meta["layer"] == "height" and float(meta["resolution"]) == 0.05
    assert int(meta["rows"]) == 60 and int(meta["cols"]) == 60
    np.testing.assert_allclose(arr, m.height, atol=1e-6)


def test_png_export(tmp_path):
    from PIL import Image

    m = filter_chain(build_map(scene([Box("b", 1.0, 0.5, 0.5, 0.5, 0.3)])))
    path = export_layer_png(m, "height", tmp_path / "h.png")
    img = np.asarray(Image.open(path))
    assert img.shape == (60, 60) and img.max() == 255
    # +y is up in the image, so the box shows in the lower half
    assert img[40:, :].max() == 255 and img[:20, :].max() == 0


def test_unfiltered_layer_access_fails():
    with pytest.raises(MapError):
        flat().layer("slope")


def test_rasterize_window_matches_full():
    prims = [Box("b", 1.0, 1.0, 0.5, 0.5, 0.3), NoisePatch("n", 0.0, 3.0, 0.0, 3.0, 0.01)]
    g = Grid.from_extent(3, 3, 0.05)
    full, _ = rasterize(prims, g, 2)
    part, _ = rasterize(prims, g, 2, (slice(10, 30), slice(5, 25)))
    assert np.array_equal(full[10:30, 5:25], part)
