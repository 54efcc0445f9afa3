import json

import numpy as np
import pytest

from pitchkde.errors import InvalidArgumentError
from pitchkde.kde import DensityGrid, GridSpec, evaluate_grid, fit
from pitchkde.pipeline import difference_grid
from pitchkde.render import (
    DIVERGING_MAP,
    SEQUENTIAL_MAP,
    ColorMap,
    read_ppm,
    render_diff,
    render_heatmap,
)

WHITE = [255, 255, 255]
BLUE = [8, 48, 160]
RED = [200, 30, 30]
GREEN = [20, 150, 40]


def grid(values, cell=1.0):
    v = np.asarray(values, dtype=float)
    rows, cols = v.shape
    return DensityGrid(GridSpec(0, cols * cell, 0, rows * cell, cell), v, signed=bool((v < 0).any()))


def test_header_and_geometry():
    data = render_heatmap(grid(np.ones((3, 5))))
    assert data.startswith(b"P6\n5 3\n255\n")
    assert read_ppm(data).shape == (3, 5, 3)


def test_all_zero_is_zero_anchor():
    img = read_ppm(render_heatmap(grid(np.zeros((4, 3)))))
    assert (img == WHITE).all()


def test_single_max_cell():
    v = np.full((3, 3), 0.2)
    v[0, 2] = 1.0
    img = read_ppm(render_heatmap(grid(v)))
    hits = np.argwhere((img == BLUE).all(axis=2))
    # values row 0 is the lowest y, drawn in the bottom image row
    assert hits.tolist() == [[2, 2]]


def test_two_by_two_interpolation():
    m = 3.0
    img = read_ppm(render_heatmap(grid([[0.0, m], [m / 2, m]])))
    # halfway between white and (8, 48, 160), halves rounded up
    assert img[0, 0].tolist() == [132, 152, 208]
    assert img[0, 1].tolist() == BLUE
    assert img[1, 0].tolist() == WHITE
    assert img[1, 1].tolist() == BLUE


def test_fixed_scale_clips():
    img = read_ppm(render_heatmap(grid([[1.0, 4.0]]), scale=2.0))
    assert img[0, 0].tolist() == [132, 152, 208]
    assert img[0, 1].tolist() == BLUE
    with pytest.raises(InvalidArgumentError):
        render_heatmap(grid([[1.0]]), scale=-1.0)


def test_heatmap_rejects_negative_and_wrong_kind():
    with pytest.raises(InvalidArgumentError):
        render_heatmap(grid([[1.0, -1.0]]))
    with pytest.raises(InvalidArgumentError):
        render_heatmap(grid([[1.0]]), DIVERGING_MAP)
    with pytest.raises(InvalidArgumentError):
        render_diff(grid([[1.0]]), SEQUENTIAL_MAP)


def test_zero_diff_is_neutral():
    img = read_ppm(render_diff(grid(np.zeros((2, 4)))))
    assert (img == WHITE).all()


def test_diff_extremes_and_symmetry():
    img = read_ppm(render_diff(grid([[-2.0, 0.0, 1.0, 2.0]])))
    assert img[0, 0].tolist() == RED
    assert img[0, 1].tolist() == WHITE
    assert img[0, 3].tolist() == GREEN
    # 1.0 sits three quarters up the shared [-2, 2] scale
    assert img[0, 2].tolist() == [138, 203, 148]


def test_asymmetric_scale():
    img = read_ppm(render_diff(grid([[-4.0, 1.0]]), symmetric_scale=False))
    assert img[0, 0].tolist() == RED
    assert img[0, 1].tolist() == GREEN


def test_negation_mirrors_about_midpoint():
    rng = np.random.default_rng(0)
    v = rng.normal(size=(6, 7))
    cmap = ColorMap("diverging", ((0.0, (0, 0, 0)), (0.5, (100, 100, 100)), (1.0, (200, 200, 200))))
    a = read_ppm(render_diff(grid(v), cmap)).astype(int)
    b = read_ppm(render_diff(grid(-v), cmap)).astype(int)
    assert np.all(np.abs(a + b - 200) <= 1)


def test_deterministic_bytes():
    g = evaluate_grid(fit([(20.0, 30.0), (40.0, 70.0)], 30.0), GridSpec(-10, 80, -20, 120, 1.0))
    assert render_heatmap(g) == render_heatmap(g)


def test_colormap_validation(tmp_path):
    with pytest.raises(InvalidArgumentError):
        ColorMap("rainbow", ((0.0, (0, 0, 0)), (1.0, (1, 1, 1))))
    with pytest.raises(InvalidArgumentError):
        ColorMap("sequential", ((0.2, (0, 0, 0)), (1.0, (1, 1, 1))))
    with pytest.raises(InvalidArgumentError):
        ColorMap("sequential", ((0.0, (0, 0, 0)), (1.0, (300, 1, 1))))
    with pytest.raises(InvalidArgumentError):
        ColorMap("diverging", ((0.0, (0, 0, 0)), (0.4, (9, 9, 9)), (1.0, (1, 1, 1))))
    path = tmp_path / "cmap.json"
    path.write_text(json.dumps({"kind": "sequential", "anchors": [[0, [0, 0, 0]], [1, [255, 0, 0]]]}))
    cmap = ColorMap.load(path)
    assert read_ppm(render_heatmap(grid([[1.0]]), cmap))[0, 0].tolist() == [255, 0, 0]


def test_left_biased_diff_pixels():
    spec = GridSpec(-10, 80, -20, 120, 1.0)
    rng = np.random.default_rng(1)
    league = rng.uniform([0, -10], [70, 110], (2000, 2))
    left = np.column_stack([rng.normal(12, 6, 1000).clip(0, 70), rng.uniform(-10, 110, 1000)])
    d = difference_grid(evaluate_grid(fit(left, 20.0), spec), evaluate_grid(fit(league, 20.0), spec))
    img = read_ppm(render_diff(d)).astype(int)
    greenish = (img[:, :, 1] > img[:, :, 0] + 20)
    reddish = (img[:, :, 0] > img[:, :, 1] + 20)
    half = np.argmin(np.abs(spec.x_centers() - 35))
    assert greenish[:, :half].sum() > 2 * greenish[:, half:].sum()
    assert reddish[:, half:].sum() > 2 * reddish[:, :half].sum()
