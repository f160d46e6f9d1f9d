import json
import math

import numpy as np
import pytest
from scipy import stats

from trilines.geometry import Weights
from trilines.lines import (
    LineRealization,
    Window,
    expected_cells_in_box,
    sample_lines,
    vertex_intensity,
)

W = Weights(0.2, 0.3)


def test_window_validation():
    with pytest.raises(ValueError):
        Window(0.0)
    with pytest.raises(ValueError):
        Window(10.0, 1.0)
    win = Window(10.0, 0.25)
    assert win.inner_half_width == 2.5 and win.inner_area == 25.0
    assert win.offset_range == pytest.approx(10 * math.sqrt(2))


def test_inner_box_is_open():
    win = Window(4.0, 0.5)
    pts = np.array([[0.0, 0.0], [2.0, 0.0], [1.999, -1.999], [0.0, -2.0]])
    assert win.in_inner_box(pts).tolist() == [True, False, True, False]


def test_family_counts_are_poisson():
    win = Window(8.0)
    counts = np.array([np.bincount(sample_lines(W, win, s).families, minlength=3) for s in range(600)])
    for k, wk in enumerate(W.family_weights()):
        mu = float(wk) * 2 * win.offset_range
        se = math.sqrt(mu / len(counts))
        assert abs(counts[:, k].mean() - mu) < 4 * se
        # Poisson dispersion: variance equals mean
        assert counts[:, k].var(ddof=1) == pytest.approx(mu, rel=0.2)


def test_offsets_uniform():
    win = Window(30.0)
    offs = np.concatenate([sample_lines(W, win, s).offsets for s in range(20)])
    h = win.offset_range
    assert stats.kstest(offs, stats.uniform(-h, 2 * h).cdf).pvalue > 0.01


def test_families_use_separate_streams():
    win = Window(10.0)
    a = sample_lines(Weights(0.2, 0.3), win, 9)
    b = sample_lines(Weights(0.2, 0.5), win, 9)
    fa = a.offsets[a.families == 0]
    fb = b.offsets[b.families == 0]
    assert np.array_equal(fa, fb)


def test_determinism_and_json_round_trip():
    win = Window(10.0, 0.3)
    a = sample_lines(W, win, 42)
    assert a.to_json() == sample_lines(W, win, 42).to_json()
    back = LineRealization.from_json(a.to_json())
    assert np.array_equal(back.offsets, a.offsets) and np.array_equal(back.families, a.families)
    assert back.window == win and back.seed == 42
    assert json.loads(a.to_json())["weights"] == {"p": 0.2, "q": 0.3}


def test_fraction_weights_serialize_as_strings():
    a = sample_lines(Weights("1/3", "1/3"), Window(3.0), 1)
    assert json.loads(a.to_json())["weights"] == {"p": "1/3", "q": "1/3"}
    assert LineRealization.from_json(a.to_json()).weights.exact


def test_hits_window_matches_corner_signs():
    from trilines.geometry import NORMALS

    win = Window(5.0)
    R = win.half_width
    corners = np.array([[-R, -R], [R, -R], [R, R], [-R, R]])
    misses = 0
    for seed in range(20):
        real = sample_lines(W, win, seed)
        side = corners @ NORMALS[real.families].T - real.offsets  # (4, L)
        expected = (side.min(axis=0) <= 0) & (side.max(axis=0) >= 0)
        assert np.array_equal(real.hits_window(), expected)
        misses += int((~expected).sum())
    assert misses > 0


def test_vertex_intensity():
    assert vertex_intensity(Weights("1/3", "1/3")) == pytest.approx(math.sqrt(3) / 6)
    assert expected_cells_in_box(W, Window(10.0, 0.5)) == pytest.approx(vertex_intensity(W) * 100)
