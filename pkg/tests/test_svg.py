import xml.etree.ElementTree as ET

import numpy as np

from trilines import svg
from trilines.arrangement import build
from trilines.cells import sample_typical_cells
from trilines.geometry import Weights
from trilines.lines import Window, sample_lines

NS = "{http://www.w3.org/2000/svg}"


def parse(text):
    root = ET.fromstring(text.encode())
    assert root.tag == NS + "svg"
    return root


def test_color_ramp_endpoints_and_steps():
    assert svg.color_ramp(0.0) == "#440154"
    assert svg.color_ramp(1.0) == "#fde725"
    assert svg.color_ramp(-3) == svg.color_ramp(0) and svg.color_ramp(7) == svg.color_ramp(1)
    colours = {svg.color_ramp(t) for t in np.linspace(0, 1, 2000)}
    assert len(colours) <= 256


def test_tessellation_has_all_tints():
    win = Window(25.0)
    arr = build(sample_lines(Weights("1/3", "1/3"), win, 1))
    root = parse(svg.tessellation_svg(arr, inner_half_width=win.inner_half_width))
    fills = {p.get("fill") for p in root.iter(NS + "polygon")}
    assert {svg.FACE_TINTS[n] for n in (3, 4, 5, 6)} <= fills


def test_two_family_limit_draws_only_quadrilaterals():
    arr = build(sample_lines(Weights(1e-6, 0.5), Window(15.0), 2))
    root = parse(svg.tessellation_svg(arr))
    interior = [p for p in root.iter(NS + "polygon") if p.get("fill") != svg.BOUNDARY_TINT]
    assert interior and all(p.get("data-n") == "4" for p in interior)


def test_cells_svg_labels():
    cells = sample_typical_cells(Weights(0.2, 0.3), 5, 0)
    root = parse(svg.cells_svg(cells))
    texts = [t.text for t in root.iter(NS + "text")]
    assert len(texts) == 5 and all(t.startswith(c.label) for t, c in zip(texts, cells))


def test_heatmap_structure():
    pts = [(0.1, 0.1), (0.1, 0.2), (0.2, 0.1)]
    root = parse(svg.heatmap_svg(pts, [0.0, 0.5, 1.0], 0.1, title="a < b & c"))
    cells = [r for r in root.iter(NS + "rect") if r.find(NS + "title") is not None]
    assert len(cells) == 3
    assert cells[2].get("fill") == svg.color_ramp(1.0)
    assert any(t.text == "a < b & c" for t in root.iter(NS + "text"))
