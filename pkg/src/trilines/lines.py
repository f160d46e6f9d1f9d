"""Poisson line process with three directions, restricted to a square window."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .geometry import NORMALS, DirectedLine, Weights

DUPLICATE_TOL = 1e-12


@dataclass(frozen=True)
class Window:
    """The square [-R, R]^2 with an inner observation box [-R f, R f]^2."""

    half_width: float = 60.0
    inner_fraction: float = 0.25

    def __post_init__(self) -> None:
        if not self.half_width > 0:
            raise ValueError(f"window half-width must be positive, got {self.half_width}")
        if not 0 < self.inner_fraction < 1:
            raise ValueError(f"inner fraction must lie in (0, 1), got {self.inner_fraction}")

    @property
    def inner_half_width(self) -> float:
        return self.half_width * self.inner_fraction

    @property
    def inner_area(self) -> float:
        return (2 * self.inner_half_width) ** 2

    @property
    def offset_range(self) -> float:
        """Offsets are sampled on [-R sqrt2, R sqrt2]."""
        return self.half_width * math.sqrt(2.0)

    def in_inner_box(self, xy: np.ndarray) -> np.ndarray:
        h = self.inner_half_width
        xy = np.asarray(xy)
        return (np.abs(xy[..., 0]) < h) & (np.abs(xy[..., 1]) < h)


@dataclass(frozen=True)
class LineRealization:
    lines: tuple[DirectedLine, ...]
    weights: Weights
    window: Window
    seed: int | None = None

    @property
    def families(self) -> np.ndarray:
        return np.array([ln.family for ln in self.lines], dtype=int)

    @property
    def offsets(self) -> np.ndarray:
        return np.array([ln.offset for ln in self.lines], dtype=float)

    def hits_window(self) -> np.ndarray:
        """Mask of lines meeting the closed window."""
        if not self.lines:
            return np.zeros(0, dtype=bool)
        n = NORMALS[self.families]
        support = self.window.half_width * (np.abs(n[:, 0]) + np.abs(n[:, 1]))
        return np.abs(self.offsets) <= support

    def to_json(self) -> str:
        def num(x):
            return str(x) if isinstance(x, Fraction) else x

        return json.dumps(
            {
                "seed": self.seed,
                "R": self.window.half_width,
                "inner_fraction": self.window.inner_fraction,
                "weights": {"p": num(self.weights.p), "q": num(self.weights.q)},
                "lines": [{"family": ln.family, "offset": ln.offset} for ln in self.lines],
            }
        )

    @classmethod
    def from_json(cls, text: str) -> "LineRealization":
        d = json.loads(text)
        lines = tuple(
            DirectedLine(int(e["family"]), float(e["offset"]), i)
            for i, e in enumerate(d["lines"])
        )
        w = Weights(d["weights"]["p"], d["weights"]["q"])
        win = Window(float(d["R"]), float(d.get("inner_fraction", 0.25)))
        return cls(lines, w, win, d.get("seed"))


def family_streams(seed: int) -> list[np.random.Generator]:
    """One independent generator per direction family."""
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(3)]


def sample_lines(w: Weights, window: Window, seed: int) -> LineRealization:
    """Sample all lines with offsets in [-R sqrt2, R sqrt2].

    Family k gets Poisson(w_k * 2 R sqrt2) lines with uniform offsets, drawn
    from its own substream.  Lines that miss the square are kept (the
    arrangement skips them) so the per-family counts keep their Poisson law.
    """
    half = window.offset_range
    lines: list[DirectedLine] = []
    for k, (rng, wk) in enumerate(zip(family_streams(seed), w.family_weights())):
        count = rng.poisson(float(wk) * 2 * half)
        offs = rng.uniform(-half, half, size=count)
        # duplicates have probability zero; redraw until none remain
        while count > 1:
            srt = np.sort(offs)
            if np.all(np.diff(srt) > DUPLICATE_TOL):
                break
            offs = rng.uniform(-half, half, size=count)
        for o in offs:
            lines.append(DirectedLine(k, float(o), len(lines)))
    return LineRealization(tuple(lines), w, window, seed)


def vertex_intensity(w: Weights) -> float:
    """Mean number of line crossings per unit area."""
    p, q, r = (float(x) for x in w.family_weights())
    return math.sqrt(3.0) / 2.0 * (p * q + q * r + r * p)


def expected_cells_in_box(w: Weights, window: Window) -> float:
    """Rough count of cells whose lex-min vertex lies in the inner box.

    Every crossing is the lex-min vertex of exactly one cell, so the cell
    intensity equals the crossing intensity.
    """
    return vertex_intensity(w) * window.inner_area
