"""Angles, weights, lines and polygon helpers shared by the whole package.

The three line families have directions 0, pi/3 and 2pi/3 and carry the
weights p, q and r = 1 - p - q.  Everything else in the package is built on
the small set of primitives defined here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence, Union

import numpy as np

Number = Union[int, float, Fraction]

SQRT3 = math.sqrt(3.0)
HALF_SQRT3 = SQRT3 / 2.0

# Family index k has direction angle k * pi / 3.
FAMILY_ANGLES = (0.0, math.pi / 3.0, 2.0 * math.pi / 3.0)
DIRECTIONS = np.array([[math.cos(a), math.sin(a)] for a in FAMILY_ANGLES])
# Unit normals: directions rotated by +pi/2.
NORMALS = np.array([[-math.sin(a), math.cos(a)] for a in FAMILY_ANGLES])

COINCIDENCE_TOL = 1e-9
CLOSURE_TOL = 1e-9

# Signed angles are handled as integer multiples of pi/3 in {-2..2}; the
# floating value is only used for trigonometry.
_ANGLE_STEP = math.pi / 3.0


class WeightsError(ValueError):
    """Raised for weights outside the open simplex."""


def _as_number(x: Number | str) -> Number:
    if isinstance(x, str):
        x = x.strip()
        if "/" in x:
            return Fraction(x)
        try:
            return Fraction(int(x))
        except ValueError:
            return float(x)
    if isinstance(x, bool):
        raise WeightsError(f"not a probability: {x!r}")
    if isinstance(x, Rational):
        return Fraction(x)
    return float(x)


@dataclass(frozen=True)
class Weights:
    """Directional weights (p, q) with r = 1 - p - q.

    Rational inputs (ints, Fractions, or strings like ``"1/3"``) are kept as
    exact Fractions; anything else is stored as a float.
    """

    p: Number
    q: Number

    def __post_init__(self) -> None:
        p = _as_number(self.p)
        q = _as_number(self.q)
        if isinstance(p, Fraction) != isinstance(q, Fraction):
            p, q = float(p), float(q)
        if not (0 < p < 1 and 0 < q < 1 and p + q < 1):
            raise WeightsError(
                f"weights must satisfy 0 < p, q and p + q < 1; got p={p}, q={q}"
            )
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @property
    def r(self) -> Number:
        return 1 - self.p - self.q

    @property
    def exact(self) -> bool:
        return isinstance(self.p, Fraction)

    def family_weights(self) -> tuple[Number, Number, Number]:
        """Weights of the families at angles 0, pi/3, 2pi/3."""
        return (self.p, self.q, self.r)

    def as_float(self) -> "Weights":
        return Weights(float(self.p), float(self.q))

    def permuted(self, order: Sequence[int]) -> "Weights":
        """Weights with families relabelled, e.g. ``(1, 2, 0)`` gives (q, r)."""
        ws = self.family_weights()
        return Weights(ws[order[0]], ws[order[1]])


# --------------------------------------------------------------------------
# angles


def angle_to_steps(phi: float) -> int:
    """Signed angle in (-pi, pi) as an integer multiple of pi/3.

    Only the six values 0, +-pi/3, +-2pi/3 (and -pi, used for the closing
    side of a polygon walk) are accepted.
    """
    k = round(phi / _ANGLE_STEP)
    if abs(phi - k * _ANGLE_STEP) > 1e-9 or not -3 <= k <= 2:
        raise ValueError(f"angle {phi!r} is not a multiple of pi/3 in [-pi, pi)")
    return k


def normalize_angle(phi: float) -> int:
    """Map an admissible signed angle to its family index k (angle k*pi/3).

    Negative angles are identified with pi - |phi|, so -pi/3 -> 2pi/3 and
    -2pi/3 -> pi/3.
    """
    k = angle_to_steps(phi)
    if k == -3:
        raise ValueError("angle -pi is not in the open interval (-pi, pi)")
    return k % 3


def steps_family(k: int) -> int:
    """Family index of a signed step count (any integer multiple of pi/3)."""
    return k % 3


def lambda_of(family: int, w: Weights) -> float:
    """Intensity functional of a direction family.

    Evaluates ``p|sin(phi)| + q|sin(pi/3 - phi)| + r|sin(2pi/3 - phi)|`` in the
    closed form ``(sqrt3/2) * (1 - w_family)``.
    """
    if family not in (0, 1, 2):
        raise ValueError(f"family index must be 0, 1 or 2, got {family!r}")
    return HALF_SQRT3 * float(1 - w.family_weights()[family])


def lambda_of_direct(phi: float, w: Weights) -> float:
    """The defining trigonometric sum; used to cross-check :func:`lambda_of`."""
    p, q, r = (float(x) for x in w.family_weights())
    return (
        p * abs(math.sin(phi))
        + q * abs(math.sin(math.pi / 3 - phi))
        + r * abs(math.sin(2 * math.pi / 3 - phi))
    )


def lambda_total(w: Weights) -> float:
    p, q = float(w.p), float(w.q)
    return SQRT3 * (p + q - p * p - q * q - p * q)


# --------------------------------------------------------------------------
# lines


class ParallelLinesError(ValueError):
    pass


@dataclass(frozen=True)
class DirectedLine:
    """Line ``{x : <x, n_family> = offset}`` of one of the three families."""

    family: int
    offset: float
    id: int = -1

    def point_at(self, s: float) -> np.ndarray:
        return self.offset * NORMALS[self.family] + s * DIRECTIONS[self.family]


def intersect(a: DirectedLine, b: DirectedLine) -> np.ndarray:
    """Intersection point of two lines from different families."""
    if a.family == b.family:
        raise ParallelLinesError(
            f"lines {a.id} and {b.id} are parallel (family {a.family})"
        )
    # Solve [n_a; n_b] x = [o_a; o_b]; order the pair so the result is
    # bitwise symmetric in the arguments.
    if (a.family, a.offset) > (b.family, b.offset):
        a, b = b, a
    m = np.array([NORMALS[a.family], NORMALS[b.family]])
    return np.linalg.solve(m, np.array([a.offset, b.offset]))


# --------------------------------------------------------------------------
# polygons


@dataclass(frozen=True)
class Polygon:
    """Polygon as a vertex loop together with its side lengths and directions.

    Side i runs from vertex i to vertex i + 1 (cyclically).  Polygons built by
    :meth:`from_walk` keep the lengths and angles they were built from, so a
    walk that fails to close shows up in :func:`closing_residual`.
    """

    vertices: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(default=None, repr=False)
    angles: np.ndarray = field(default=None, repr=False)

    def __post_init__(self) -> None:
        v = np.array(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or len(v) == 0:
            raise ValueError("vertices must be a nonempty (n, 2) array")
        if self.lengths is None:
            e = np.roll(v, -1, axis=0) - v
            z = np.hypot(e[:, 0], e[:, 1])
            a = np.arctan2(e[:, 1], e[:, 0])
        else:
            z = np.array(self.lengths, dtype=float)
            a = np.array(self.angles, dtype=float)
            if z.shape != (len(v),) or a.shape != (len(v),):
                raise ValueError("need one length and one angle per vertex")
        for arr in (v, z, a):
            arr.setflags(write=False)
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "lengths", z)
        object.__setattr__(self, "angles", a)

    @classmethod
    def from_walk(
        cls, lengths: Sequence[float], angles: Sequence[float], start=(0.0, 0.0)
    ) -> "Polygon":
        """Walk ``lengths[i]`` along direction ``angles[i]`` starting at ``start``.

        The last step only closes the loop; it does not place a vertex.
        """
        pts = [np.asarray(start, dtype=float)]
        for z, a in zip(lengths[:-1], angles[:-1]):
            pts.append(pts[-1] + z * np.array([math.cos(a), math.sin(a)]))
        return cls(np.array(pts), lengths, angles)

    @property
    def n(self) -> int:
        return len(self.vertices)

    def edges(self) -> np.ndarray:
        return np.roll(self.vertices, -1, axis=0) - self.vertices

    def translated(self, dx: float, dy: float) -> "Polygon":
        return Polygon(self.vertices + np.array([dx, dy]), self.lengths, self.angles)

    def rotated(self, theta: float) -> "Polygon":
        c, s = math.cos(theta), math.sin(theta)
        rot = np.array([[c, -s], [s, c]])
        return Polygon(self.vertices @ rot.T, self.lengths, self.angles + theta)

    def area(self) -> float:
        """Signed shoelace area; positive for counterclockwise loops."""
        x, y = self.vertices.T
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    def is_convex(self, tol: float = 1e-12) -> bool:
        """Strictly convex with one turning direction throughout."""
        e = self.edges()
        cross = e[:, 0] * np.roll(e[:, 1], -1) - e[:, 1] * np.roll(e[:, 0], -1)
        scale = max(float(np.max(np.abs(e))), 1.0) ** 2
        return bool(np.all(cross > tol * scale) or np.all(cross < -tol * scale))

    def is_simple(self) -> bool:
        """True if no two non-adjacent sides meet and no side is degenerate."""
        v = self.vertices
        n = len(v)
        if n < 3 or np.any(np.hypot(*self.edges().T) == 0):
            return False
        for i in range(n):
            for j in range(i + 2, n):
                if i == 0 and j == n - 1:
                    continue
                if _segments_meet(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]):
                    return False
        return True


def _orient(a, b, c) -> float:
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])


def _on_segment(a, b, c) -> bool:
    return min(a[0], b[0]) <= c[0] <= max(a[0], b[0]) and min(a[1], b[1]) <= c[
        1
    ] <= max(a[1], b[1])


def _segments_meet(a, b, c, d) -> bool:
    d1, d2 = _orient(c, d, a), _orient(c, d, b)
    d3, d4 = _orient(a, b, c), _orient(a, b, d)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and (
        (d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)
    ):
        return True
    return (
        (d1 == 0 and _on_segment(c, d, a))
        or (d2 == 0 and _on_segment(c, d, b))
        or (d3 == 0 and _on_segment(a, b, c))
        or (d4 == 0 and _on_segment(a, b, d))
    )


def closing_residual(poly: Polygon) -> float:
    """``max(|sum z_i sin phi_i|, |sum z_i cos phi_i|)`` over all sides."""
    return max(
        abs(float(np.dot(poly.lengths, np.sin(poly.angles)))),
        abs(float(np.dot(poly.lengths, np.cos(poly.angles)))),
    )


def lex_min_vertex(poly: Polygon | np.ndarray) -> np.ndarray:
    """Vertex minimal in x, ties broken by smaller y."""
    v = poly.vertices if isinstance(poly, Polygon) else np.asarray(poly, float)
    if len(v) == 0:
        raise ValueError("empty vertex list")
    i = np.lexsort((v[:, 1], v[:, 0]))[0]
    return v[i]
