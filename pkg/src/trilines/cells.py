"""Typical-cell density, case tables, quadrature and a direct cell sampler.

A typical cell with n vertices is described by n side directions and n side
lengths.  The cell is anchored at its lowest vertex (leftmost among ties)
and walked clockwise: side i leaves vertex i in direction ``phi_i`` and the
closing side n arrives back at the anchor in direction ``phi_0 - pi``.  The
last two lengths follow from the other n - 2 by closure, so each admissible
direction sequence ("case") carries an (n-2)-dimensional region of free
lengths.  The regions are polyhedral cones and the density on them is the
exponential of a linear form.

Angles are stored as integer multiples of pi/3.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    CLOSURE_TOL,
    HALF_SQRT3,
    Polygon,
    Weights,
    closing_residual,
    lambda_of,
    lambda_total,
    steps_family,
)

STEP = math.pi / 3.0
QUAD_TOL = 1e-10


class QuadratureError(ArithmeticError):
    """Nested quadrature did not reach the requested accuracy."""

    def __init__(self, label: str, estimate: float, error: float):
        super().__init__(
            f"quadrature for case {label} stalled at {estimate!r} "
            f"(estimated error {error:.3g})"
        )
        self.label = label
        self.estimate = estimate
        self.error = error


class SamplerStallError(RuntimeError):
    pass


@dataclass(frozen=True)
class LimitExpr:
    """Integration limit: ``constant + sum coeffs[j] * z_{j+1}``, or infinity."""

    coeffs: tuple[int, ...]
    constant: float = 0.0
    infinite: bool = False

    @classmethod
    def parse(cls, text: str, dim: int) -> "LimitExpr":
        text = text.replace(" ", "")
        if text in ("inf", "oo"):
            return cls((0,) * dim, infinite=True)
        coeffs = [0] * dim
        constant = 0.0
        for sign, body in re.findall(r"([+-]?)([^+-]+)", text):
            s = -1 if sign == "-" else 1
            if body.startswith("z"):
                coeffs[int(body[1:]) - 1] += s
            else:
                constant += s * float(body)
        return cls(tuple(coeffs), constant)

    def __call__(self, z: Sequence[float]) -> float:
        if self.infinite:
            return math.inf
        return self.constant + sum(c * x for c, x in zip(self.coeffs, z) if c)

    def depends_on(self) -> set[int]:
        return set() if self.infinite else {j for j, c in enumerate(self.coeffs) if c}

    def __str__(self) -> str:
        if self.infinite:
            return "inf"
        parts = []
        for j, c in enumerate(self.coeffs):
            if c:
                parts.append(("-" if c < 0 else "+") + (f"{abs(c)}*" if abs(c) != 1 else "") + f"z{j + 1}")
        if self.constant or not parts:
            parts.insert(0, f"{self.constant:g}")
        return "".join(parts).lstrip("+")


@dataclass(frozen=True)
class CaseSpec:
    """One admissible direction sequence with its region of free side lengths.

    ``table_angles`` holds ``phi_0, ..., phi_{n-1}`` in units of pi/3 exactly
    as tabulated; ``directions`` holds the actual signed walk directions of
    sides 1..n (the tabulated triangle rows list one direction by its line
    family only).  ``closing`` expresses sides n-1 and n through the free
    lengths ``z_1..z_{n-2}``.
    """

    label: str
    n: int
    table_angles: tuple[int, ...]
    limits: tuple[tuple[LimitExpr, LimitExpr], ...]
    closing: tuple[LimitExpr, LimitExpr]
    subtype: str | None = None

    @property
    def dim(self) -> int:
        return self.n - 2

    @property
    def angles(self) -> tuple[float, ...]:
        return tuple(k * STEP for k in self.table_angles)

    @property
    def phi0(self) -> int:
        return self.table_angles[0]

    @property
    def directions(self) -> tuple[int, ...]:
        return _walk_directions(self.table_angles)

    @property
    def families(self) -> tuple[int, ...]:
        """Line family of every side 1..n."""
        return tuple(steps_family(d) for d in self.directions)

    @property
    def order(self) -> tuple[int, ...]:
        return _integration_order(self.limits)

    def side_matrix(self) -> np.ndarray:
        """(n, n-2) integer matrix mapping free lengths to all n side lengths."""
        m = np.zeros((self.n, self.dim))
        m[: self.dim] = np.eye(self.dim)
        m[self.dim] = self.closing[0].coeffs
        m[self.dim + 1] = self.closing[1].coeffs
        return m

    def sides(self, z: Sequence[float]) -> np.ndarray:
        return self.side_matrix() @ np.asarray(z, dtype=float)

    def in_region(self, z: Sequence[float]) -> bool:
        z = list(z)
        return all(lo(z) < x < hi(z) for x, (lo, hi) in zip(z, self.limits))

    def polygon(self, z: Sequence[float]) -> Polygon:
        angles = [d * STEP for d in self.directions]
        return Polygon.from_walk(self.sides(z), angles)

    def exponent_coeffs(self, w: Weights) -> np.ndarray:
        """Coefficients c with ``(1/2) sum_i z_i lambda(phi_i) = <c, z_free>``."""
        lam = np.array([lambda_of(f, w) for f in self.families])
        return 0.5 * lam @ self.side_matrix()

    def angle_probability(self, w: Weights):
        """Product of the family weights of ``phi_0, ..., phi_{n-1}``."""
        ws = w.family_weights()
        out = 1
        for k in self.table_angles:
            out = out * ws[steps_family(k)]
        return out


def _walk_directions(table_angles: Sequence[int]) -> tuple[int, ...]:
    """Signed directions of sides 1..n for a clockwise walk.

    Each tabulated angle fixes a line family; the walk direction is the
    representative (k or k - 3) that keeps the directions strictly
    decreasing from ``phi_1`` down to ``phi_0 - 3``.
    """
    phi0 = table_angles[0]
    out = []
    prev = phi0 + 3
    for a in table_angles[1:]:
        cands = [d for d in (a % 3, a % 3 - 3) if d < prev]
        if not cands:
            raise ValueError(f"angles {table_angles} do not turn clockwise")
        out.append(max(cands))
        prev = out[-1]
    if not prev > phi0 - 3 or not out[0] > phi0:
        raise ValueError(f"angles {table_angles} do not form a clockwise loop")
    out.append(phi0 - 3)
    return tuple(out)


def _integration_order(limits) -> tuple[int, ...]:
    remaining = list(range(len(limits)))
    placed: list[int] = []
    while remaining:
        for j in remaining:
            deps = limits[j][0].depends_on() | limits[j][1].depends_on()
            if deps <= set(placed):
                placed.append(j)
                remaining.remove(j)
                break
        else:
            raise ValueError("cyclic dependencies between integration limits")
    return tuple(placed)


def _case(label, angles, limits, closing, subtype=None) -> CaseSpec:
    n = len(angles)
    d = n - 2
    lim = tuple((LimitExpr.parse(lo, d), LimitExpr.parse(hi, d)) for lo, hi in limits)
    clo = tuple(LimitExpr.parse(c, d) for c in closing)
    return CaseSpec(label, n, tuple(angles), lim, clo, subtype)


FREE = ("0", "inf")

_TABLE: dict[int, tuple[CaseSpec, ...]] = {
    3: (
        _case("T1", (0, 1, 2), [FREE], ("z1", "z1")),
        _case("T2", (1, 2, 0), [FREE], ("z1", "z1")),
    ),
    4: (
        _case("Q1", (0, 1, 0, -2), [FREE, FREE], ("z1", "z2"), "para"),
        _case("Q2", (0, 1, 0, -1), [FREE, FREE], ("z1", "z1+z2"), "trap"),
        _case("Q3", (0, 1, -1, -2), [FREE, ("0", "z1")], ("z1-z2", "z2"), "trap"),
        _case("Q4", (0, 2, 0, -2), [FREE, ("z1", "inf")], ("z1", "-z1+z2"), "trap"),
        _case("Q5", (0, 2, 0, -1), [FREE, FREE], ("z1", "z2"), "para"),
        _case("Q6", (0, 2, 1, -1), [FREE, FREE], ("z1+z2", "z2"), "trap"),
        _case("Q7", (1, 2, 1, 0), [FREE, FREE], ("z1", "z1+z2"), "trap"),
        _case("Q8", (1, 2, 1, -1), [FREE, FREE], ("z1", "z2"), "para"),
        _case("Q9", (1, 2, 0, -1), [FREE, ("0", "z1")], ("z1-z2", "z2"), "trap"),
    ),
    5: (
        _case("P1", (0, 1, 0, -1, -2), [FREE, FREE, ("0", "z1")], ("z1-z3", "z2+z3")),
        _case(
            "P2.1",
            (0, 2, 0, -1, -2),
            [FREE, ("z1", "inf"), ("0", "z1")],
            ("z1-z3", "-z1+z2+z3"),
        ),
        _case(
            "P2.2",
            (0, 2, 0, -1, -2),
            [("z2", "inf"), FREE, ("z1-z2", "z1")],
            ("z1-z3", "-z1+z2+z3"),
        ),
        _case("P3", (0, 2, 1, 0, -1), [FREE, FREE, FREE], ("z1+z2", "z2+z3")),
        _case("P4", (0, 2, 1, 0, -2), [FREE, FREE, ("z1", "inf")], ("z1+z2", "-z1+z3")),
        _case(
            "P5",
            (0, 2, 1, -1, -2),
            [FREE, FREE, ("z1", "z1+z2")],
            ("z1+z2-z3", "-z1+z3"),
        ),
        _case("P6", (1, 2, 1, 0, -1), [FREE, FREE, ("0", "z1")], ("z1-z3", "z2+z3")),
    ),
    6: (
        _case(
            "H1.1",
            (0, 2, 1, 0, -1, -2),
            [FREE, FREE, ("0", "z1"), ("z1-z3", "z1+z2")],
            ("z1+z2-z4", "-z1+z3+z4"),
        ),
        _case(
            "H1.2",
            (0, 2, 1, 0, -1, -2),
            [FREE, FREE, ("z1", "inf"), ("0", "z1+z2")],
            ("z1+z2-z4", "-z1+z3+z4"),
        ),
    ),
}


def case_table(n: int) -> tuple[CaseSpec, ...]:
    """All cases producing n-gons (2, 9, 7 and 2 rows for n = 3..6)."""
    try:
        return _TABLE[n]
    except KeyError:
        raise ValueError(f"typical cells have 3 to 6 vertices, not {n!r}") from None


def all_cases() -> tuple[CaseSpec, ...]:
    return tuple(c for n in (3, 4, 5, 6) for c in _TABLE[n])


def get_case(label: str) -> CaseSpec:
    for c in all_cases():
        if c.label == label:
            return c
    raise KeyError(label)


def parent_label(label: str) -> str:
    """Label with any subcase suffix removed ("P2.1" -> "P2")."""
    return label.split(".")[0]


# --------------------------------------------------------------------------
# limits and density


def upper_limit(case: CaseSpec, i: int, z_prefix: Sequence[float]) -> float:
    """Upper limit for ``z_i`` (1-based) from the directions alone.

    When side i points below the anchor line (``phi_i < phi_0``) it may only
    run until it would cross that line again; otherwise it is unbounded.
    """
    if not 1 <= i <= case.dim:
        raise ValueError(f"i must lie in 1..{case.dim}")
    if len(z_prefix) != i - 1:
        raise ValueError(f"need {i - 1} preceding lengths, got {len(z_prefix)}")
    d = case.directions
    phi0 = case.phi0 * STEP
    phi_i = d[i - 1] * STEP
    if d[i - 1] >= case.phi0:
        return math.inf
    height = sum(z * math.sin(d[j] * STEP - phi0) for j, z in enumerate(z_prefix))
    return -height / math.sin(phi_i - phi0)


def density_prefactor(n: int, w: Weights) -> float:
    return 2.0 / lambda_total(w) * HALF_SQRT3 ** (n - 1)


def density_value(case: CaseSpec, z: Sequence[float], w: Weights) -> float:
    """Joint density of the free side lengths (and the case's directions).

    Zero outside the case's region.
    """
    z = np.asarray(z, dtype=float)
    if z.shape != (case.dim,):
        raise ValueError(f"case {case.label} has {case.dim} free lengths")
    if not case.in_region(z):
        return 0.0
    return density_prefactor(case.n, w) * math.exp(-float(case.exponent_coeffs(w) @ z))


# --------------------------------------------------------------------------
# quadrature


@lru_cache(maxsize=None)
def _gauss_legendre01(m: int) -> tuple[np.ndarray, np.ndarray]:
    x, wts = np.polynomial.legendre.leggauss(m)
    return (x + 1) / 2, wts / 2


def _cone_integral(case: CaseSpec, c: np.ndarray, m: int) -> float:
    """``int_region exp(-<c, z>) dz`` with m Gauss nodes per reduced axis.

    The outermost variable is scaled out (``z = z_o * (1, t)``), its integral
    is done in closed form, and the remaining bounded-or-semi-infinite axes
    are mapped to [0, 1]; the resulting integrand is a smooth rational
    function, so tensor Gauss-Legendre converges geometrically.
    """
    order = case.order
    d = case.dim
    if d == 1:
        return 1.0 / c[0]
    nodes, weights = _gauss_legendre01(m)
    # batch of partial points: z has z[order[0]] = 1
    z = np.zeros((1, d))
    z[:, order[0]] = 1.0
    wt = np.ones(1)
    for j in order[1:]:
        lo_e, hi_e = case.limits[j]
        lo = np.asarray(_eval_limit(lo_e, z))
        k = len(wt)
        zz = np.repeat(z, m, axis=0)
        u = np.tile(nodes, k)
        lo_r = np.repeat(lo, m)
        if hi_e.infinite:
            # decay length of the remaining form along axis j
            zz[:, j] = lo_r
            scale = (zz @ c) / c[j]
            zz[:, j] = lo_r + scale * u / (1 - u)
            jac = scale / (1 - u) ** 2
        else:
            hi = np.repeat(np.asarray(_eval_limit(hi_e, z)), m)
            width = np.maximum(hi - lo_r, 0.0)
            zz[:, j] = lo_r + u * width
            jac = width
        wt = np.repeat(wt, m) * np.tile(weights, k) * jac
        z = zz
    lin = z @ c
    return math.factorial(d - 1) * float(np.sum(wt / lin**d))


def _eval_limit(e: LimitExpr, z: np.ndarray) -> np.ndarray:
    return e.constant + z @ np.asarray(e.coeffs, dtype=float)


@dataclass(frozen=True)
class CaseIntegral:
    label: str
    n: int
    subtype: str | None
    probability: float
    est_error: float


def integrate_case(case: CaseSpec, w: Weights, tol: float = QUAD_TOL) -> CaseIntegral:
    """Probability that the typical cell falls in ``case``.

    Raises :class:`QuadratureError` if doubling the rule never brings two
    successive estimates within ``tol``.
    """
    w = w.as_float()
    c = case.exponent_coeffs(w)
    scale = density_prefactor(case.n, w) * float(case.angle_probability(w))
    if case.dim == 1:
        return CaseIntegral(case.label, case.n, case.subtype, scale / c[0], 0.0)
    m = 24
    prev = scale * _cone_integral(case, c, m)
    while m < 384:
        m *= 2
        cur = scale * _cone_integral(case, c, m)
        err = abs(cur - prev)
        if err <= tol:
            return CaseIntegral(case.label, case.n, case.subtype, cur, err)
        prev = cur
    raise QuadratureError(case.label, prev, err)


def pmf_by_quadrature(w: Weights, tol: float = QUAD_TOL) -> dict[int, float]:
    return {
        n: sum(integrate_case(c, w, tol).probability for c in case_table(n))
        for n in (3, 4, 5, 6)
    }


@lru_cache(maxsize=64)
def _case_probabilities(p: float, q: float) -> tuple[float, ...]:
    w = Weights(p, q)
    return tuple(integrate_case(c, w).probability for c in all_cases())


# --------------------------------------------------------------------------
# direct sampling


@dataclass(frozen=True)
class CellSample:
    label: str
    z: np.ndarray
    polygon: Polygon
    density: float

    @property
    def n(self) -> int:
        return len(self.z)


def _trunc_exp(rng, rate: float, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw from ``rate * exp(-rate * x)`` restricted to (lo, hi)."""
    u = rng.random(len(lo))
    span = hi - lo
    mass = -np.expm1(-rate * span)  # 1 - exp(-rate*span); 1 for infinite span
    return lo - np.log1p(-u * mass) / rate


def sample_case_lengths(
    case: CaseSpec,
    w: Weights,
    rng: np.random.Generator,
    size: int = 1,
    max_rejections: int = 10**6,
) -> np.ndarray:
    """Free side lengths drawn from the case's density, shape (size, n-2).

    Variables are proposed one at a time in integration order from
    truncated exponentials with their own exponent coefficients; the product
    of the truncation masses is the acceptance probability, which makes the
    draw exact.
    """
    c = case.exponent_coeffs(w.as_float())
    if np.any(c <= 0):
        raise ValueError(f"case {case.label} has a non-decaying direction")
    out: list[np.ndarray] = []
    have = 0
    rejected = 0
    batch = max(64, 2 * size)
    while have < size:
        z = np.zeros((batch, case.dim))
        log_acc = np.zeros(batch)
        for j in case.order:
            lo_e, hi_e = case.limits[j]
            lo = _eval_limit(lo_e, z)
            hi = np.full(batch, np.inf) if hi_e.infinite else _eval_limit(hi_e, z)
            z[:, j] = _trunc_exp(rng, c[j], lo, hi)
            log_acc += -c[j] * lo + np.log(-np.expm1(-c[j] * (hi - lo)))
        keep = np.log(rng.random(batch)) < log_acc
        out.append(z[keep])
        have += int(keep.sum())
        rejected += int((~keep).sum())
        if rejected > max_rejections and have < size:
            raise SamplerStallError(
                f"case {case.label}: over {max_rejections} rejections "
                f"with only {have} of {size} accepted"
            )
    return np.concatenate(out)[:size]


def sample_typical_cell(w: Weights, seed: int | np.random.Generator) -> CellSample:
    """Draw one typical cell: pick a case by its probability, then its lengths."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cases = all_cases()
    wf = w.as_float()
    probs = np.array(_case_probabilities(float(wf.p), float(wf.q)))
    case = cases[rng.choice(len(cases), p=probs / probs.sum())]
    z = sample_case_lengths(case, w, rng, 1)[0]
    poly = case.polygon(z)
    if closing_residual(poly) >= CLOSURE_TOL or not poly.is_simple():
        raise AssertionError(f"sampled {case.label} cell is not a simple closed polygon")
    return CellSample(case.label, case.sides(z), poly, density_value(case, z, w))


def sample_typical_cells(
    w: Weights, k: int, seed: int | np.random.Generator, validate: bool = True
) -> list[CellSample]:
    """Draw k typical cells, batching the length draws per case."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    cases = all_cases()
    wf = w.as_float()
    probs = np.array(_case_probabilities(float(wf.p), float(wf.q)))
    idx = rng.choice(len(cases), size=k, p=probs / probs.sum())
    out: list[CellSample | None] = [None] * k
    for ci in np.unique(idx):
        case = cases[ci]
        where = np.flatnonzero(idx == ci)
        zs = sample_case_lengths(case, w, rng, len(where))
        coef = case.exponent_coeffs(wf)
        pref = density_prefactor(case.n, wf)
        for pos, z in zip(where, zs):
            poly = case.polygon(z)
            if validate and (closing_residual(poly) >= CLOSURE_TOL or not poly.is_simple()):
                raise AssertionError(f"sampled {case.label} cell is not a simple closed polygon")
            out[pos] = CellSample(case.label, case.sides(z), poly, pref * math.exp(-float(coef @ z)))
    return out


def enumerate_direction_sequences(n: int) -> list[tuple[int, ...]]:
    """Every clockwise n-side direction sequence with a positive closure.

    Independent of the tabulated cases: sequences are ``(phi_0, d_1, ...,
    d_{n-1})`` in steps of pi/3 with ``phi_0`` in {0, 1}, ``d_1 > phi_0`` and
    strictly decreasing directions above ``phi_0 - 3``; a sequence is kept if
    some choice of positive free lengths makes all n sides positive.
    """
    out = []
    for phi0 in (0, 1):
        pool = [d for d in range(2, phi0 - 3, -1)]
        for seq in _decreasing(pool, n - 1):
            if seq[0] <= phi0:
                continue
            dirs = list(seq) + [phi0 - 3]
            if _has_positive_closure(dirs):
                out.append((phi0,) + tuple(seq))
    return out


def _decreasing(pool: list[int], k: int) -> Iterable[tuple[int, ...]]:
    from itertools import combinations

    for comb in combinations(pool, k):
        yield comb  # pool is already sorted in decreasing order


def _has_positive_closure(dirs: Sequence[int]) -> bool:
    from scipy.optimize import linprog

    n = len(dirs)
    a = np.array([[math.cos(d * STEP) for d in dirs], [math.sin(d * STEP) for d in dirs]])
    # maximise t subject to A z = 0, z_i >= t, sum z = 1
    cost = np.zeros(n + 1)
    cost[-1] = -1.0
    a_eq = np.zeros((3, n + 1))
    a_eq[:2, :n] = a
    a_eq[2, :n] = 1.0
    b_eq = np.array([0.0, 0.0, 1.0])
    a_ub = np.hstack([-np.eye(n), np.ones((n, 1))])
    res = linprog(cost, A_ub=a_ub, b_ub=np.zeros(n), A_eq=a_eq, b_eq=b_eq,
                  bounds=[(0, None)] * n + [(None, None)])
    return bool(res.status == 0 and -res.fun > 1e-9)
