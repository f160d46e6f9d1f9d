"""Closed-form vertex-number probabilities and related quantities.

Every function takes a :class:`~trilines.geometry.Weights`.  When p and q are
Fractions the result is an exact Fraction; otherwise it is a float.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Union

from .geometry import Weights

Value = Union[float, Fraction]


def beta(w: Weights) -> Value:
    """Common denominator ``(1-p)(1-q)(p+q)(p+q-p^2-q^2-pq)``."""
    p, q = w.p, w.q
    return (1 - p) * (1 - q) * (p + q) * (p + q - p * p - q * q - p * q)


def _numerators(p, q) -> tuple:
    r = 1 - p - q
    n3 = 2 * p * q * (1 - p) * (1 - q) * (p + q) * r
    n4 = (
        6 * p**2 * q**2 * (p + q) ** 2
        + 2 * p * q * (12 * p * q + 1)
        - 22 * p**2 * q**2 * (p + q)
        - p**2 * (5 * p**2 * q - 12 * p * q + 2 * p + 9 * q - p**2 - 1)
        - q**2 * (5 * p * q**2 - 12 * p * q + 2 * q + 9 * p - q**2 - 1)
    )
    n5 = (
        6 * p**2 * q**2 * (p + q) * r
        - 2 * p * q * r * (p**2 + q**2)
        + 2 * p * q * (p + q) * r
        - 8 * p**2 * q**2 * r
    )
    n6 = 2 * p**2 * q**2 * r**2
    return n3, n4, n5, n6


@dataclass(frozen=True)
class ExactPmf:
    p3: Value
    p4: Value
    p5: Value
    p6: Value
    beta: Value

    def __getitem__(self, n: int) -> Value:
        return {3: self.p3, 4: self.p4, 5: self.p5, 6: self.p6}[n]

    def as_dict(self) -> dict[int, Value]:
        return {3: self.p3, 4: self.p4, 5: self.p5, 6: self.p6}

    def total(self) -> Value:
        return self.p3 + self.p4 + self.p5 + self.p6

    def mean(self) -> Value:
        return 3 * self.p3 + 4 * self.p4 + 5 * self.p5 + 6 * self.p6

    def second_moment(self) -> Value:
        return 9 * self.p3 + 16 * self.p4 + 25 * self.p5 + 36 * self.p6


def pmf(w: Weights) -> ExactPmf:
    """P(N = n) for n = 3..6."""
    b = beta(w)
    n3, n4, n5, n6 = _numerators(w.p, w.q)
    return ExactPmf(n3 / b, n4 / b, n5 / b, n6 / b, b)


def p3_symmetric(w: Weights) -> Value:
    """Triangle probability written as ``2pqr / (pq + qr + rp)``."""
    p, q, r = w.family_weights()
    return 2 * p * q * r / (p * q + q * r + r * p)


def p6_symmetric(w: Weights) -> Value:
    p, q, r = w.family_weights()
    return 2 * p**2 * q**2 * r**2 / beta(w)


def beta_factored(w: Weights) -> Value:
    p, q, r = w.family_weights()
    return (p + q) * (q + r) * (r + p) * (p * q + q * r + r * p)


def triangle_case_probability(w: Weights) -> Value:
    """Probability of one of the two triangle configurations."""
    p, q = w.p, w.q
    return p * q * (1 - p - q) / (p + q - p * p - q * q - p * q)


def trapezoid_case4_probability(w: Weights) -> Value:
    """Probability of the trapezoid with directions (0, 2pi/3, 0, -2pi/3)."""
    p, q = w.p, w.q
    return p * p * q * (1 - p - q) / ((1 - p) * (p + q - p * p - q * q - p * q))


def pentagon_case5_probability(w: Weights) -> Value:
    """Probability of the pentagon with directions (0, 2pi/3, pi/3, -pi/3, -2pi/3)."""
    p, q = w.p, w.q
    return (
        3 * p * q * q * (-p - q + 1) ** 2
        / ((3 - 3 * q) * (p + q) * (-p * p - p * q + p - q * q + q))
    )


def parallelogram_probability(w: Weights) -> Value:
    """Share of parallelograms: ``[p^2q^2(p+q) + p^2r^2(p+r) + q^2r^2(q+r)] / beta``.

    Sum of the three parallelogram configurations, each of which integrates
    over a free quadrant of side lengths.
    """
    p, q, r = w.family_weights()
    num = p * p * q * q * (p + q) + p * p * r * r * (p + r) + q * q * r * r * (q + r)
    return num / beta(w)


def para_trap_split(w: Weights) -> tuple[Value, Value]:
    """(parallelogram, trapezoid) shares of P(N = 4)."""
    para = parallelogram_probability(w)
    return para, pmf(w).p4 - para


def para_printed(w: Weights) -> Value:
    """An alternative closed form for the parallelogram share.

    Agrees with :func:`parallelogram_probability` at p = q = 1/3 (value 1/4)
    but not elsewhere; kept for comparison only.
    """
    p, q = w.p, w.q
    num = (
        p**4 * (1 - q)
        - 2 * p**3 * (q - 1) ** 2
        + q**2 * (1 - p) * (q - 1) ** 2
        + 2 * p * q**2 * (p - 1)
        + p**2 * (-2 * q**3 + 6 * q**2 - 3 * q + 1)
    )
    return num / beta(w)


def trap_printed_negated(w: Weights) -> Value:
    """``beta^-1 [5pqr + 2(p+q)(1-p)(1-q) + 2pq]``, kept for comparison only.

    It does not equal ``p4 - para``; at p = q = 1/3 it evaluates to 81/8.
    """
    p, q = w.p, w.q
    return -(-5 * p * q * (1 - p - q) - 2 * (p + q) * (1 - p) * (1 - q) - 2 * p * q) / beta(w)


def p5_negated_form(w: Weights) -> Value:
    """Pentagon numerator with every sign flipped, divided by beta."""
    p, q = w.p, w.q
    r = 1 - p - q
    return (
        2 * p * q * r * (p**2 + q**2)
        - 6 * p**2 * q**2 * (p + q) * r
        - 2 * p * q * (p + q) * r
        + 8 * p**2 * q**2 * r
    ) / beta(w)


def p6_negated_form(w: Weights) -> Value:
    p, q = w.p, w.q
    return -2 * p**2 * q**2 * (1 - p - q) ** 2 / beta(w)


def variance(w: Weights) -> Value:
    p, q = w.p, w.q
    return 4 * p * q * (1 - p - q) / ((1 - p) * (1 - q) * (p + q))


def mean_variance(w: Weights) -> tuple[Value, Value]:
    """Mean (always 4) and variance of the vertex number.

    Both are cross-checked against the moments of :func:`pmf`; an exact
    mismatch on rational input raises ``ArithmeticError``.
    """
    f = pmf(w)
    var = variance(w)
    mean = f.mean()
    if w.exact:
        if mean != 4 or f.second_moment() - 16 != var:
            raise ArithmeticError(f"moment identities fail at {w}")
        return Fraction(4), var
    if abs(mean - 4) > 1e-9 or abs(f.second_moment() - 16 - var) > 1e-9:
        raise ArithmeticError(f"moment identities fail at {w}")
    return 4.0, var


# --------------------------------------------------------------------------
# extrema


@dataclass
class ExtremaReport:
    step: Fraction
    points: int
    argmax_p3: tuple[Fraction, Fraction]
    argmin_p4: tuple[Fraction, Fraction]
    argmax_p5: tuple[Fraction, Fraction]
    argmax_p6: tuple[Fraction, Fraction]
    values: dict[int, Fraction]
    strict: bool
    target: tuple[Fraction, Fraction]

    @property
    def ok(self) -> bool:
        return self.strict and all(
            a == self.target
            for a in (self.argmax_p3, self.argmin_p4, self.argmax_p5, self.argmax_p6)
        )


def simplex_grid(step: Fraction) -> list[tuple[Fraction, Fraction]]:
    """Grid points (i*step, j*step) strictly inside the open simplex."""
    step = Fraction(step)
    m = int(1 / step)
    pts = []
    for i in range(1, m + 1):
        for j in range(1, m + 1):
            p, q = i * step, j * step
            if p + q < 1:
                pts.append((p, q))
    return pts


def verify_extrema(grid_step: Fraction | str = Fraction(1, 30)) -> ExtremaReport:
    """Scan the open simplex and locate the extremes of each probability.

    p3, p5 and p6 should peak and p4 bottom out at the grid point nearest
    (1/3, 1/3), strictly against every other grid point.
    """
    step = Fraction(grid_step)
    if not 0 < step <= Fraction(1, 10):
        raise ValueError("grid step must lie in (0, 1/10]")
    pts = simplex_grid(step)
    third = Fraction(1, 3)
    target = min(pts, key=lambda pt: ((pt[0] - third) ** 2 + (pt[1] - third) ** 2, pt))
    vals = {pt: pmf(Weights(*pt)) for pt in pts}

    def best(n, sign):
        return max(pts, key=lambda pt: sign * vals[pt][n])

    arg = {3: best(3, 1), 4: best(4, -1), 5: best(5, 1), 6: best(6, 1)}
    strict = True
    for n, sign in ((3, 1), (4, -1), (5, 1), (6, 1)):
        top = vals[arg[n]][n]
        strict &= sum(1 for pt in pts if vals[pt][n] == top) == 1
    return ExtremaReport(
        step=step,
        points=len(pts),
        argmax_p3=arg[3],
        argmin_p4=arg[4],
        argmax_p5=arg[5],
        argmax_p6=arg[6],
        values={n: vals[arg[n]][n] for n in (3, 4, 5, 6)},
        strict=strict,
        target=target,
    )


def to_jsonable(x: Value) -> str | float:
    """Fractions render as ``"num/den"``; floats pass through."""
    if isinstance(x, Fraction):
        return str(x) if x.denominator != 1 else str(x.numerator)
    return float(x)
