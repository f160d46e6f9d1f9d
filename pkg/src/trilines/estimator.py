"""Monte Carlo estimate of the typical cell's vertex-number distribution.

A cell is counted when it does not touch the window boundary and its
lexicographically smallest vertex lies in the inner box.  Cells with their
lex-min vertex in the box that do touch the boundary are tallied separately
as ``discarded_boundary_cells``.

Cells of one realization are not independent (a surplus of lines of one
family shifts the whole mix), so standard errors come from the spread of
the per-replicate counts rather than from a binomial model.  The binomial
values are still reported, and their squared ratio is the design effect.
"""

from __future__ import annotations

import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import analytic
from .arrangement import DegenerateArrangementError, FaceOverflowError, build
from .geometry import Weights
from .lines import Window, expected_cells_in_box, sample_lines

SIDES = (3, 4, 5, 6)
Z99 = 2.5758293035489004  # two-sided 99% normal quantile
MAX_RESAMPLES = 100


class EmptySampleError(RuntimeError):
    pass


def replicate_seed(seed: int, index: int, attempt: int = 0) -> int:
    """Seed of replicate ``index``; later attempts follow a degenerate draw."""
    ss = np.random.SeedSequence(seed, spawn_key=(index, attempt))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass
class ReplicateResult:
    index: int
    seed: int
    counts: np.ndarray  # per n = 3..6
    discarded: int


def run_replicate(w: Weights, window: Window, seed: int, index: int) -> ReplicateResult:
    for attempt in range(MAX_RESAMPLES):
        s = replicate_seed(seed, index, attempt)
        try:
            arr = build(sample_lines(w, window, s))
        except DegenerateArrangementError:
            continue
        break
    else:
        raise RuntimeError(f"replicate {index}: {MAX_RESAMPLES} degenerate draws in a row")

    faces = arr.bounded_faces()
    in_box = window.in_inner_box(arr.face_lex_min[faces])
    touching = arr.face_touches_boundary[faces]
    interior = faces[~touching]
    vc_all = arr.face_vertex_count[interior]
    if np.any((vc_all < 3) | (vc_all > 6)):
        raise FaceOverflowError(
            f"replicate {index} (seed {s}): interior face with {vc_all.max()} vertices"
        )
    vc = arr.face_vertex_count[faces[in_box & ~touching]]
    counts = np.bincount(vc - 3, minlength=4)[:4]
    return ReplicateResult(index, s, counts, int(np.sum(in_box & touching)))


def _run_batch(args):
    w, window, seed, indices = args
    return [run_replicate(w, window, seed, i) for i in indices]


def wilson_interval(k: float, n: float, z: float = Z99) -> tuple[float, float]:
    """Wilson score interval; k and n may be fractional effective counts."""
    if n <= 0:
        return (0.0, 1.0)
    ph = k / n
    denom = 1 + z * z / n
    centre = (ph + z * z / (2 * n)) / denom
    half = z * math.sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / denom
    return (max(0.0, centre - half), min(1.0, centre + half))


@dataclass
class PmfReport:
    weights: Weights
    window: Window
    replicates: int
    counts: dict[int, int]
    discarded_boundary_cells: int
    seeds: list[int] = field(default_factory=list)
    wall_time_ms: float = 0.0
    base_seed: int | None = None
    replicate_counts: np.ndarray | None = field(default=None, repr=False)  # (replicates, 4)

    @property
    def total(self) -> int:
        return sum(self.counts.values())

    @property
    def estimates(self) -> dict[int, float]:
        t = self.total
        return {n: self.counts[n] / t for n in SIDES}

    @property
    def std_errors_binomial(self) -> dict[int, float]:
        t = self.total
        return {n: math.sqrt(p * (1 - p) / t) for n, p in self.estimates.items()}

    @property
    def std_errors(self) -> dict[int, float]:
        """Ratio-estimator standard errors from the per-replicate counts.

        Falls back to the binomial values when fewer than two replicates
        were kept.
        """
        c = self.replicate_counts
        if c is None or len(c) < 2:
            return self.std_errors_binomial
        k = len(c)
        p = np.array([self.estimates[n] for n in SIDES])
        resid = c - np.outer(c.sum(axis=1), p)
        se = np.sqrt(k / (k - 1) * (resid**2).sum(axis=0)) / self.total
        return {n: float(v) for n, v in zip(SIDES, se)}

    @property
    def design_effect(self) -> dict[int, float]:
        """Variance inflation over the binomial model, per component."""
        b, r = self.std_errors_binomial, self.std_errors
        return {n: (r[n] / b[n]) ** 2 if b[n] > 0 else 1.0 for n in SIDES}

    def intervals(self, z: float = Z99) -> dict[int, tuple[float, float]]:
        """Wilson intervals at the effective sample size ``total / design effect``."""
        out = {}
        for n in SIDES:
            n_eff = self.total / max(self.design_effect[n], 1.0)
            out[n] = wilson_interval(self.estimates[n] * n_eff, n_eff, z)
        return out

    @property
    def ci99(self) -> dict[int, tuple[float, float]]:
        return self.intervals(Z99)

    @property
    def discarded_ratio(self) -> float:
        return self.discarded_boundary_cells / max(self.total, 1)

    def z_scores(self, reference: dict[int, float]) -> dict[int, float]:
        """Deviation of each estimate from ``reference`` in standard errors."""
        se = self.std_errors
        return {n: (self.estimates[n] - float(reference[n])) / se[n] for n in SIDES}

    def to_dict(self, include_timing: bool = True) -> dict:
        mean, var = empirical_mean_variance(self)
        d = {
            "weights": {
                "p": analytic.to_jsonable(self.weights.p),
                "q": analytic.to_jsonable(self.weights.q),
            },
            "window": {
                "R": self.window.half_width,
                "inner_fraction": self.window.inner_fraction,
            },
            "replicates": self.replicates,
            "counts": {str(n): self.counts[n] for n in SIDES},
            "total": self.total,
            "estimates": {str(n): v for n, v in self.estimates.items()},
            "std_errors": {str(n): v for n, v in self.std_errors.items()},
            "std_errors_binomial": {str(n): v for n, v in self.std_errors_binomial.items()},
            "design_effect": {str(n): v for n, v in self.design_effect.items()},
            "ci99": {str(n): list(v) for n, v in self.ci99.items()},
            "mean": mean,
            "variance": var,
            "discarded_boundary_cells": self.discarded_boundary_cells,
            "discarded_ratio": self.discarded_ratio,
            "seed": self.base_seed,
            "seeds": self.seeds,
        }
        if include_timing:
            d["wall_time_ms"] = self.wall_time_ms
        return d

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(**kw), sort_keys=True)


def estimate_pmf(
    w: Weights,
    window: Window = Window(),
    replicates: int = 1,
    seed: int = 0,
    min_cells: int = 0,
    workers: int = 1,
    max_replicates: int = 100_000,
) -> PmfReport:
    """Estimate P(N = n) from independent realizations.

    Runs at least ``replicates`` replicates and keeps going until
    ``min_cells`` usable cells have been collected.  Replicate i always uses
    the same derived seed, so the result depends only on the arguments, not
    on ``workers``.
    """
    if replicates < 1:
        raise ValueError("replicates must be at least 1")
    t0 = time.perf_counter()
    wf = w.as_float()
    counts = np.zeros(4, dtype=np.int64)
    per_replicate: list[np.ndarray] = []
    discarded = 0
    seeds: list[int] = []
    done = 0
    per_rep = max(expected_cells_in_box(w, window), 0.01)
    pool = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        while done < replicates or (counts.sum() < min_cells and done < max_replicates):
            if done < replicates:
                todo = replicates - done
            else:
                todo = max(1, math.ceil(1.05 * (min_cells - counts.sum()) / per_rep))
            todo = min(todo, max_replicates - done)
            idx = list(range(done, done + todo))
            if pool is None:
                results = _run_batch((wf, window, seed, idx))
            else:
                chunks = [idx[k::workers] for k in range(workers)]
                results = [
                    r
                    for batch in pool.map(_run_batch, [(wf, window, seed, c) for c in chunks])
                    for r in batch
                ]
                results.sort(key=lambda r: r.index)
            for r in results:
                counts += r.counts
                per_replicate.append(r.counts)
                discarded += r.discarded
                seeds.append(r.seed)
            done += todo
    finally:
        if pool is not None:
            pool.shutdown()
    if counts.sum() == 0:
        raise EmptySampleError(
            "no usable cells: enlarge the window (--window-R), the inner fraction "
            "or the number of replicates"
        )
    return PmfReport(
        weights=w,
        window=window,
        replicates=done,
        counts={n: int(c) for n, c in zip(SIDES, counts)},
        discarded_boundary_cells=discarded,
        seeds=seeds,
        wall_time_ms=1000 * (time.perf_counter() - t0),
        base_seed=seed,
        replicate_counts=np.array(per_replicate, dtype=np.int64),
    )


def empirical_mean_variance(report: PmfReport) -> tuple[float, float]:
    if report.total == 0:
        raise EmptySampleError("empty report")
    est = report.estimates
    mean = sum(n * p for n, p in est.items())
    second = sum(n * n * p for n, p in est.items())
    return mean, second - mean * mean


def merge_reports(reports: Sequence[PmfReport]) -> PmfReport:
    """Pool counts of reports that share weights and window."""
    first = reports[0]
    counts = {n: sum(r.counts[n] for r in reports) for n in SIDES}
    return PmfReport(
        weights=first.weights,
        window=first.window,
        replicates=sum(r.replicates for r in reports),
        counts=counts,
        discarded_boundary_cells=sum(r.discarded_boundary_cells for r in reports),
        seeds=[s for r in reports for s in r.seeds],
        wall_time_ms=sum(r.wall_time_ms for r in reports),
        base_seed=first.base_seed,
        replicate_counts=np.concatenate([r.replicate_counts for r in reports])
        if all(r.replicate_counts is not None for r in reports)
        else None,
    )
