"""Vertex numbers of the typical cell in a three-direction Poisson line tessellation."""

from .analytic import ExactPmf, beta, mean_variance, para_trap_split, pmf, verify_extrema
from .arrangement import Arrangement, DegenerateArrangementError, build
from .cells import (
    CaseSpec,
    QuadratureError,
    all_cases,
    case_table,
    integrate_case,
    pmf_by_quadrature,
    sample_typical_cell,
    sample_typical_cells,
)
from .estimator import EmptySampleError, PmfReport, estimate_pmf
from .geometry import DirectedLine, Polygon, Weights, WeightsError, lambda_of, lambda_total
from .lines import LineRealization, Window, sample_lines

__all__ = [
    "Arrangement", "CaseSpec", "DegenerateArrangementError", "DirectedLine",
    "EmptySampleError", "ExactPmf", "LineRealization", "PmfReport", "Polygon",
    "QuadratureError", "Weights", "WeightsError", "Window", "all_cases", "beta",
    "build", "case_table", "estimate_pmf", "integrate_case", "lambda_of",
    "lambda_total", "mean_variance", "para_trap_split", "pmf", "pmf_by_quadrature",
    "sample_lines", "sample_typical_cell", "sample_typical_cells", "verify_extrema",
]
