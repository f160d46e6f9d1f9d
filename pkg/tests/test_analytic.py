from fractions import Fraction
from itertools import permutations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from trilines import analytic
from trilines.geometry import Weights

F = Fraction
THIRD = Weights("1/3", "1/3")


def rational_grid(m):
    return [Weights(F(i, m), F(j, m)) for i in range(1, m) for j in range(1, m) if i + j < m]


rational_w = st.tuples(st.integers(1, 200), st.integers(1, 200), st.integers(1, 200)).map(
    lambda t: Weights(F(t[0], sum(t)), F(t[1], sum(t)))
)


def test_headline_values():
    f = analytic.pmf(THIRD)
    assert (f.p3, f.p4, f.p5, f.p6) == (F(2, 9), F(7, 12), F(1, 6), F(1, 36))
    assert f.beta == F(8, 81)
    assert analytic.mean_variance(THIRD) == (4, F(1, 2))
    assert analytic.para_trap_split(THIRD) == (F(1, 4), F(1, 3))


@given(rational_w)
def test_exact_normalization_and_mean(w):
    f = analytic.pmf(w)
    assert f.total() == 1
    assert f.mean() == 4
    assert f.second_moment() - 16 == analytic.variance(w)


@given(rational_w)
def test_symmetric_forms(w):
    f = analytic.pmf(w)
    assert analytic.p3_symmetric(w) == f.p3
    assert analytic.p6_symmetric(w) == f.p6
    assert analytic.beta_factored(w) == f.beta


@given(rational_w)
def test_permutation_invariance(w):
    ref = analytic.pmf(w).as_dict()
    for order in permutations(range(3)):
        assert analytic.pmf(w.permuted(order)).as_dict() == ref


@given(rational_w)
def test_probabilities_inside_unit_interval(w):
    f = analytic.pmf(w)
    assert all(0 < v < 1 for v in f.as_dict().values())
    para, trap = analytic.para_trap_split(w)
    assert 0 < para < f.p4 and 0 < trap < f.p4


def test_case_examples():
    assert analytic.triangle_case_probability(THIRD) == F(1, 9)
    assert analytic.trapezoid_case4_probability(THIRD) == F(1, 18)
    assert analytic.pentagon_case5_probability(THIRD) == F(1, 36)


def test_sign_flipped_forms_are_negatives():
    for w in rational_grid(7):
        f = analytic.pmf(w)
        assert analytic.p5_negated_form(w) == -f.p5 < 0
        assert analytic.p6_negated_form(w) == -f.p6 < 0


def test_alternative_split_forms():
    para, _ = analytic.para_trap_split(THIRD)
    assert analytic.para_printed(THIRD) == para
    assert analytic.trap_printed_negated(THIRD) == F(81, 8)
    w = Weights("1/5", "1/2")
    assert analytic.para_printed(w) != analytic.para_trap_split(w)[0]


def test_float_path_matches_exact():
    for w in rational_grid(9):
        exact = analytic.pmf(w).as_dict()
        approx = analytic.pmf(w.as_float()).as_dict()
        for n in exact:
            assert approx[n] == pytest.approx(float(exact[n]), abs=1e-14)


@pytest.mark.parametrize("order", [(0, 1), (0, 2), (1, 2)])
def test_degenerate_limits(order):
    # one weight tiny, whichever family it sits on
    full = [1e-6, 0.5, 0.5 - 1e-6]
    f = analytic.pmf(Weights(full[order[0]], full[order[1]]))
    assert f.p4 > 0.999
    assert max(f.p3, f.p5, f.p6) < 1e-3


def test_mean_variance_detects_mismatch(monkeypatch):
    monkeypatch.setattr(analytic, "variance", lambda w: F(1, 3))
    with pytest.raises(ArithmeticError):
        analytic.mean_variance(THIRD)


def test_extrema_coarse_grid():
    rep = analytic.verify_extrema("1/30")
    assert rep.ok and rep.target == (F(1, 3), F(1, 3))
    assert rep.values == {3: F(2, 9), 4: F(7, 12), 5: F(1, 6), 6: F(1, 36)}


def test_extrema_rejects_coarse_step():
    with pytest.raises(ValueError):
        analytic.verify_extrema("1/5")


def test_simplex_grid_count():
    # points (i, j) with i, j >= 1 and i + j < m
    assert len(analytic.simplex_grid(F(1, 20))) == 19 * 18 // 2


def test_to_jsonable():
    assert analytic.to_jsonable(F(2, 9)) == "2/9"
    assert analytic.to_jsonable(F(4)) == "4"
    assert analytic.to_jsonable(0.5) == 0.5


@pytest.mark.parametrize("pq", [("1/4", "1/4"), ("1/5", "2/5"), ("1/7", "3/7")])
def test_listed_points_sum_to_one(pq):
    f = analytic.pmf(Weights(*pq))
    assert f.total() == 1 and f.mean() == 4


@given(rational_w)
def test_beta_symmetric_and_positive(w):
    assert analytic.beta(w) == analytic.beta(Weights(w.q, w.p)) > 0


@given(rational_w)
def test_case_values_bounded_by_totals(w):
    f = analytic.pmf(w)
    assert 2 * analytic.triangle_case_probability(w) == f.p3
    assert 0 < analytic.trapezoid_case4_probability(w) < f.p4
    assert 0 < analytic.pentagon_case5_probability(w) <= f.p5


def test_grid_bounds():
    for w in rational_grid(30):
        f = analytic.pmf(w)
        assert f.p6 <= F(1, 36) and f.p4 >= F(7, 12)
        assert f.p3 <= F(2, 9) and f.p5 <= F(1, 6)
