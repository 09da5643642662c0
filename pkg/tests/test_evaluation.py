import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, special

from kisvm.errors import ShapeError
from kisvm.evaluation import (
    ENSEMBLE_WEIGHTS,
    ClasswiseAccuracy,
    RepeatMetrics,
    accuracy_delta_report,
    classwise_accuracy,
    combined_ensemble,
    ensemble_accuracy,
    paired_t_test,
)

TAGS6 = [1, 1, 2, 2, 3, 3]


def t_pvalue_by_quadrature(t, df):
    """Two-sided p from integrating the Student-t density."""
    c = math.exp(special.gammaln((df + 1) / 2) - special.gammaln(df / 2)) / math.sqrt(df * math.pi)

    def pdf(x):
        return c * (1 + x * x / df) ** (-(df + 1) / 2)

    tail, _ = integrate.quad(pdf, abs(t), np.inf, epsabs=1e-13, epsrel=1e-13)
    return 2 * tail


def test_weights_sum_to_one():
    assert sum(ENSEMBLE_WEIGHTS) == pytest.approx(1.0, abs=1e-15)


def test_classwise_all_correct():
    truth = [1, 1, 1, 1, -1, -1]
    cw = classwise_accuracy(truth, truth, TAGS6)
    assert cw.accuracies == (1.0, 1.0, 1.0)


def test_classwise_all_wrong():
    truth = np.array([1, 1, 1, 1, -1, -1])
    cw = classwise_accuracy(-truth, truth, TAGS6)
    assert cw.accuracies == (0.0, 0.0, 0.0)


def test_classwise_half_right():
    truth = [1, 1, 1, 1, -1, -1]
    pred = [1, -1, 1, -1, -1, 1]
    assert classwise_accuracy(pred, truth, TAGS6).accuracies == (0.5, 0.5, 0.5)


def test_classwise_length_mismatch():
    with pytest.raises(ShapeError):
        classwise_accuracy([1], [1, 1], [1, 1])


@pytest.mark.parametrize(
    "acc, expected", [((1, 1, 1), 1.0), ((0.5, 1, 0), 0.4), ((0, 0, 1), 0.3)]
)
def test_ensemble_examples(acc, expected):
    assert ensemble_accuracy(ClasswiseAccuracy(*acc)) == pytest.approx(expected, abs=1e-12)


@given(st.fractions(0, 1, max_denominator=50), st.fractions(0, 1, max_denominator=50),
       st.fractions(0, 1, max_denominator=50))
def test_ensemble_exact_on_rationals(a1, a2, a3):
    exact = Fraction(6, 10) * a1 + Fraction(1, 10) * a2 + Fraction(3, 10) * a3
    got = ensemble_accuracy(ClasswiseAccuracy(float(a1), float(a2), float(a3)))
    assert abs(got - float(exact)) <= 1e-12


@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
def test_ensemble_monotone_and_bounded(a1, a2, a3, bump):
    base = ensemble_accuracy(ClasswiseAccuracy(a1, a2, a3))
    assert -1e-15 <= base <= 1 + 1e-15
    up = ensemble_accuracy(ClasswiseAccuracy(max(a1, bump), a2, a3))
    assert up >= base - 1e-15


def test_ensemble_redistributes_empty_class():
    cw = ClasswiseAccuracy(math.nan, 1.0, 0.5, count_class1=0)
    assert cw.has_empty_class
    assert ensemble_accuracy(cw) == pytest.approx((0.1 * 1.0 + 0.3 * 0.5) / 0.4)


@pytest.mark.parametrize("lo, hi, expected", [(1, 0, 0.5), (0.7274, 0.7274, 0.7274), (0.6, 0.8, 0.7)])
def test_combined_ensemble(lo, hi, expected):
    assert combined_ensemble(lo, hi) == pytest.approx(expected, abs=1e-15)


def test_t_test_zero_mean():
    r = paired_t_test([1, -1, 1, -1])
    assert (r.t_statistic, r.p_value) == (0.0, 1.0)


def test_t_test_one_two_three():
    r = paired_t_test([1, 2, 3])
    assert r.t_statistic == pytest.approx(2 * math.sqrt(3), abs=1e-12)
    assert r.degrees_of_freedom == 2
    # df = 2 has the closed form p = 1 - t / sqrt(t^2 + 2)
    assert r.p_value == pytest.approx(1 - r.t_statistic / math.sqrt(r.t_statistic**2 + 2), abs=1e-12)
    assert r.p_value == pytest.approx(t_pvalue_by_quadrature(r.t_statistic, 2), abs=1e-9)
    assert r.p_value == pytest.approx(0.0742, abs=1e-4)


def test_t_test_all_zero():
    r = paired_t_test([0, 0, 0])
    assert (r.t_statistic, r.p_value) == (0.0, 1.0)


def test_t_test_degenerate_variance():
    r = paired_t_test([0.5, 0.5, 0.5])
    assert r.degenerate_variance and r.t_statistic == math.inf and r.p_value == 0.0


def test_t_test_needs_two_values():
    with pytest.raises(ShapeError):
        paired_t_test([1.0])


@pytest.mark.parametrize("seed", range(3))
def test_t_test_matches_quadrature(seed):
    d = np.random.default_rng(seed).normal(0.3, 1.0, size=12)
    r = paired_t_test(d)
    assert r.p_value == pytest.approx(t_pvalue_by_quadrature(r.t_statistic, 11), abs=1e-9)


@given(st.lists(st.floats(-10, 10), min_size=2, max_size=20))
def test_t_test_antisymmetric(d):
    a, b = paired_t_test(d), paired_t_test([-x for x in d])
    if math.isfinite(a.t_statistic):
        assert b.t_statistic == pytest.approx(-a.t_statistic, abs=1e-9)
    assert b.p_value == pytest.approx(a.p_value, abs=1e-12)
    assert 0.0 <= a.p_value <= 1.0


def _metrics(low_imp, high_imp, acc, e_low, e_high):
    return RepeatMetrics(0.0, low_imp, 0.0, 0.0, high_imp, acc, e_low, e_high)


def test_delta_report_identical_is_zero():
    m = [_metrics(0.9, 0.8, 0.7, 0.6, 0.5)] * 3
    for v in accuracy_delta_report(m, m).values():
        assert np.array_equal(v, np.zeros(3))


def test_delta_report_single_repeat():
    k = [_metrics(0.9, 0.8, 0.7, 0.6, 0.8)]
    b = [_metrics(0.8, 0.85, 0.7, 0.5, 0.7)]
    d = accuracy_delta_report(k, b)
    assert d["class1_low"][0] == pytest.approx(0.1)
    assert d["class1_high"][0] == pytest.approx(-0.05)
    assert d["accuracy"][0] == 0.0
    assert d["ensemble_accuracy"][0] == pytest.approx(0.1)


def test_delta_report_unpaired():
    with pytest.raises(ShapeError):
        accuracy_delta_report([_metrics(1, 1, 1, 1, 1)], [])
