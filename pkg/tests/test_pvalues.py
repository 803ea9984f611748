import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from infocp.data import ClassificationScores, RegressionScores
from infocp.pvalues import (
    CalibrationScores,
    ClassPValues,
    ClassProportionEstimate,
    calibration_estimator,
    class_calibrated_family,
    class_calibrated_pvalue,
    full_calibrated_family,
    full_calibrated_pvalue,
    prediction_set,
    preprocessed_pvalue,
    score_threshold,
    storey_estimator,
    weighted_pvalues,
)
from infocp.rational import Rationals
from infocp.regions import Interval
from infocp.scores import Curve, LocallyWeighted


def test_full_pvalue_examples():
    cal = CalibrationScores([0.2, 0.5, 0.8])
    assert full_calibrated_pvalue(cal, 0.6) == Fraction(1, 2)
    assert full_calibrated_pvalue(cal, 0.9) == Fraction(1, 4)
    assert full_calibrated_pvalue(CalibrationScores([]), 0.3) == 1


def test_full_pvalue_counts_ties_as_at_least():
    cal = CalibrationScores([0.5, 0.5, 0.1])
    assert full_calibrated_pvalue(cal, 0.5) == Fraction(3, 4)


def test_class_pvalue_examples():
    cal = CalibrationScores.from_labeled([0.1, 0.9, 0.4], [1, 1, 2])
    assert class_calibrated_pvalue(cal, 0.5, 1) == Fraction(2, 3)
    assert class_calibrated_pvalue(cal, 0.5, 3) == 1
    assert class_calibrated_pvalue(cal, 0.05, 1) == 1


def test_class_pvalue_needs_grouping():
    with pytest.raises(ValueError):
        class_calibrated_pvalue(CalibrationScores([0.1]), 0.5, 1)


def test_preprocessed_pvalue_examples():
    assert preprocessed_pvalue(CalibrationScores([0.3]), 0.2) == 1
    assert preprocessed_pvalue(CalibrationScores([]), 0.2) == 1


def test_score_threshold_examples():
    cal = np.arange(1.0, 10.0)
    assert score_threshold(cal, Fraction(1, 10)) == 9.0
    assert score_threshold([1.0, 2.0, 3.0], Fraction(1, 100)) == math.inf
    assert score_threshold([4.0, 1.0, 3.0, 2.0], 1) == 1.0


def test_prediction_set_example():
    model = LocallyWeighted(Curve("constant", a=0.0), Curve("constant", a=1.0))
    cal = CalibrationScores([1.0, 2.0, 3.0])
    assert prediction_set(model, np.zeros((1, 1)), cal, Fraction(1, 4)) == Interval(-3.0, 3.0)
    full = prediction_set(model, np.zeros((1, 1)), cal, Fraction(1, 100))
    assert full == Interval(-math.inf, math.inf)


@settings(max_examples=300, deadline=None)
@given(
    st.lists(st.floats(-5, 5, allow_nan=False), min_size=0, max_size=25),
    st.floats(-6, 6, allow_nan=False),
    st.fractions(min_value=Fraction(1, 1000), max_value=Fraction(999, 1000)),
)
def test_threshold_pvalue_duality(cal, s, alpha):
    # p(s) > alpha  iff  s <= threshold, for alpha in (0, 1)
    p = full_calibrated_pvalue(CalibrationScores(cal), s)
    assert (p > alpha) == (s <= score_threshold(cal, alpha))
    assert score_threshold(cal, alpha) == oracles.threshold(cal, alpha)


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 30), st.integers(1, 6), st.integers(0, 10**6))
def test_families_match_oracle(n, m, seed):
    rng = np.random.default_rng(seed)
    K = 3
    cal = rng.integers(0, 5, (n, K)) / 4.0  # coarse grid forces ties
    labels = rng.integers(1, K + 1, n)
    test = rng.integers(0, 5, (m, K)) / 4.0
    scored = ClassificationScores(cal, labels, test)
    full = full_calibrated_family(scored)
    want = oracles.pvalue_matrix(list(scored.true_cal_scores()), test.tolist())
    assert [[full.pvalue(i, k + 1) for k in range(K)] for i in range(m)] == want
    cls = class_calibrated_family(scored)
    want = oracles.class_pvalue_matrix(cal.tolist(), labels.tolist(), test.tolist())
    assert [[cls.pvalue(i, k + 1) for k in range(K)] for i in range(m)] == want


def test_regression_family_lazy_pvalues():
    model = LocallyWeighted(Curve("constant", a=0.0), Curve("constant", a=1.0))
    scored = RegressionScores(model, np.zeros((3, 1)), np.array([1.0, -2.0, 3.0]), np.zeros((2, 1)))
    fam = full_calibrated_family(scored)
    assert fam.pvalue(0, 2.5) == Fraction(2, 4)
    assert fam.at(0.0).fractions() == [1, 1]
    assert fam.threshold(Fraction(1, 4)) == 3.0


def test_storey_examples():
    assert storey_estimator([0.6, 0.7, 0.2, 0.4], Fraction(1, 2)) == Fraction(3, 2)
    assert storey_estimator([0.1, 0.2], Fraction(1, 2)) == Fraction(1, 1)
    assert storey_estimator([0.9, 0.8], Fraction(1, 2)) == Fraction(3, 1)
    with pytest.raises(ValueError):
        storey_estimator([0.5], 1)


def test_calibration_estimator_examples():
    est = calibration_estimator([4, 3, 2], 9)
    assert est.pi_hat == (Fraction(1, 2), Fraction(2, 5), Fraction(3, 10))
    assert calibration_estimator([0, 7], 7).pi_hat == (Fraction(1, 8), Fraction(1, 1))
    with pytest.raises(ValueError):
        calibration_estimator([1, 1], 3)


def _family(rows):
    flat = Rationals.from_fractions([Fraction(v) for row in rows for v in row])
    shape = (len(rows), len(rows[0]))
    return ClassPValues(Rationals(flat.num.reshape(shape), flat.den.reshape(shape)), "class", np.zeros(shape))


def test_weighted_pvalues():
    third = Fraction(1, 3)
    fam = _family([[Fraction(1, 5), Fraction(1, 2), Fraction(9, 10)]])
    pi = ClassProportionEstimate((Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)), "test")
    out = weighted_pvalues(fam, pi, (third, third, third))
    assert out.pvalue(0, 1) == Fraction(3, 10)
    assert out.pvalue(0, 2) == Fraction(3, 8)
    assert out.pvalue(0, 3) == Fraction(27, 40)
    big = ClassProportionEstimate((Fraction(9, 10), Fraction(1, 20), Fraction(1, 20)), "test")
    assert weighted_pvalues(fam, big).pvalue(0, 3) == Fraction(27, 200)
    assert weighted_pvalues(fam, big).pvalue(0, 1) == Fraction(27, 50)
    over = weighted_pvalues(_family([[Fraction(9, 10)] * 3]), big)
    assert over.pvalue(0, 1) == 1


def test_weighted_identity_when_estimate_equals_weights():
    fam = _family([[Fraction(1, 5), Fraction(1, 2), Fraction(9, 10)], [Fraction(1, 7), 1, Fraction(2, 7)]])
    w = (Fraction(1, 2), Fraction(1, 3), Fraction(1, 6))
    out = weighted_pvalues(fam, ClassProportionEstimate(w, "test"), w)
    assert out.values.fractions() == fam.values.fractions()


def test_weighted_rejects_bad_weights():
    fam = _family([[Fraction(1, 2)] * 3])
    pi = ClassProportionEstimate((Fraction(1, 3),) * 3, "test")
    with pytest.raises(ValueError):
        weighted_pvalues(fam, pi, (Fraction(1, 2), Fraction(1, 2), 0))
    with pytest.raises(ValueError):
        weighted_pvalues(fam, pi, (Fraction(1, 2), Fraction(1, 2)))


def test_superuniform_pvalue_exchangeable():
    # exchangeable scores: P(p <= k/(n+1)) = k/(n+1) exactly
    rng = np.random.default_rng(11)
    n, reps = 9, 20000
    p = np.empty(reps)
    for b in range(reps):
        s = rng.random((n + 1, 1))
        scored = ClassificationScores(s[:n], np.ones(n, int), s[n:])
        p[b] = full_calibrated_family(scored).values.to_float()[0, 0]
    for k in (1, 3, 5):
        freq = np.mean(p <= k / (n + 1))
        se = math.sqrt(k / (n + 1) * (1 - k / (n + 1)) / reps)
        assert abs(freq - k / (n + 1)) < 4 * se
