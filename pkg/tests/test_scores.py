import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from infocp.data import DataError, SplitDataset, read_features_csv, read_labeled_csv, read_matrix_csv, score_dataset
from infocp.harness import ClassificationScenario
from infocp.informative import NonTrivial
from infocp.scores import (
    Bump,
    ClassResidual,
    Curve,
    LinearFunction,
    LocallyWeighted,
    MonotoneSigned,
    QuantileBased,
    TieBreaker,
    fit_gaussian_classifier,
    score,
)


def const(v):
    return Curve("constant", a=v)


@pytest.fixture
def x0():
    return np.zeros((1, 1))


class FixedProbs:
    def __init__(self, row):
        self.row = np.asarray(row, float)

    def __call__(self, x):
        return np.tile(self.row, (np.atleast_2d(x).shape[0], 1))


def test_locally_weighted_score(x0):
    assert score(LocallyWeighted(const(2.0), const(1.0)), x0, 5.0) == 3.0


def test_quantile_score(x0):
    # max(0 - 2, 2 - 4)
    assert score(QuantileBased(const(0.0), const(4.0)), x0, 2.0) == -2.0


def test_class_residual_score(x0):
    assert score(ClassResidual(FixedProbs([0.7, 0.3]), 2), x0, 1) == pytest.approx(0.3)


def test_monotone_signed_score(x0):
    assert score(MonotoneSigned(const(1.0), const(2.0)), x0, 4.0) == -1.5


def test_dimension_mismatch():
    model = LocallyWeighted(LinearFunction((1.0, 2.0)), const(1.0))
    with pytest.raises(ValueError, match="dimension"):
        model.score(np.zeros((1, 3)), 0.0)


def test_nonpositive_sigma_rejected(x0):
    with pytest.raises(ValueError, match="positive"):
        LocallyWeighted(const(0.0), const(0.0)).score(x0, 1.0)


def test_quantile_model_with_crossed_quantiles_rejected(x0):
    with pytest.raises(ValueError):
        QuantileBased(const(1.0), const(0.0)).score(x0, 0.5)


def test_level_set_locally_weighted(x0):
    lo, hi = LocallyWeighted(const(0.0), const(1.0)).level_set(x0, 2.0)
    assert (lo[0], hi[0]) == (-2.0, 2.0)


def test_level_set_class_residual(x0):
    model = ClassResidual(FixedProbs([0.5, 0.3, 0.2]), 3)
    # residuals are (0.5, 0.7, 0.8): only label 1 is within 0.6
    assert model.level_set(x0, 0.6) == [frozenset({1})]
    assert model.level_set(x0, 0.75) == [frozenset({1, 2})]
    assert model.level_set(x0, math.inf) == [frozenset({1, 2, 3})]


def test_level_set_infinite_threshold(x0):
    for model in (
        LocallyWeighted(const(0.0), const(1.0)),
        QuantileBased(const(-1.0), const(1.0)),
    ):
        lo, hi = model.level_set(x0, math.inf)
        assert lo[0] == -math.inf and hi[0] == math.inf
    lo, hi = MonotoneSigned(const(0.0), const(1.0)).level_set(x0, 1.0)
    assert (lo[0], hi[0]) == (-1.0, math.inf)


def test_quantile_level_set(x0):
    lo, hi = QuantileBased(const(0.0), const(4.0)).level_set(x0, 1.0)
    assert (lo[0], hi[0]) == (-1.0, 5.0)


regression_models = st.sampled_from(
    [
        LocallyWeighted(Curve("linear", 0.5, 2.0), Curve("quadratic", 0.3, 1.0)),
        QuantileBased(Curve("linear", -1.0, 1.0), Curve("linear", 1.0, 1.0)),
        MonotoneSigned(Curve("sine", 0.0, 1.0, 2.0), Curve("abs", 0.5, 1.0)),
    ]
)
finite = st.floats(-5, 5, allow_nan=False)


@settings(max_examples=200, deadline=None)
@given(regression_models, finite, finite)
def test_level_set_contains_its_point(model, x, y):
    xx = np.array([[x]])
    s = model.score(xx, y)[0]
    lo, hi = model.level_set(xx, s)
    assert lo[0] - 1e-9 <= y <= hi[0] + 1e-9


@settings(max_examples=200, deadline=None)
@given(regression_models, finite, st.floats(0, 5), st.floats(0, 5))
def test_level_set_monotone_in_threshold(model, x, s1, s2):
    s1, s2 = sorted((s1, s2))
    xx = np.array([[x]])
    lo1, hi1 = model.level_set(xx, s1)
    lo2, hi2 = model.level_set(xx, s2)
    assert lo2[0] <= lo1[0] and hi1[0] <= hi2[0]


@settings(max_examples=200, deadline=None)
@given(finite, finite, finite)
def test_monotone_score_nonincreasing(x, y1, y2):
    model = MonotoneSigned(Curve("linear", 0.0, 3.0), Curve("quadratic", 0.3, 1.0))
    y1, y2 = sorted((y1, y2))
    xx = np.array([[x]])
    assert model.score(xx, y1)[0] >= model.score(xx, y2)[0]


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=3, max_size=3), st.floats(0, 1))
def test_class_level_set_contains_label(w, t):
    p = np.array(w) / sum(w)
    model = ClassResidual(FixedProbs(p), 3)
    x = np.zeros((1, 1))
    for y in (1, 2, 3):
        assert y in model.level_set(x, model.score(x, y)[0])[0]


def test_curve_roundtrip():
    c = Curve("quadratic", 0.3, 1.0, bumps=(Bump(0.0, 0.3, 1.0),), scale_bumps=(Bump(1.0, 0.2, -0.5),))
    assert Curve.from_dict(c.to_dict()) == c
    with pytest.raises(ValueError):
        Curve.from_dict({"kind": "linear", "slope": 1})


def test_classifier_separated_classes():
    rng = np.random.default_rng(0)
    x = np.concatenate([rng.normal(-3, 1, 50), rng.normal(3, 1, 50)])[:, None]
    y = np.repeat([1, 2], 50)
    model = fit_gaussian_classifier(x, y, 2)
    probs = model.pi(np.array([[x[y == 1].mean()]]))
    assert probs[0, 0] > 0.5


def test_classifier_symmetric_midpoint():
    x = np.array([[-1.0], [-3.0], [1.0], [3.0]])
    y = np.array([1, 1, 2, 2])
    probs = fit_gaussian_classifier(x, y, 2).pi(np.array([[0.0]]))
    assert abs(probs[0, 0] - probs[0, 1]) < 1e-9


def test_classifier_needs_two_per_class():
    with pytest.raises(ValueError, match="fewer than 2"):
        fit_gaussian_classifier(np.zeros((3, 1)), np.array([1, 1, 2]), 2)


def test_classifier_accuracy_high_snr():
    sc = ClassificationScenario("acc", 8.0, (0.33, 0.33, 0.34), NonTrivial())
    rng = np.random.default_rng(4)
    y = sc.labels(sc.probs_cal, 1000, rng)
    x = sc.features(y, rng)
    model = fit_gaussian_classifier(x, y, 3)
    acc = np.mean(np.argmax(model.pi(x), axis=1) + 1 == y)
    assert acc > 0.9


def test_tie_breaker_deterministic_and_small():
    tb = TieBreaker(7)
    a = tb.uniforms(np.arange(5), np.ones(5))
    assert np.array_equal(a, TieBreaker(7).uniforms(np.arange(5), np.ones(5)))
    assert not np.array_equal(a, TieBreaker(8).uniforms(np.arange(5), np.ones(5)))
    assert np.all((a >= 0) & (a < 1))
    S = np.full((4, 3), 0.5)
    J = tb.apply(S, offset=10)
    assert np.all(np.abs(J - S) <= 1e-12)
    assert np.array_equal(J[1:], tb.apply(S[1:], offset=11))


def test_tie_breaker_makes_scores_distinct():
    # duplicated features produce identical true-label scores without jitter
    x = np.repeat(np.array([[0.0, 0.0], [1.0, 1.0]]), 30, axis=0)
    y = np.tile([1, 2], 30)
    model = ClassResidual(FixedProbs([0.6, 0.4]), 2)
    data = SplitDataset(x[:40], y[:40], x[40:], y[40:])
    scored = score_dataset(data, model, TieBreaker(3))
    true = np.concatenate([scored.true_cal_scores(), scored.test[np.arange(20), y[40:] - 1]])
    assert np.unique(true).size == true.size


def test_split_dataset_validation():
    with pytest.raises(DataError):
        SplitDataset(np.zeros((2, 2)), np.zeros(3), np.zeros((1, 2)))
    with pytest.raises(DataError):
        SplitDataset(np.zeros((2, 2)), np.zeros(2), np.zeros((1, 3)))
    with pytest.raises(DataError):
        SplitDataset(np.zeros((2, 2)), np.zeros(2), np.zeros((0, 2)))
    d = SplitDataset(np.zeros((2, 1)), np.array([1, 2]), np.zeros((3, 1)))
    assert (d.n, d.m) == (2, 3)
    assert d.calibration[1].label == 2


def test_csv_readers(tmp_path):
    cal = tmp_path / "cal.csv"
    cal.write_text("f1,f2,label\n0.5,1,2\n1.5,2,1\n")
    x, y = read_labeled_csv(cal, "classification")
    assert x.shape == (2, 2) and list(y) == [2, 1]
    test = tmp_path / "test.csv"
    test.write_text("f1,f2\n0,0\n")
    assert read_features_csv(test).shape == (1, 2)
    probs = tmp_path / "p.csv"
    probs.write_text("0.2,0.8\n0.5,0.5\n")
    assert read_matrix_csv(probs, 2).shape == (2, 2)


def test_csv_errors_are_line_numbered(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("f1,label\n1.0,2\nabc,1\n")
    with pytest.raises(DataError, match="line 3"):
        read_labeled_csv(bad, "classification")
    bad.write_text("f1,label\n1.0,0\n")
    with pytest.raises(DataError, match="1-based"):
        read_labeled_csv(bad, "classification")
    bad.write_text("f1,f2,label\n1.0,2\n")
    with pytest.raises(DataError, match="line 2"):
        read_labeled_csv(bad)
