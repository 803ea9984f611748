"""Conformal p-value families and score-threshold prediction sets.

A p-value is ``(1 + #{calibration scores >= s}) / (n' + 1)`` for the relevant
calibration count ``n'``.  Families are kept as exact rationals; see
:mod:`infocp.rational`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .data import ClassificationScores, RegressionScores
from .rational import RationalLike, Rationals, as_fraction
from .regions import Interval, IntervalRegions, LabelRegions, LabelSet
from .scores import ClassResidual, as_matrix


def count_at_least(sorted_scores: np.ndarray, s) -> np.ndarray:
    """Number of calibration scores ``>= s`` (vectorized over ``s``)."""
    sorted_scores = np.asarray(sorted_scores, dtype=float)
    return sorted_scores.size - np.searchsorted(sorted_scores, s, side="left")


@dataclass(frozen=True)
class CalibrationScores:
    """Sorted true-label calibration scores, optionally grouped by class (1-based)."""

    scores: np.ndarray
    by_class: Optional[dict] = None

    def __post_init__(self):
        object.__setattr__(self, "scores", np.sort(np.asarray(self.scores, dtype=float)))
        if self.by_class is not None:
            grouped = {int(k): np.sort(np.asarray(v, dtype=float)) for k, v in self.by_class.items()}
            object.__setattr__(self, "by_class", grouped)

    @classmethod
    def from_labeled(cls, scores, labels=None) -> "CalibrationScores":
        scores = np.asarray(scores, dtype=float)
        if labels is None:
            return cls(scores)
        labels = np.asarray(labels, dtype=int)
        return cls(scores, {int(k): scores[labels == k] for k in np.unique(labels)})

    @property
    def n(self) -> int:
        return self.scores.size

    def class_scores(self, y: int) -> np.ndarray:
        if self.by_class is None:
            raise ValueError("calibration scores are not grouped by class")
        return self.by_class.get(int(y), np.empty(0))


def full_calibrated_pvalue(cal: CalibrationScores, test_score: float) -> Fraction:
    return Fraction(1 + int(count_at_least(cal.scores, test_score)), cal.n + 1)


def class_calibrated_pvalue(cal: CalibrationScores, test_score: float, y: int) -> Fraction:
    # A class absent from calibration gets p = 1/1.
    scores = cal.class_scores(y)
    return Fraction(1 + int(count_at_least(scores, test_score)), scores.size + 1)


def preprocessed_pvalue(split_cal: CalibrationScores, test_score: float) -> Fraction:
    """Full-calibrated p-value against the post-selection calibration subset."""
    return full_calibrated_pvalue(split_cal, test_score)


def threshold_index(n_cal: int, alpha: RationalLike) -> int:
    """``ceil((1 - alpha)(n_cal + 1))`` clamped to ``[1, n_cal + 1]`` (exact)."""
    a = as_fraction(alpha)
    return min(max(math.ceil((1 - a) * (n_cal + 1)), 1), n_cal + 1)


def score_threshold(cal, alpha: RationalLike) -> float:
    """Order statistic ``S_(ceil((1-alpha)(n+1)))`` with ``S_(n+1) = +inf``."""
    scores = cal.scores if isinstance(cal, CalibrationScores) else np.sort(np.asarray(cal, float))
    k = threshold_index(scores.size, alpha)
    return math.inf if k > scores.size else float(scores[k - 1])


def prediction_set(model, x, cal: CalibrationScores, alpha: RationalLike, K: int | None = None):
    """Classical conformal set ``{y : p^(y) > alpha}`` in score-threshold form.

    For a :class:`ClassResidual` model and class-grouped ``cal``, each label uses
    its own class threshold (class-calibrated set); otherwise one threshold.
    """
    x = as_matrix(x)
    if isinstance(model, ClassResidual):
        S = model.score_matrix(x)[0]
        if cal.by_class is not None:
            labels = [
                k + 1 for k in range(model.K)
                if S[k] <= score_threshold(cal.class_scores(k + 1), alpha)
            ]
        else:
            s = score_threshold(cal, alpha)
            labels = [k + 1 for k in range(model.K) if S[k] <= s]
        return LabelSet(frozenset(labels), model.K)
    lo, hi = model.level_set(x, score_threshold(cal, alpha))
    return Interval(float(lo[0]), float(hi[0]))


# --- families ----------------------------------------------------------------------


@dataclass(frozen=True)
class ClassPValues:
    """Dense ``(m, K)`` p-value matrix for classification.

    ``kind`` is ``full``, ``class``, ``weighted`` or ``preprocessed``.
    ``test_scores`` are kept for post-processing empty sets.
    """

    values: Rationals
    kind: str
    test_scores: np.ndarray

    task = "classification"

    @property
    def m(self) -> int:
        return self.values.num.shape[0]

    @property
    def K(self) -> int:
        return self.values.num.shape[1]

    def column(self, y: int) -> Rationals:
        return Rationals(self.values.num[:, y - 1], self.values.den[:, y - 1])

    def pvalue(self, i: int, y: int) -> Fraction:
        return Fraction(int(self.values.num[i, y - 1]), int(self.values.den[i, y - 1]))

    def regions(self, idx, level: Fraction) -> LabelRegions:
        """``{y : p_i^(y) > level}`` for each row in ``idx``."""
        sub = Rationals(self.values.num[idx], self.values.den[idx])
        return LabelRegions(sub.gt(level).reshape(len(np.atleast_1d(idx)), self.K))

    def take(self, idx) -> "ClassPValues":
        return ClassPValues(Rationals(self.values.num[idx], self.values.den[idx]), self.kind, self.test_scores[idx])


@dataclass(frozen=True)
class RegressionPValues:
    """Lazy full-calibrated (or pre-processed) p-values ``p_i^(y)`` for regression."""

    model: object
    cal_scores: np.ndarray  # sorted
    test_x: np.ndarray
    kind: str = "full"

    task = "regression"

    def __post_init__(self):
        object.__setattr__(self, "cal_scores", np.sort(np.asarray(self.cal_scores, dtype=float)))
        object.__setattr__(self, "test_x", as_matrix(self.test_x))

    @property
    def m(self) -> int:
        return self.test_x.shape[0]

    @property
    def n_cal(self) -> int:
        return self.cal_scores.size

    def from_scores(self, s) -> Rationals:
        """p-values for given score values, one per test row."""
        return Rationals(1 + count_at_least(self.cal_scores, s), np.int64(self.n_cal + 1))

    def at(self, y) -> Rationals:
        """``p_i^(y_i)`` for every test row (``y`` broadcast to length m)."""
        return self.from_scores(self.model.score(self.test_x, y))

    def pvalue(self, i: int, y: float) -> Fraction:
        s = self.model.score(self.test_x[i : i + 1], y)[0]
        return Fraction(1 + int(count_at_least(self.cal_scores, s)), self.n_cal + 1)

    def threshold(self, level: Fraction) -> float:
        k = threshold_index(self.n_cal, level)
        return math.inf if k > self.n_cal else float(self.cal_scores[k - 1])

    def regions(self, idx, level: Fraction) -> IntervalRegions:
        x = self.test_x[idx]
        if x.shape[0] == 0:
            return IntervalRegions(np.empty(0), np.empty(0))
        lo, hi = self.model.level_set(x, self.threshold(level))
        return IntervalRegions(np.asarray(lo, float), np.asarray(hi, float))

    def take(self, idx) -> "RegressionPValues":
        return RegressionPValues(self.model, self.cal_scores, self.test_x[idx], self.kind)


PValueFamily = ClassPValues | RegressionPValues


def full_calibrated_family(scored, cal_idx=None, test_idx=None, kind: str = "full") -> PValueFamily:
    """Full-calibrated p-values from the true-label scores of ``cal_idx``."""
    cal_idx = slice(None) if cal_idx is None else cal_idx
    test_idx = slice(None) if test_idx is None else test_idx
    if isinstance(scored, RegressionScores):
        sub = scored.subset(cal_idx, test_idx)
        return RegressionPValues(sub.model, sub.true_cal_scores(), sub.test_x, kind)
    sub = scored.subset(cal_idx, test_idx)
    cal = np.sort(sub.true_cal_scores())
    num = 1 + count_at_least(cal, sub.test)
    return ClassPValues(Rationals(num, np.int64(cal.size + 1)), kind, sub.test)


def class_calibrated_family(scored: ClassificationScores, cal_idx=None, test_idx=None) -> ClassPValues:
    cal_idx = slice(None) if cal_idx is None else cal_idx
    test_idx = slice(None) if test_idx is None else test_idx
    sub = scored.subset(cal_idx, test_idx)
    num = np.empty(sub.test.shape, dtype=np.int64)
    den = np.empty(sub.test.shape, dtype=np.int64)
    for k in range(sub.K):
        own = np.sort(sub.cal[sub.cal_labels == k + 1, k])
        num[:, k] = 1 + count_at_least(own, sub.test[:, k])
        den[:, k] = own.size + 1
    return ClassPValues(Rationals(num, den), "class", sub.test)


def build_family(scored, kind: str = "full") -> PValueFamily:
    if kind == "full":
        return full_calibrated_family(scored)
    if kind == "class":
        if not isinstance(scored, ClassificationScores):
            raise ValueError("class-calibrated p-values exist only for classification")
        return class_calibrated_family(scored)
    raise ValueError(f"unknown p-value kind {kind!r}")


# --- class proportion estimates and weighting --------------------------------------------


@dataclass(frozen=True)
class ClassProportionEstimate:
    pi_hat: tuple
    source: str

    def __post_init__(self):
        pi = tuple(as_fraction(p) for p in self.pi_hat)
        if any(p <= 0 for p in pi):
            raise ValueError("class proportion estimates must be positive")
        object.__setattr__(self, "pi_hat", pi)


def calibration_estimator(class_counts: Sequence[int], n: int) -> ClassProportionEstimate:
    """``(count_k + 1) / (n + 1)`` for each class."""
    counts = [int(c) for c in class_counts]
    if sum(counts) != n:
        raise ValueError(f"class counts sum to {sum(counts)}, expected n={n}")
    return ClassProportionEstimate(tuple(Fraction(c + 1, n + 1) for c in counts), "calibration")


def storey_estimator(p_column, lam: RationalLike) -> Fraction:
    """``(1 + #{p_i > lam}) / (m (1 - lam))``."""
    lam = as_fraction(lam)
    if not 0 < lam < 1:
        raise ValueError("lambda must lie in (0, 1)")
    if isinstance(p_column, Rationals):
        above = int(np.sum(p_column.gt(lam)))
        m = len(p_column)
    else:
        vals = [as_fraction(p) for p in p_column]
        above = sum(p > lam for p in vals)
        m = len(vals)
    return Fraction(1 + above, 1) / (m * (1 - lam))


def storey_proportions(family: ClassPValues, lam: RationalLike) -> ClassProportionEstimate:
    return ClassProportionEstimate(
        tuple(storey_estimator(family.column(k + 1), lam) for k in range(family.K)),
        f"storey({as_fraction(lam)})",
    )


def weighted_pvalues(family: ClassPValues, pi_hat: ClassProportionEstimate, w=None) -> ClassPValues:
    """``min(1, pi_hat_k / w_k * p_i^(k))``; ``w`` defaults to uniform ``1/K``."""
    K = family.K
    w = [Fraction(1, K)] * K if w is None else [as_fraction(v) for v in w]
    if len(w) != K or len(pi_hat.pi_hat) != K:
        raise ValueError(f"need {K} weights and {K} proportion estimates")
    if any(v < 0 for v in w) or sum(w) != 1:
        raise ValueError("weights must be nonnegative and sum to 1")
    num = family.values.num.copy()
    den = family.values.den.copy()
    for k in range(K):
        if w[k] == 0:
            raise ValueError(f"weight for class {k + 1} is zero")
        col = Rationals(num[:, k], den[:, k]).scaled(pi_hat.pi_hat[k] / w[k]).clip_one()
        num[:, k], den[:, k] = col.num, col.den
    return ClassPValues(Rationals(num, den), "weighted", family.test_scores)
