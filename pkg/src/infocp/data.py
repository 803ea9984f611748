"""Calibration/test containers, scored bundles and CSV ingestion."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .scores import ClassResidual, RegressionScore, TieBreaker, as_matrix


class DataError(ValueError):
    """Malformed or inconsistent input data."""


@dataclass(frozen=True)
class LabeledExample:
    features: tuple[float, ...]
    label: float | int


@dataclass(frozen=True)
class SplitDataset:
    """Calibration sample plus test covariates.

    ``test_labels_hidden`` is only for evaluation; procedures never read it.
    Classification labels are 1-based integers.
    """

    cal_x: np.ndarray
    cal_y: np.ndarray
    test_x: np.ndarray
    test_labels_hidden: Optional[np.ndarray] = None

    def __post_init__(self):
        cal_x, test_x = as_matrix(self.cal_x), as_matrix(self.test_x)
        cal_y = np.asarray(self.cal_y)
        if cal_x.shape[0] != cal_y.shape[0]:
            raise DataError("calibration features and labels have different lengths")
        if cal_x.shape[0] < 1 or test_x.shape[0] < 1:
            raise DataError("need n >= 1 calibration points and m >= 1 test points")
        if cal_x.shape[1] != test_x.shape[1]:
            raise DataError(
                f"calibration has {cal_x.shape[1]} features but test has {test_x.shape[1]}"
            )
        object.__setattr__(self, "cal_x", cal_x)
        object.__setattr__(self, "test_x", test_x)
        object.__setattr__(self, "cal_y", cal_y)
        if self.test_labels_hidden is not None:
            hidden = np.asarray(self.test_labels_hidden)
            if hidden.shape[0] != test_x.shape[0]:
                raise DataError("hidden test labels do not match the test sample size")
            object.__setattr__(self, "test_labels_hidden", hidden)

    @property
    def n(self) -> int:
        return self.cal_x.shape[0]

    @property
    def m(self) -> int:
        return self.test_x.shape[0]

    @property
    def calibration(self) -> list[LabeledExample]:
        return [LabeledExample(tuple(map(float, x)), y.item()) for x, y in zip(self.cal_x, self.cal_y)]


# --- scored bundles -------------------------------------------------------------


@dataclass(frozen=True)
class ClassificationScores:
    """All-label scores ``S_k(x)`` for calibration (n, K) and test (m, K) rows."""

    cal: np.ndarray
    cal_labels: np.ndarray
    test: np.ndarray

    task = "classification"

    def __post_init__(self):
        cal, test = np.asarray(self.cal, float), np.asarray(self.test, float)
        labels = np.asarray(self.cal_labels, dtype=int)
        if cal.ndim != 2 or test.ndim != 2 or cal.shape[1] != test.shape[1]:
            raise DataError("score tables must be (n, K) and (m, K) with the same K")
        if labels.shape != (cal.shape[0],):
            raise DataError("one calibration label per calibration score row is required")
        if labels.size and (labels.min() < 1 or labels.max() > cal.shape[1]):
            raise DataError(f"calibration labels must lie in 1..{cal.shape[1]}")
        object.__setattr__(self, "cal", cal)
        object.__setattr__(self, "test", test)
        object.__setattr__(self, "cal_labels", labels)

    @property
    def K(self) -> int:
        return self.cal.shape[1]

    @property
    def n(self) -> int:
        return self.cal.shape[0]

    @property
    def m(self) -> int:
        return self.test.shape[0]

    def true_cal_scores(self) -> np.ndarray:
        return self.cal[np.arange(self.n), self.cal_labels - 1]

    def subset(self, cal_idx, test_idx) -> "ClassificationScores":
        return ClassificationScores(self.cal[cal_idx], self.cal_labels[cal_idx], self.test[test_idx])


@dataclass(frozen=True)
class RegressionScores:
    model: RegressionScore
    cal_x: np.ndarray
    cal_y: np.ndarray
    test_x: np.ndarray

    task = "regression"

    def __post_init__(self):
        object.__setattr__(self, "cal_x", as_matrix(self.cal_x))
        object.__setattr__(self, "test_x", as_matrix(self.test_x))
        object.__setattr__(self, "cal_y", np.asarray(self.cal_y, dtype=float))

    @property
    def n(self) -> int:
        return self.cal_x.shape[0]

    @property
    def m(self) -> int:
        return self.test_x.shape[0]

    def true_cal_scores(self) -> np.ndarray:
        if self.n == 0:
            return np.empty(0)
        return self.model.score(self.cal_x, self.cal_y)

    def subset(self, cal_idx, test_idx) -> "RegressionScores":
        return RegressionScores(self.model, self.cal_x[cal_idx], self.cal_y[cal_idx], self.test_x[test_idx])


Scored = ClassificationScores | RegressionScores


def score_dataset(data: SplitDataset, model, tie_breaker: TieBreaker | None = None) -> Scored:
    """Evaluate ``model`` on a dataset, optionally jittering classification scores.

    Calibration rows are examples ``0..n-1`` and test rows ``n..n+m-1`` for the
    tie breaker.
    """
    if isinstance(model, ClassResidual):
        labels = np.asarray(data.cal_y, dtype=int)
        if labels.size and (labels.min() < 1 or labels.max() > model.K):
            raise DataError(f"labels must lie in 1..{model.K}")
        cal = model.score_matrix(data.cal_x)
        test = model.score_matrix(data.test_x)
        if tie_breaker is not None:
            cal = tie_breaker.apply(cal, 0)
            test = tie_breaker.apply(test, data.n)
        return ClassificationScores(cal, labels, test)
    if isinstance(model, RegressionScore):
        return RegressionScores(model, data.cal_x, np.asarray(data.cal_y, float), data.test_x)
    raise TypeError(f"unsupported score model {type(model).__name__}")


# --- CSV ----------------------------------------------------------------------


def _read_rows(path: Path) -> tuple[list[str], list[tuple[int, list[str]]]]:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: file is empty") from None
        rows = [(reader.line_num, row) for row in reader if any(cell.strip() for cell in row)]
    return header, rows


def _feature_columns(header: list[str], path: Path) -> int:
    d = 0
    while d < len(header) and header[d] == f"f{d + 1}":
        d += 1
    if d == 0:
        raise DataError(f"{path}: line 1: expected feature columns f1..fd, got {header}")
    return d


def _parse_float(cell: str, path: Path, line: int) -> float:
    try:
        return float(cell)
    except ValueError:
        raise DataError(f"{path}: line {line}: not a number: {cell!r}") from None


def read_labeled_csv(path, task: str = "regression") -> tuple[np.ndarray, np.ndarray]:
    """Read ``f1..fd,label``; classification labels must be positive integers."""
    path = Path(path)
    header, rows = _read_rows(path)
    d = _feature_columns(header, path)
    if header[d:] != ["label"]:
        raise DataError(f"{path}: line 1: expected columns f1..f{d},label, got {header}")
    feats, labels = [], []
    for line, row in rows:
        if len(row) != d + 1:
            raise DataError(f"{path}: line {line}: expected {d + 1} fields, got {len(row)}")
        feats.append([_parse_float(c, path, line) for c in row[:d]])
        if task == "classification":
            try:
                lab = int(row[d])
            except ValueError:
                raise DataError(f"{path}: line {line}: label must be an integer, got {row[d]!r}") from None
            if lab < 1:
                raise DataError(f"{path}: line {line}: labels are 1-based, got {lab}")
            labels.append(lab)
        else:
            labels.append(_parse_float(row[d], path, line))
    if not feats:
        raise DataError(f"{path}: no data rows")
    return np.array(feats, dtype=float), np.array(labels, dtype=int if task == "classification" else float)


def read_features_csv(path) -> np.ndarray:
    path = Path(path)
    header, rows = _read_rows(path)
    d = _feature_columns(header, path)
    if len(header) != d:
        raise DataError(f"{path}: line 1: expected only feature columns f1..f{d}, got {header}")
    feats = []
    for line, row in rows:
        if len(row) != d:
            raise DataError(f"{path}: line {line}: expected {d} fields, got {len(row)}")
        feats.append([_parse_float(c, path, line) for c in row])
    if not feats:
        raise DataError(f"{path}: no data rows")
    return np.array(feats, dtype=float)


def read_matrix_csv(path, width: int | None = None) -> np.ndarray:
    """Headerless-or-headed numeric table (used for precomputed probability tables)."""
    path = Path(path)
    header, rows = _read_rows(path)
    try:
        [float(c) for c in header]
        rows = [(1, header)] + rows
    except ValueError:
        pass
    out = []
    for line, row in rows:
        if width is not None and len(row) != width:
            raise DataError(f"{path}: line {line}: expected {width} fields, got {len(row)}")
        out.append([_parse_float(c, path, line) for c in row])
    if not out:
        raise DataError(f"{path}: no data rows")
    return np.array(out, dtype=float)
