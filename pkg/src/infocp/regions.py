"""Prediction regions: closed intervals for regression, label sets for classification."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``; empty when ``lo > hi``; endpoints may be infinite."""

    lo: float
    hi: float

    @property
    def empty(self) -> bool:
        return self.lo > self.hi

    @property
    def length(self) -> float:
        return 0.0 if self.empty else self.hi - self.lo

    def __contains__(self, y) -> bool:
        return self.lo <= y <= self.hi

    def issubset(self, other: "Interval") -> bool:
        return self.empty or (other.lo <= self.lo and self.hi <= other.hi)


@dataclass(frozen=True)
class LabelSet:
    """Subset of ``{1..K}``."""

    labels: frozenset
    K: int

    @property
    def empty(self) -> bool:
        return not self.labels

    @property
    def length(self) -> int:
        return len(self.labels)

    def __contains__(self, y) -> bool:
        return int(y) in self.labels

    def issubset(self, other: "LabelSet") -> bool:
        return self.labels <= other.labels


PredictionRegion = Interval | LabelSet


@dataclass(frozen=True)
class IntervalRegions:
    """Regions for a batch of selected points, stored as endpoint arrays."""

    lo: np.ndarray
    hi: np.ndarray

    def __len__(self):
        return len(self.lo)

    def __getitem__(self, j) -> Interval:
        return Interval(float(self.lo[j]), float(self.hi[j]))

    def covers(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        return (self.lo <= y) & (y <= self.hi)

    def sizes(self) -> np.ndarray:
        return np.where(self.lo > self.hi, 0.0, self.hi - self.lo)

    def take(self, idx) -> "IntervalRegions":
        return IntervalRegions(self.lo[idx], self.hi[idx])


@dataclass(frozen=True)
class LabelRegions:
    """Boolean membership matrix of shape (n_selected, K); column k is label k+1."""

    mask: np.ndarray

    def __len__(self):
        return self.mask.shape[0]

    def __getitem__(self, j) -> LabelSet:
        return LabelSet(frozenset(int(k) + 1 for k in np.flatnonzero(self.mask[j])), self.mask.shape[1])

    def covers(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=int)
        return self.mask[np.arange(len(y)), y - 1]

    def sizes(self) -> np.ndarray:
        return self.mask.sum(axis=1).astype(float)

    def take(self, idx) -> "LabelRegions":
        return LabelRegions(self.mask[idx])


def to_batch(regions: list) -> IntervalRegions | LabelRegions:
    if regions and isinstance(regions[0], LabelSet):
        K = regions[0].K
        mask = np.zeros((len(regions), K), dtype=bool)
        for j, r in enumerate(regions):
            for lab in r.labels:
                mask[j, lab - 1] = True
        return LabelRegions(mask)
    return IntervalRegions(
        np.array([r.lo for r in regions], dtype=float), np.array([r.hi for r in regions], dtype=float)
    )


def region_length(region: PredictionRegion) -> float:
    return float(region.length) if not (isinstance(region, Interval) and math.isinf(region.length)) else math.inf
