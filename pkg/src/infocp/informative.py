"""Collections of informative prediction sets and their adjusted p-values.

A collection ``I`` is described by an :class:`InformativeSpec`.  Its adjusted
p-value ``q_i`` is the smallest level at which the classical conformal set of
test point ``i`` belongs to ``I``; the closed forms below avoid scanning levels,
and :func:`adjusted_pvalue_generic` does the scan for anything else.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .pvalues import ClassPValues, RegressionPValues
from .rational import Rationals, elementwise_max, elementwise_min, row_order_stat
from .regions import LabelRegions, LabelSet, to_batch


class SpecError(ValueError):
    """Invalid spec, or a spec used with the wrong task."""


class InvariantViolation(RuntimeError):
    """A monotonicity assumption failed for a spec/score-model pair."""


def _float(v) -> float:
    if v is None:
        return -math.inf
    if isinstance(v, str):
        return float(v.replace("infinity", "inf"))
    return float(v)


def _json_float(v: float):
    return None if math.isinf(v) else v


class InformativeSpec:
    task = "any"  # "classification", "regression" or "any"

    def check(self, task: str, K: int | None = None) -> None:
        if self.task != "any" and self.task != task:
            raise SpecError(f"{type(self).__name__} applies only to {self.task}, not {task}")

    def informative(self, regions) -> np.ndarray:
        raise NotImplementedError

    def null(self, y) -> np.ndarray:
        """True where ``y`` lies outside every informative set (FDR nulls)."""
        return np.zeros(np.shape(y), dtype=bool)

    def to_dict(self) -> dict:
        raise NotImplementedError

    def is_informative(self, region) -> bool:
        return bool(self.informative(to_batch([region]))[0])


def is_informative(region, spec: InformativeSpec) -> bool:
    task = "classification" if isinstance(region, LabelSet) else "regression"
    spec.check(task, region.K if isinstance(region, LabelSet) else None)
    return spec.is_informative(region)


@dataclass(frozen=True)
class ExcludeLabels(InformativeSpec):
    """Sets avoiding every label in ``labels`` (class labels or real values)."""

    labels: frozenset

    def __post_init__(self):
        labels = frozenset(self.labels)
        if not labels:
            raise SpecError("ExcludeLabels needs at least one label")
        object.__setattr__(self, "labels", labels)

    def check(self, task, K=None):
        if task == "classification" and K is not None:
            bad = [y for y in self.labels if not (float(y).is_integer() and 1 <= y <= K)]
            if bad:
                raise SpecError(f"excluded labels {sorted(bad)} are not in 1..{K}")

    def informative(self, regions):
        if isinstance(regions, LabelRegions):
            cols = [int(y) - 1 for y in self.labels]
            return ~regions.mask[:, cols].any(axis=1)
        hit = np.zeros(len(regions), dtype=bool)
        for y in self.labels:
            hit |= regions.covers(y)
        return ~hit

    def null(self, y):
        return np.isin(np.asarray(y, dtype=float), np.array(sorted(self.labels), dtype=float))

    def to_dict(self):
        return {"kind": "exclude_labels", "labels": sorted(self.labels)}


@dataclass(frozen=True)
class NonTrivial(InformativeSpec):
    """Label sets of size at most ``K - 1``."""

    task = "classification"

    def informative(self, regions):
        return regions.sizes() <= regions.mask.shape[1] - 1

    def to_dict(self):
        return {"kind": "non_trivial"}


@dataclass(frozen=True)
class AtMostK(InformativeSpec):
    k0: int
    task = "classification"

    def check(self, task, K=None):
        super().check(task, K)
        if self.k0 < 1 or (K is not None and self.k0 > K - 1):
            raise SpecError(f"k0 must lie in 1..K-1, got {self.k0}")

    def informative(self, regions):
        return regions.sizes() <= self.k0

    def to_dict(self):
        return {"kind": "at_most_k", "k0": self.k0}


@dataclass(frozen=True)
class ExcludeInterval(InformativeSpec):
    """Intervals disjoint from ``[a, b]`` (``a`` may be ``-inf``)."""

    a: float
    b: float
    task = "regression"

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if math.isnan(a) or math.isnan(b) or a > b:
            raise SpecError(f"need a <= b, got [{a}, {b}]")
        if math.isinf(b) or a == math.inf:
            raise SpecError("b must be finite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def informative(self, regions):
        return (regions.lo > regions.hi) | (regions.hi < self.a) | (regions.lo > self.b)

    def null(self, y):
        y = np.asarray(y, dtype=float)
        return (self.a <= y) & (y <= self.b)

    def to_dict(self):
        return {"kind": "exclude_interval", "a": _json_float(self.a), "b": self.b}


@dataclass(frozen=True)
class LengthAtMost(InformativeSpec):
    """Intervals of length at most ``two_lambda0`` (the empty set counts as length 0)."""

    two_lambda0: float
    task = "regression"

    def __post_init__(self):
        if not self.two_lambda0 > 0 or math.isinf(self.two_lambda0):
            raise SpecError("two_lambda0 must be positive and finite")

    def informative(self, regions):
        with np.errstate(invalid="ignore"):
            return (regions.lo > regions.hi) | (regions.hi - regions.lo <= self.two_lambda0)

    def to_dict(self):
        return {"kind": "length_at_most", "two_lambda0": self.two_lambda0}


@dataclass(frozen=True)
class Localizing(InformativeSpec):
    """Intervals contained in one of the disjoint open cells ``(lo, hi)``."""

    cells: tuple
    task = "regression"

    def __post_init__(self):
        cells = tuple(sorted((float(lo), float(hi)) for lo, hi in self.cells))
        if not cells:
            raise SpecError("Localizing needs at least one cell")
        for lo, hi in cells:
            if not lo < hi:
                raise SpecError(f"empty cell ({lo}, {hi})")
            if math.isinf(lo) and math.isinf(hi):
                raise SpecError("a cell covering the whole line makes every set informative")
        for (_, h1), (l2, _) in zip(cells, cells[1:]):
            if l2 < h1:
                raise SpecError("cells must be pairwise disjoint")
        object.__setattr__(self, "cells", cells)

    def informative(self, regions):
        ok = regions.lo > regions.hi
        for c_lo, c_hi in self.cells:
            lower = (regions.lo > c_lo) | (c_lo == -math.inf)
            upper = (regions.hi < c_hi) | (c_hi == math.inf)
            ok = ok | (lower & upper)
        return ok

    def null(self, y):
        y = np.asarray(y, dtype=float)
        inside = np.zeros(y.shape, dtype=bool)
        for c_lo, c_hi in self.cells:
            inside |= (y > c_lo) & (y < c_hi)
        return ~inside

    def to_dict(self):
        return {"kind": "localizing", "cells": [[_json_float(lo), _json_float(hi)] for lo, hi in self.cells]}


@dataclass(frozen=True)
class Combine(InformativeSpec):
    """Intersection of collections: informative for every part."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(self.parts)
        if not parts:
            raise SpecError("Combine needs at least one part")
        object.__setattr__(self, "parts", parts)

    def check(self, task, K=None):
        for p in self.parts:
            p.check(task, K)

    def informative(self, regions):
        out = np.ones(len(regions), dtype=bool)
        for p in self.parts:
            out &= p.informative(regions)
        return out

    def null(self, y):
        out = np.zeros(np.shape(y), dtype=bool)
        for p in self.parts:
            out |= p.null(y)
        return out

    def to_dict(self):
        return {"kind": "combine", "parts": [p.to_dict() for p in self.parts]}


def spec_from_dict(d: dict) -> InformativeSpec:
    """Parse the tagged-union config form, e.g. ``{"kind": "exclude_interval", "a": 2, "b": 4}``."""
    if not isinstance(d, dict) or "kind" not in d:
        raise SpecError("spec must be an object with a 'kind' field")
    kind = d["kind"]
    fields = {k: v for k, v in d.items() if k != "kind"}
    try:
        if kind == "exclude_labels":
            return ExcludeLabels(frozenset(fields["labels"]))
        if kind == "non_trivial":
            return NonTrivial()
        if kind == "at_most_k":
            return AtMostK(int(fields["k0"]))
        if kind == "exclude_interval":
            return ExcludeInterval(_float(fields.get("a")), _float(fields["b"]))
        if kind == "length_at_most":
            return LengthAtMost(float(fields["two_lambda0"]))
        if kind == "localizing":
            return Localizing(
                tuple((_float(lo), math.inf if hi is None else _float(hi)) for lo, hi in fields["cells"])
            )
        if kind == "combine":
            return Combine(tuple(spec_from_dict(p) for p in fields["parts"]))
    except KeyError as exc:
        raise SpecError(f"spec {kind!r} is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        raise SpecError(f"bad spec {d!r}: {exc}") from None
    raise SpecError(f"unknown spec kind {kind!r}")


# --- adjusted p-values ----------------------------------------------------------------


def _no_closed_form(spec, family):
    raise SpecError(f"no closed form for {type(spec).__name__} with {type(family).__name__}")


def _classification_q(spec: InformativeSpec, fam: ClassPValues) -> Rationals:
    K = fam.K
    if isinstance(spec, ExcludeLabels):
        labels = sorted(int(y) for y in spec.labels)
        q = fam.column(labels[0])
        for y in labels[1:]:
            q = elementwise_max(q, fam.column(y))
        return q
    if isinstance(spec, NonTrivial):
        return row_order_stat(fam.values, 1)
    if isinstance(spec, AtMostK):
        return row_order_stat(fam.values, K - spec.k0)
    if isinstance(spec, Combine):
        qs = [_classification_q(p, fam) for p in spec.parts]
        out = qs[0]
        for q in qs[1:]:
            out = elementwise_max(out, q)
        return out
    return _no_closed_form(spec, fam)


def _count_above(sorted_scores: np.ndarray, A) -> np.ndarray:
    return sorted_scores.size - np.searchsorted(sorted_scores, A, side="right")


def _regression_q(spec: InformativeSpec, fam: RegressionPValues) -> Rationals:
    model, x = fam.model, fam.test_x
    if isinstance(spec, ExcludeLabels):
        qs = [fam.at(float(y)) for y in sorted(spec.labels)]
        out = qs[0]
        for q in qs[1:]:
            out = elementwise_max(out, q)
        return out
    if isinstance(spec, ExcludeInterval):
        # sup of p over [a, b] sits where the score is smallest on [a, b]
        return fam.from_scores(model.inf_over(x, spec.a, spec.b))
    if isinstance(spec, LengthAtMost):
        A = model.length_threshold(x, spec.two_lambda0 / 2)
        return Rationals(1 + _count_above(fam.cal_scores, A), np.int64(fam.n_cal + 1))
    if isinstance(spec, Localizing):
        out = None
        for c_lo, c_hi in spec.cells:
            s = np.full(fam.m, np.inf)
            if c_lo > -math.inf:
                s = np.minimum(s, model.inf_over(x, -math.inf, c_lo))
            if c_hi < math.inf:
                s = np.minimum(s, model.inf_over(x, c_hi, math.inf))
            q = fam.from_scores(s)
            out = q if out is None else elementwise_min(out, q)
        return out
    if isinstance(spec, Combine):
        qs = [_regression_q(p, fam) for p in spec.parts]
        out = qs[0]
        for q in qs[1:]:
            out = elementwise_max(out, q)
        return out
    return _no_closed_form(spec, fam)


def adjusted_pvalues(spec: InformativeSpec, family) -> Rationals:
    """Closed-form adjusted p-values for every test row of ``family``."""
    if isinstance(family, ClassPValues):
        spec.check("classification", family.K)
        return _classification_q(spec, family)
    if isinstance(family, RegressionPValues):
        spec.check("regression")
        if family.m == 0:
            return Rationals(np.empty(0, np.int64), np.empty(0, np.int64))
        return _regression_q(spec, family)
    raise TypeError(f"unsupported p-value family {type(family).__name__}")


def adjusted_pvalue(spec: InformativeSpec, i: int, family) -> Fraction:
    return adjusted_pvalues(spec, family.take([i]))[0]


def pvalue_grid(calibration_counts: Iterable[int]) -> list[Fraction]:
    """All values ``k / (n' + 1)``, ``k = 1..n'+1``, over the given counts, sorted."""
    grid = {Fraction(k, n + 1) for n in set(calibration_counts) for k in range(1, n + 2)}
    return sorted(grid)


def adjusted_pvalue_generic(indicator: Callable[[Fraction], bool], grid: Sequence[Fraction]) -> Fraction:
    """Smallest grid level at which ``indicator`` holds (1 if it never does).

    ``indicator`` must be nondecreasing along the grid; a true-then-false
    pattern raises :class:`InvariantViolation`.
    """
    found = None
    for level in grid:
        ok = bool(indicator(level))
        if ok and found is None:
            found = level
        elif not ok and found is not None:
            raise InvariantViolation(
                f"informativeness indicator is not monotone: true at {found}, false at {level}"
            )
    return Fraction(1) if found is None else found


def indicator_at(spec: InformativeSpec, family) -> Callable[[Fraction], np.ndarray]:
    """``level -> [C_i^level is informative for each row]``."""
    idx = np.arange(family.m)

    def at(level):
        return spec.informative(family.regions(idx, Fraction(level)))

    return at


def family_grid(family) -> list[Fraction]:
    if isinstance(family, RegressionPValues):
        return pvalue_grid([family.n_cal])
    vals = set(family.values.fractions())
    return sorted(vals | {Fraction(1)})
