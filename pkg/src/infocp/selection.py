"""BH selection, InfoSP, InfoSCOP and their variants.

Every procedure returns a :class:`SelectionOutcome`.  Test indices are 0-based;
class labels are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .data import ClassificationScores, RegressionScores
from .informative import (
    AtMostK,
    Combine,
    ExcludeInterval,
    ExcludeLabels,
    InformativeSpec,
    adjusted_pvalues,
)
from .pvalues import (
    ClassPValues,
    calibration_estimator,
    class_calibrated_family,
    full_calibrated_family,
    storey_proportions,
    weighted_pvalues,
)
from .rational import Rationals, as_fraction, format_fraction, parse_alpha
from .regions import IntervalRegions, LabelRegions
from .scores import MonotoneSigned

PROCEDURES = ("naive", "infosp", "infoscop", "adapt_infosp", "directional", "jc_one_sided")

_SAFE = 2**62


# --- BH ------------------------------------------------------------------------------


def _as_rationals(q) -> Rationals:
    return q if isinstance(q, Rationals) else Rationals.from_fractions(q)


def bh(q, alpha) -> tuple[np.ndarray, int]:
    """Benjamini-Hochberg step-up on ``q`` at level ``alpha`` (exact).

    Returns the sorted selected indices and ``l_hat``.  Indices with equal ``q``
    are always selected together.
    """
    q = _as_rationals(q)
    alpha = as_fraction(alpha)
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    m = len(q)
    if m == 0:
        return np.empty(0, dtype=np.int64), 0
    a, b = alpha.numerator, alpha.denominator
    if np.any(q.num <= 0):
        raise ValueError("BH expects positive q-values")
    if int(q.num.max()) * m * b >= _SAFE or int(q.den.max()) * a >= _SAFE:
        raise OverflowError("q-values too fine for exact int64 BH")
    # smallest l with q_i <= alpha * l / m
    top = q.num * (m * b)
    bottom = q.den * a
    first = (top + bottom - 1) // bottom
    first = np.clip(first, 1, m + 1)
    counts = np.cumsum(np.bincount(first, minlength=m + 2))[: m + 1]
    ok = np.flatnonzero(counts[1:] >= np.arange(1, m + 1))
    ell = int(ok[-1]) + 1 if ok.size else 0
    return np.flatnonzero(first <= ell).astype(np.int64), ell


def bh_iterative(indicator_at: Callable[[Fraction], np.ndarray], alpha, m: int) -> np.ndarray:
    """BH as the fixed point of shrinking the selection at level ``alpha |S| / m``.

    ``indicator_at(level)`` returns, for all ``m`` test points, whether the
    conformal set at that level is informative.
    """
    alpha = as_fraction(alpha)
    current = np.arange(m)
    level = alpha
    while True:
        keep = np.asarray(indicator_at(level), dtype=bool)[current]
        nxt = current[keep]
        if nxt.size == current.size:
            return nxt.astype(np.int64)
        current = nxt
        if current.size == 0:
            return current.astype(np.int64)
        level = alpha * current.size / m


# --- outcome ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SelectionOutcome:
    """Selected test indices with their prediction regions.

    ``q`` holds the adjusted p-values of the ``candidates`` (all test points for
    InfoSP; the initially selected ones for InfoSCOP).  ``regions`` is aligned
    with ``selected``.
    """

    procedure: str
    alpha: Fraction
    selected: np.ndarray
    regions: IntervalRegions | LabelRegions
    q: Rationals
    candidates: np.ndarray
    adjusted_level: Fraction
    m_eff: int
    m: int
    decisions: Optional[np.ndarray] = None

    def __post_init__(self):
        if len(self.regions) != len(self.selected):
            raise ValueError("one region per selected index is required")
        if self.m_eff and self.adjusted_level != self.alpha * len(self.selected) / self.m_eff:
            raise ValueError("adjusted level must equal alpha |S| / m_eff")

    @property
    def n_selected(self) -> int:
        return len(self.selected)

    def region(self, i: int):
        pos = np.flatnonzero(self.selected == i)
        if not pos.size:
            raise KeyError(f"test index {i} was not selected")
        return self.regions[int(pos[0])]

    def to_dict(self) -> dict:
        q = [None] * self.m
        for c, frac in zip(self.candidates, self.q.fractions()):
            q[int(c)] = format_fraction(frac)
        regions = []
        for j, i in enumerate(self.selected):
            if isinstance(self.regions, LabelRegions):
                regions.append({"index": int(i), "kind": "labels", "labels": sorted(self.regions[j].labels)})
            else:
                lo, hi = float(self.regions.lo[j]), float(self.regions.hi[j])
                regions.append({
                    "index": int(i),
                    "kind": "interval",
                    "lo": None if math.isinf(lo) else lo,
                    "hi": None if math.isinf(hi) else hi,
                })
        out = {
            "procedure": self.procedure,
            "alpha": format_fraction(self.alpha),
            "selected": [int(i) for i in self.selected],
            "adjusted_level": format_fraction(self.adjusted_level),
            "m": self.m,
            "m_eff": self.m_eff,
            "regions": regions,
            "q": q,
        }
        if self.decisions is not None:
            out["decisions"] = [int(d) for d in self.decisions]
        return out


def _empty_regions(family) -> IntervalRegions | LabelRegions:
    if isinstance(family, ClassPValues):
        return LabelRegions(np.zeros((0, family.K), dtype=bool))
    return IntervalRegions(np.empty(0), np.empty(0))


# --- classification post-processing ------------------------------------------------------


def postprocess_classification(outcome: SelectionOutcome, test_scores: np.ndarray, spec: InformativeSpec | None = None):
    """Replace empty label sets by the lowest-score label.

    With ``spec`` given, the argmin runs over labels whose singleton is
    informative, so post-processed regions stay in the collection.  Ties go to
    the smaller label.
    """
    mask = outcome.regions.mask.copy()
    empty = ~mask.any(axis=1)
    if not empty.any():
        return outcome
    K = mask.shape[1]
    allowed = np.ones(K, dtype=bool)
    if spec is not None:
        allowed = spec.informative(LabelRegions(np.eye(K, dtype=bool)))
        if not allowed.any():
            allowed = np.ones(K, dtype=bool)
    rows = np.asarray(test_scores, float)[outcome.selected[empty]]
    rows = np.where(allowed[None, :], rows, np.inf)
    mask[np.flatnonzero(empty), np.argmin(rows, axis=1)] = True
    return replace(outcome, regions=LabelRegions(mask))


# --- InfoSP and naive -----------------------------------------------------------------------


def _run_on_family(family, spec, alpha, procedure, candidates=None, m_total=None, bh_mode=True):
    alpha = parse_alpha(alpha)
    q = adjusted_pvalues(spec, family)
    m_eff = family.m
    if bh_mode:
        sel, ell = bh(q, alpha)
        level = alpha * ell / m_eff if m_eff else Fraction(0)
    else:
        sel = np.flatnonzero(q.le(alpha)).astype(np.int64)
        level = alpha
    regions = family.regions(sel, level) if sel.size else _empty_regions(family)
    cand = np.arange(family.m) if candidates is None else np.asarray(candidates, dtype=np.int64)
    outcome = SelectionOutcome(
        procedure=procedure,
        alpha=alpha,
        selected=cand[sel],
        regions=regions,
        q=q,
        candidates=cand,
        adjusted_level=level if bh_mode else alpha * sel.size / m_eff if m_eff else Fraction(0),
        m_eff=m_eff,
        m=family.m if m_total is None else m_total,
    )
    if isinstance(family, ClassPValues):
        # test_scores are indexed by the original test index
        scores = np.zeros((outcome.m, family.K))
        scores[cand] = family.test_scores
        outcome = postprocess_classification(outcome, scores, spec)
    return outcome


def infosp(family, spec: InformativeSpec, alpha, procedure: str = "infosp") -> SelectionOutcome:
    """BH on the adjusted p-values, then conformal sets at level ``alpha |S| / m``."""
    return _run_on_family(family, spec, alpha, procedure)


def naive(family, spec: InformativeSpec, alpha) -> SelectionOutcome:
    """Keep every test point whose level-``alpha`` conformal set is informative.

    No selection adjustment: this is the first step of the BH recursion and
    does not control the FCR.  ``adjusted_level`` reports ``alpha |S| / m``
    for schema uniformity; the regions themselves use level ``alpha``.
    """
    return _run_on_family(family, spec, alpha, "naive", bh_mode=False)


# --- InfoSCOP ---------------------------------------------------------------------------------


def _pool(scored, first, rest):
    """Calibration ``first``; pseudo-test = calibration ``rest`` followed by all test points."""
    if isinstance(scored, ClassificationScores):
        return ClassificationScores(
            scored.cal[first], scored.cal_labels[first], np.vstack([scored.cal[rest], scored.test])
        )
    return RegressionScores(
        scored.model, scored.cal_x[first], scored.cal_y[first], np.vstack([scored.cal_x[rest], scored.test_x])
    )


@dataclass(frozen=True)
class KeepAll:
    def select(self, pool, spec, alpha) -> np.ndarray:
        return np.ones(pool.m, dtype=bool)

    def to_dict(self):
        return {"kind": "keepall"}


@dataclass(frozen=True)
class BhOnQ:
    """BH on the adjusted p-values of the pseudo-test points (default level ``2 alpha``)."""

    level: Optional[Fraction] = None
    spec: Optional[InformativeSpec] = None
    pvalues: str = "full"

    def select(self, pool, spec, alpha) -> np.ndarray:
        level = 2 * alpha if self.level is None else as_fraction(self.level)
        fam = class_calibrated_family(pool) if self.pvalues == "class" else full_calibrated_family(pool)
        q = adjusted_pvalues(self.spec or spec, fam)
        sel, _ = bh(q, level)
        mask = np.zeros(pool.m, dtype=bool)
        mask[sel] = True
        return mask

    def to_dict(self):
        d = {"kind": "bhq", "pvalues": self.pvalues}
        if self.level is not None:
            d["level"] = format_fraction(as_fraction(self.level))
        return d


@dataclass(frozen=True)
class BhOnNullClass:
    """BH on ``pi_hat * p_class^(null)``, ``pi_hat = (count + 1) / (r + 1)`` from the first split."""

    null_class: int
    level: Optional[Fraction] = None

    def select(self, pool, spec, alpha) -> np.ndarray:
        if not isinstance(pool, ClassificationScores):
            raise ValueError("null-class initial selection needs classification scores")
        y0 = int(self.null_class)
        if not 1 <= y0 <= pool.K:
            raise ValueError(f"null class {y0} not in 1..{pool.K}")
        fam = class_calibrated_family(pool)
        r = pool.n
        pi = Fraction(int(np.sum(pool.cal_labels == y0)) + 1, r + 1)
        p = fam.column(y0).scaled(pi)
        sel, _ = bh(p, alpha if self.level is None else as_fraction(self.level))
        mask = np.zeros(pool.m, dtype=bool)
        mask[sel] = True
        return mask

    def to_dict(self):
        d = {"kind": "nullclass", "null_class": self.null_class}
        if self.level is not None:
            d["level"] = format_fraction(as_fraction(self.level))
        return d


InitialSelection = KeepAll | BhOnQ | BhOnNullClass


def initial_selection_bh_q(level=None, spec=None) -> BhOnQ:
    return BhOnQ(None if level is None else as_fraction(level), spec)


def initial_selection_null_class(y0: int) -> BhOnNullClass:
    return BhOnNullClass(int(y0))


def infoscop(
    scored,
    spec: InformativeSpec,
    alpha,
    r: int | None = None,
    init: InitialSelection | None = None,
    seed: int | None = None,
) -> SelectionOutcome:
    """InfoSP on p-values re-calibrated after an initial selection.

    The calibration sample is split into ``r`` points that calibrate the
    initial selection and ``n - r`` points that, together with the test
    sample, are screened by it.  Survivors of the second half calibrate
    full-calibrated p-values for the surviving test points.  ``seed`` shuffles
    the calibration order before splitting; ``None`` keeps the given order.
    """
    alpha = parse_alpha(alpha)
    n = scored.n
    r = n // 2 if r is None else int(r)
    if not 1 <= r <= n - 1:
        raise ValueError(f"split size r must lie in 1..{n - 1}, got {r}")
    init = BhOnQ() if init is None else init
    order = np.arange(n) if seed is None else np.random.default_rng(seed).permutation(n)
    first, rest = order[:r], order[r:]
    pool = _pool(scored, first, rest)
    keep = init.select(pool, spec, alpha)
    post_cal = rest[keep[: rest.size]]
    post_test = np.flatnonzero(keep[rest.size :])
    m = scored.m
    if post_test.size == 0:
        fam = full_calibrated_family(scored, cal_idx=post_cal, test_idx=post_test, kind="preprocessed")
        return SelectionOutcome(
            "infoscop", alpha, np.empty(0, np.int64), _empty_regions(fam),
            Rationals(np.empty(0, np.int64), np.empty(0, np.int64)), post_test, Fraction(0), 0, m,
        )
    fam = full_calibrated_family(scored, cal_idx=post_cal, test_idx=post_test, kind="preprocessed")
    return _run_on_family(fam, spec, alpha, "infoscop", candidates=post_test, m_total=m)


# --- variants -------------------------------------------------------------------------------------


def adapt_infosp(
    scored: ClassificationScores,
    spec: InformativeSpec,
    alpha,
    estimator: str = "calibration",
    lam=Fraction(1, 2),
    weights=None,
) -> SelectionOutcome:
    """InfoSP on class-calibrated p-values reweighted by estimated class proportions."""
    fam = class_calibrated_family(scored)
    if estimator == "calibration":
        counts = np.bincount(scored.cal_labels - 1, minlength=scored.K)
        pi = calibration_estimator(counts, scored.n)
    elif estimator == "storey":
        pi = storey_proportions(fam, lam)
    else:
        raise ValueError(f"unknown class proportion estimator {estimator!r}")
    return infosp(weighted_pvalues(fam, pi, weights), spec, alpha, procedure="adapt_infosp")


DIRECTIONAL_SPEC = Combine((ExcludeLabels(frozenset({2})), AtMostK(1)))


def directional_fdr(family: ClassPValues, alpha) -> SelectionOutcome:
    """Select points confidently below (label 1) or above (label 3) a null band (label 2).

    Equivalent to BH on ``max(p^(2), min(p^(1), p^(3)))``.  The decision for
    a selected point is its post-processed singleton; an empty set falls back
    to the lower of the label-1 and label-3 scores, ties to label 1.
    """
    if not isinstance(family, ClassPValues) or family.K != 3:
        raise ValueError("directional FDR needs a 3-class p-value family")
    out = infosp(family, DIRECTIONAL_SPEC, alpha, procedure="directional")
    mask = out.regions.mask
    if mask.size and np.any(mask.sum(axis=1) != 1):
        raise AssertionError("directional regions must be singletons after post-processing")
    decisions = np.argmax(mask, axis=1) + 1 if mask.size else np.empty(0, dtype=np.int64)
    return replace(out, decisions=decisions)


def jc_one_sided(scored: RegressionScores, y0: float, alpha) -> SelectionOutcome:
    """Select outcomes above ``y0`` with one-sided intervals (monotone score only).

    The adjusted p-value is the full-calibrated p-value at ``y0``, so the
    selection is BH on those p-values.
    """
    if not isinstance(scored.model, MonotoneSigned):
        raise ValueError("one-sided selection needs a MonotoneSigned score model")
    fam = full_calibrated_family(scored)
    out = infosp(fam, ExcludeInterval(-math.inf, float(y0)), alpha, procedure="jc_one_sided")
    lo = np.maximum(out.regions.lo, y0)
    return replace(out, regions=IntervalRegions(lo, out.regions.hi))


# --- dispatch --------------------------------------------------------------------------------------


def normalize_tag(tag: str) -> str:
    t = tag.strip().lower().replace("-", "_")
    aliases = {"adapt": "adapt_infosp", "jc": "jc_one_sided", "dir": "directional"}
    t = aliases.get(t, t)
    if t not in PROCEDURES:
        raise ValueError(f"unknown procedure {tag!r}; expected one of {', '.join(PROCEDURES)}")
    return t


def run_procedure(tag: str, scored, spec: InformativeSpec | None, alpha, **params) -> SelectionOutcome:
    """Run a procedure by tag on a scored dataset.

    Recognised ``params``: ``pvalues`` (``full``/``class``), ``r``, ``init``,
    ``seed``, ``estimator``, ``lam``, ``weights``, ``y0``.
    """
    tag = normalize_tag(tag)
    kind = params.get("pvalues", "full")

    def family():
        if kind == "class":
            if not isinstance(scored, ClassificationScores):
                raise ValueError("class-calibrated p-values need classification data")
            return class_calibrated_family(scored)
        return full_calibrated_family(scored)

    if tag == "naive":
        return naive(family(), spec, alpha)
    if tag == "infosp":
        return infosp(family(), spec, alpha)
    if tag == "infoscop":
        return infoscop(scored, spec, alpha, r=params.get("r"), init=params.get("init"), seed=params.get("seed"))
    if tag == "adapt_infosp":
        return adapt_infosp(
            scored, spec, alpha, params.get("estimator", "calibration"),
            params.get("lam", Fraction(1, 2)), params.get("weights"),
        )
    if tag == "directional":
        if not isinstance(scored, ClassificationScores):
            raise ValueError("directional FDR needs classification data")
        fam = full_calibrated_family(scored) if params.get("pvalues") == "full" else class_calibrated_family(scored)
        return directional_fdr(fam, alpha)
    if tag == "jc_one_sided":
        y0 = params.get("y0")
        if y0 is None:
            if isinstance(spec, ExcludeInterval) and spec.a == -math.inf:
                y0 = spec.b
            else:
                raise ValueError("jc_one_sided needs y0 or an exclude_interval spec with a = -inf")
        return jc_one_sided(scored, y0, alpha)
    raise AssertionError(tag)
