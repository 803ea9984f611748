"""Per-replication error and power metrics and their Monte-Carlo aggregation."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from .informative import InformativeSpec
from .selection import SelectionOutcome

ZERO_LENGTH_EPS = 1e-9


@dataclass(frozen=True)
class ReplicationMetrics:
    """Metrics of one outcome; ``avg_size`` and ``covered_fraction`` are NaN when nothing is selected."""

    fcp: float
    fdp: float
    adjusted_power: float
    n_selected: int
    sel_rate: float
    avg_size: float
    covered_fraction: float

    def __post_init__(self):
        if self.fdp > self.fcp:
            raise AssertionError(f"FDP {self.fdp} exceeds FCP {self.fcp}")
        if self.n_selected == 0 and self.fcp != 0:
            raise AssertionError("FCP must be 0 for an empty selection")


def _labels_for(outcome: SelectionOutcome, true_labels) -> np.ndarray:
    y = np.asarray(true_labels)
    if y.shape[0] < outcome.m:
        raise ValueError(f"need {outcome.m} true labels, got {y.shape[0]}")
    return y[outcome.selected]


def covered(outcome: SelectionOutcome, true_labels) -> np.ndarray:
    return outcome.regions.covers(_labels_for(outcome, true_labels))


def fcp(outcome: SelectionOutcome, true_labels) -> float:
    """Share of selected points whose region misses the truth, over ``max(1, |S|)``."""
    miss = ~covered(outcome, true_labels)
    return float(miss.sum()) / max(1, outcome.n_selected)


def fdp(outcome: SelectionOutcome, true_labels, spec: InformativeSpec) -> float:
    """Share of selected points whose truth lies outside every informative region.

    For specs whose informative regions cover the whole space (non-trivial,
    at-most-k, length) this is identically 0.
    """
    nulls = spec.null(_labels_for(outcome, true_labels))
    return float(np.sum(nulls)) / max(1, outcome.n_selected)


def adjusted_power(outcome: SelectionOutcome, true_labels) -> float:
    """Sum over selected covered points of ``1 / |C|``.

    Unbounded intervals contribute 0; zero-length intervals are charged length
    ``ZERO_LENGTH_EPS``.
    """
    cov = covered(outcome, true_labels)
    sizes = np.asarray(outcome.regions.sizes(), dtype=float)
    sizes = np.where(sizes <= 0, ZERO_LENGTH_EPS, sizes)
    with np.errstate(divide="ignore"):
        contrib = np.where(np.isinf(sizes), 0.0, 1.0 / sizes)
    return float(np.sum(contrib[cov]))


def replication_metrics(outcome: SelectionOutcome, true_labels, spec: InformativeSpec) -> ReplicationMetrics:
    y = np.asarray(true_labels)
    k = outcome.n_selected
    if k:
        sizes = np.asarray(outcome.regions.sizes(), dtype=float)
        avg_size = float(np.mean(sizes))
        cov_frac = float(np.mean(covered(outcome, y)))
    else:
        avg_size = cov_frac = math.nan
    return ReplicationMetrics(
        fcp=fcp(outcome, y),
        fdp=fdp(outcome, y, spec),
        adjusted_power=adjusted_power(outcome, y),
        n_selected=k,
        sel_rate=k / outcome.m if outcome.m else 0.0,
        avg_size=avg_size,
        covered_fraction=cov_frac,
    )


def directional_fdp(outcome: SelectionOutcome, true_labels) -> float:
    """Share of directional decisions that disagree with the true band."""
    if outcome.decisions is None:
        raise ValueError("outcome carries no directional decisions")
    wrong = outcome.decisions != _labels_for(outcome, true_labels)
    return float(np.sum(wrong)) / max(1, outcome.n_selected)


# --- aggregation ---------------------------------------------------------------------------

REPORT_COLUMNS = (
    "scenario", "procedure", "fcr", "fcr_se", "fdr", "fdr_se", "power", "power_se",
    "sel_rate", "avg_size", "covered_frac", "B",
)


@dataclass(frozen=True)
class AggregateReport:
    """Monte-Carlo means and standard errors (sample sd over sqrt(B))."""

    scenario: str
    procedure: str
    B: int
    fcr: float
    fcr_se: float
    fdr: float
    fdr_se: float
    power: float
    power_se: float
    sel_rate: float
    avg_size: float
    covered_frac: float

    def row(self) -> dict:
        return {c: getattr(self, c) for c in REPORT_COLUMNS}


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    b = values.size
    if b < 2:
        return float(values.mean()), math.nan
    return float(values.mean()), float(values.std(ddof=1) / math.sqrt(b))


def _nanmean(values: np.ndarray) -> float:
    ok = values[~np.isnan(values)]
    return float(ok.mean()) if ok.size else math.nan


def aggregate(replications, scenario: str = "", procedure: str = "", allow_single: bool = False) -> AggregateReport:
    """Fold replication metrics into an :class:`AggregateReport`.

    Requires ``B >= 2`` unless ``allow_single`` is set, in which case a single
    replication is reported as-is with NaN standard errors.
    """
    reps = list(replications)
    B = len(reps)
    if B < 2 and not (allow_single and B == 1):
        raise ValueError(f"aggregation needs at least 2 replications, got {B}")
    col = {f.name: np.array([getattr(r, f.name) for r in reps], dtype=float) for f in fields(ReplicationMetrics)}
    fcr, fcr_se = _mean_se(col["fcp"])
    fdr, fdr_se = _mean_se(col["fdp"])
    power, power_se = _mean_se(col["adjusted_power"])
    return AggregateReport(
        scenario=scenario,
        procedure=procedure,
        B=B,
        fcr=fcr,
        fcr_se=fcr_se,
        fdr=fdr,
        fdr_se=fdr_se,
        power=power,
        power_se=power_se,
        sel_rate=float(col["sel_rate"].mean()),
        avg_size=_nanmean(col["avg_size"]),
        covered_frac=_nanmean(col["covered_fraction"]),
    )


def _fmt(v) -> str:
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def reports_to_csv(reports) -> str:
    """Render reports as CSV text with a fixed column order and ``repr`` floats."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in reports:
        w.writerow([_fmt(v) for v in r.row().values()])
    return buf.getvalue()


def metrics_dict(m: ReplicationMetrics) -> dict:
    return asdict(m)
