"""Synthetic scenarios and the seeded Monte-Carlo experiment runner.

Each replication draws from its own Philox stream keyed by
``(master_seed, scenario index, replication index)``, so reports do not depend
on how replications are spread over worker processes.
"""

from __future__ import annotations

import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Optional

import numpy as np

from .data import SplitDataset, score_dataset
from .informative import InformativeSpec, SpecError, spec_from_dict
from .metrics import AggregateReport, ReplicationMetrics, aggregate, directional_fdp, replication_metrics
from .rational import as_fraction, format_fraction, parse_alpha
from .scores import (
    ClassResidual,
    Curve,
    LocallyWeighted,
    MonotoneSigned,
    QuantileBased,
    TieBreaker,
    as_matrix,
    fit_gaussian_classifier,
)
from .selection import BhOnNullClass, BhOnQ, KeepAll, normalize_tag, run_procedure

SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def replication_rng(master_seed: int, scenario_index: int, rep: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([master_seed, scenario_index, rep])))


# --- classification --------------------------------------------------------------------


def mixture_centers(snr: float, K: int) -> np.ndarray:
    """``(0,0), (snr,0), (snr,snr)`` for three classes; the first two for two classes."""
    full = np.array([[0.0, 0.0], [snr, 0.0], [snr, snr]])
    if K not in (2, 3):
        raise ConfigError(f"mixture scenarios support K = 2 or 3, got {K}")
    return full[:K]


@dataclass(frozen=True)
class MixturePosterior:
    """Exact class posterior of the unit-variance mixture (optionally with a shared component)."""

    centers: np.ndarray
    log_priors: np.ndarray
    common_center: Optional[np.ndarray] = None

    def __call__(self, x):
        x = as_matrix(x)
        d2 = np.sum((x[:, None, :] - self.centers[None]) ** 2, axis=2)
        if self.common_center is None:
            logits = self.log_priors - 0.5 * d2
        else:
            dc = np.sum((x - self.common_center) ** 2, axis=1)[:, None]
            # log(0.5 e^{-d2/2} + 0.5 e^{-dc/2}), constant dropped
            logits = self.log_priors + np.logaddexp(-0.5 * d2, -0.5 * dc)
        logits -= logits.max(axis=1, keepdims=True)
        w = np.exp(logits)
        return w / w.sum(axis=1, keepdims=True)


def quota_labels(probs, size: int) -> np.ndarray:
    """Sorted label vector with class counts rounded by largest remainder."""
    p = np.asarray(probs, float) * size
    counts = np.floor(p).astype(int)
    short = size - counts.sum()
    order = np.argsort(-(p - counts), kind="stable")
    counts[order[:short]] += 1
    return np.repeat(np.arange(1, len(probs) + 1), counts)


def _check_probs(name: str, probs) -> tuple[float, ...]:
    p = tuple(float(v) for v in probs)
    if any(v < 0 for v in p) or abs(sum(p) - 1.0) > 1e-12:
        raise ConfigError(f"{name} must be a probability vector, got {p}")
    return p


@dataclass(frozen=True)
class ClassificationScenario:
    """Bivariate Gaussian mixture with unit-variance components.

    ``label_model`` is ``iid`` (labels drawn afresh) or ``class_conditional``
    (calibration and test label vectors fixed by quota, features redrawn).
    ``classifier`` is ``fitted`` (Gaussian classifier on ``n_train`` fresh
    points) or ``bayes`` (exact posterior).
    """

    name: str
    snr: float
    probs_cal: tuple[float, ...]
    spec: InformativeSpec
    probs_test: Optional[tuple[float, ...]] = None
    n: int = 500
    m: int = 500
    n_train: int = 1000
    common_component: bool = False
    label_model: str = "iid"
    classifier: str = "fitted"

    task = "classification"

    def __post_init__(self):
        pc = _check_probs("probs_cal", self.probs_cal)
        pt = pc if self.probs_test is None else _check_probs("probs_test", self.probs_test)
        object.__setattr__(self, "probs_cal", pc)
        object.__setattr__(self, "probs_test", pt)
        if len(pt) != len(pc):
            raise ConfigError("probs_cal and probs_test differ in length")
        mixture_centers(self.snr, len(pc))
        if self.snr < 0:
            raise ConfigError("snr must be nonnegative")
        if self.label_model not in ("iid", "class_conditional"):
            raise ConfigError(f"label_model must be iid or class_conditional, got {self.label_model!r}")
        if self.label_model == "iid" and pt != pc:
            raise ConfigError("iid label model requires probs_test == probs_cal")
        if self.classifier not in ("fitted", "bayes"):
            raise ConfigError(f"classifier must be fitted or bayes, got {self.classifier!r}")
        if self.n < 1 or self.m < 1:
            raise ConfigError("n and m must be positive")
        try:
            self.spec.check("classification", self.K)
        except SpecError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def K(self) -> int:
        return len(self.probs_cal)

    @property
    def centers(self) -> np.ndarray:
        return mixture_centers(self.snr, self.K)

    @property
    def common_center(self) -> Optional[np.ndarray]:
        return self.centers.mean(axis=0) if self.common_component else None

    def features(self, labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        mean = self.centers[labels - 1]
        if self.common_component:
            shared = rng.random(labels.size) < 0.5
            mean = np.where(shared[:, None], self.common_center, mean)
        return mean + rng.standard_normal((labels.size, 2))

    def labels(self, probs, size: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(np.arange(1, self.K + 1), size=size, p=np.asarray(probs))

    def score_model(self, rng: np.random.Generator) -> ClassResidual:
        if self.classifier == "bayes":
            post = MixturePosterior(self.centers, np.log(np.asarray(self.probs_cal)), self.common_center)
            return ClassResidual(post, self.K)
        y = self.labels(self.probs_cal, self.n_train, rng)
        while np.any(np.bincount(y, minlength=self.K + 1)[1:] < 2):
            y = self.labels(self.probs_cal, self.n_train, rng)
        return fit_gaussian_classifier(self.features(y, rng), y, self.K)

    def generate(self, rng: np.random.Generator) -> SplitDataset:
        """Draw one calibration/test split (no training data)."""
        if self.label_model == "iid":
            cal_y = self.labels(self.probs_cal, self.n, rng)
            test_y = self.labels(self.probs_test, self.m, rng)
        else:
            cal_y = quota_labels(self.probs_cal, self.n)
            test_y = quota_labels(self.probs_test, self.m)
        return SplitDataset(self.features(cal_y, rng), cal_y, self.features(test_y, rng), test_y)

    def replicate(self, rng: np.random.Generator):
        model = self.score_model(rng)
        data = self.generate(rng)
        tb = TieBreaker(int(rng.integers(2**63)))
        return score_dataset(data, model, tb), data.test_labels_hidden

    def to_dict(self) -> dict:
        return {
            "type": "classification",
            "name": self.name,
            "snr": self.snr,
            "probs_cal": list(self.probs_cal),
            "probs_test": list(self.probs_test),
            "n": self.n,
            "m": self.m,
            "n_train": self.n_train,
            "common_component": self.common_component,
            "label_model": self.label_model,
            "classifier": self.classifier,
            "spec": self.spec.to_dict(),
        }


def gen_mixture(scenario: ClassificationScenario, rng: np.random.Generator) -> SplitDataset:
    return scenario.generate(rng)


# --- regression ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ShiftedCurve:
    """``mu(x) + z * sigma(x)``: a quantile of a Gaussian predictive law."""

    mu: Curve
    sigma: Curve
    z: float

    def __call__(self, x):
        return self.mu(x) + self.z * self.sigma(x)


@dataclass(frozen=True)
class RegressionScenario:
    """``Y = true_mu(X) + true_sigma(X) eps`` with ``X`` uniform on ``x_range``.

    The score model is built from ``pred_mu`` / ``pred_sigma``: ``score`` is
    ``locally_weighted``, ``monotone`` or ``quantile`` (Gaussian quantiles at
    ``+-quantile_z``).
    """

    name: str
    spec: Optional[InformativeSpec]
    true_mu: Curve
    true_sigma: Curve
    pred_mu: Curve
    pred_sigma: Curve
    x_range: tuple[float, float] = (-1.0, 1.0)
    n: int = 1000
    m: int = 500
    score: str = "locally_weighted"
    quantile_z: float = 1.6448536269514722

    task = "regression"

    def __post_init__(self):
        lo, hi = self.x_range
        if not lo < hi:
            raise ConfigError("x_range must be an increasing pair")
        grid = np.linspace(lo, hi, 201)[:, None]
        if np.any(self.true_sigma(grid) <= 0):
            raise ConfigError("true_sigma must be positive on x_range")
        if np.any(self.pred_sigma(grid) <= 0):
            raise ConfigError("pred_sigma must be positive on x_range")
        if self.score not in ("locally_weighted", "monotone", "quantile"):
            raise ConfigError(f"unknown regression score {self.score!r}")
        if self.n < 1 or self.m < 1:
            raise ConfigError("n and m must be positive")
        if self.spec is not None:
            try:
                self.spec.check("regression")
            except SpecError as exc:
                raise ConfigError(str(exc)) from None

    def score_model(self):
        if self.score == "locally_weighted":
            return LocallyWeighted(self.pred_mu, self.pred_sigma)
        if self.score == "monotone":
            return MonotoneSigned(self.pred_mu, self.pred_sigma)
        z = abs(self.quantile_z)
        return QuantileBased(ShiftedCurve(self.pred_mu, self.pred_sigma, -z), ShiftedCurve(self.pred_mu, self.pred_sigma, z))

    def draw(self, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        x = rng.uniform(self.x_range[0], self.x_range[1], size)[:, None]
        y = self.true_mu(x) + self.true_sigma(x) * rng.standard_normal(size)
        return x, y

    def generate(self, rng: np.random.Generator) -> SplitDataset:
        cal_x, cal_y = self.draw(self.n, rng)
        test_x, test_y = self.draw(self.m, rng)
        return SplitDataset(cal_x, cal_y, test_x, test_y)

    def replicate(self, rng: np.random.Generator):
        data = self.generate(rng)
        return score_dataset(data, self.score_model()), data.test_labels_hidden

    def to_dict(self) -> dict:
        return {
            "type": "regression",
            "name": self.name,
            "x_range": list(self.x_range),
            "true_mu": self.true_mu.to_dict(),
            "true_sigma": self.true_sigma.to_dict(),
            "pred_mu": self.pred_mu.to_dict(),
            "pred_sigma": self.pred_sigma.to_dict(),
            "n": self.n,
            "m": self.m,
            "score": self.score,
            "quantile_z": self.quantile_z,
            "spec": None if self.spec is None else self.spec.to_dict(),
        }


def gen_regression(scenario: RegressionScenario, rng: np.random.Generator) -> SplitDataset:
    return scenario.generate(rng)


_erf = np.vectorize(math.erf, otypes=[float])


def normal_cdf(z) -> np.ndarray:
    return 0.5 * (1.0 + _erf(np.asarray(z, float) / math.sqrt(2.0)))


@dataclass(frozen=True)
class BandPosterior:
    """Probabilities of ``(-inf, c1)``, ``[c1, c2]``, ``(c2, inf)`` under ``N(mu(x), sigma(x)^2)``."""

    mu: Curve
    sigma: Curve
    edges: tuple[float, float]

    def __call__(self, x):
        mu, sd = self.mu(x), self.sigma(x)
        lo = normal_cdf((self.edges[0] - mu) / sd)
        hi = normal_cdf((self.edges[1] - mu) / sd)
        return np.column_stack([lo, hi - lo, 1.0 - hi])


@dataclass(frozen=True)
class BandedScenario:
    """Regression outcomes cut into three bands: below ``c1``, null band, above ``c2``."""

    name: str
    regression: RegressionScenario
    edges: tuple[float, float]
    spec: InformativeSpec = None

    task = "classification"
    K = 3

    def __post_init__(self):
        c1, c2 = self.edges
        if not c1 < c2:
            raise ConfigError("band edges must satisfy c1 < c2")
        if self.spec is None:
            from .selection import DIRECTIONAL_SPEC

            object.__setattr__(self, "spec", DIRECTIONAL_SPEC)

    def band(self, y: np.ndarray) -> np.ndarray:
        c1, c2 = self.edges
        return np.where(y < c1, 1, np.where(y > c2, 3, 2))

    def replicate(self, rng: np.random.Generator):
        reg = self.regression
        data = reg.generate(rng)
        labelled = SplitDataset(data.cal_x, self.band(data.cal_y), data.test_x, self.band(data.test_labels_hidden))
        model = ClassResidual(BandPosterior(reg.pred_mu, reg.pred_sigma, tuple(self.edges)), 3)
        tb = TieBreaker(int(rng.integers(2**63)))
        return score_dataset(labelled, model, tb), labelled.test_labels_hidden

    def to_dict(self) -> dict:
        d = self.regression.to_dict()
        d.pop("spec")
        d.update(type="banded", name=self.name, edges=list(self.edges), spec=self.spec.to_dict())
        return d


Scenario = ClassificationScenario | RegressionScenario | BandedScenario


# --- procedures and config -----------------------------------------------------------------


@dataclass(frozen=True)
class ProcedureConfig:
    """A procedure tag, its report label and parameters; ``spec`` overrides the scenario's."""

    tag: str
    label: str = ""
    params: dict = field(default_factory=dict)
    spec: Optional[InformativeSpec] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "tag", normalize_tag(self.tag))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.label:
            object.__setattr__(self, "label", self.tag)

    def to_dict(self) -> dict:
        d: dict[str, Any] = {"tag": self.tag, "label": self.label}
        for k, v in self.params.items():
            if k == "init":
                d[k] = v.to_dict()
            elif isinstance(v, Fraction):
                d[k] = format_fraction(v)
            else:
                d[k] = v
        if self.spec is not None:
            d["spec"] = self.spec.to_dict()
        return d


@dataclass(frozen=True)
class ExperimentConfig:
    scenarios: tuple[Scenario, ...]
    procedures: tuple[ProcedureConfig, ...]
    alpha: Fraction = Fraction(1, 10)
    replications: int = 500
    master_seed: int = 0
    name: str = "experiment"

    def __post_init__(self):
        if self.replications < 1:
            raise ConfigError("replications must be at least 1")
        try:
            object.__setattr__(self, "alpha", parse_alpha(self.alpha))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not self.scenarios:
            raise ConfigError("at least one scenario is required")
        if not self.procedures:
            raise ConfigError("at least one procedure is required")
        labels = [p.label for p in self.procedures]
        if len(set(labels)) != len(labels):
            raise ConfigError("procedure labels must be unique")
        names = [s.name for s in self.scenarios]
        if len(set(names)) != len(names):
            raise ConfigError("scenario names must be unique")
        if not 0 <= self.master_seed < 2**64:
            raise ConfigError("master_seed must be an unsigned 64-bit integer")

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.name,
            "alpha": format_fraction(self.alpha),
            "replications": self.replications,
            "master_seed": self.master_seed,
            "scenarios": [s.to_dict() for s in self.scenarios],
            "procedures": [p.to_dict() for p in self.procedures],
        }


def _require(d: dict, key: str, where: str):
    if key not in d:
        raise ConfigError(f"{where}: missing field {key!r}")
    return d[key]


def _spec(d, where: str) -> InformativeSpec:
    try:
        return spec_from_dict(d)
    except SpecError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def _curve(d, where: str) -> Curve:
    try:
        return Curve.from_dict(d)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: bad curve {d!r}: {exc}") from None


def _known(d: dict, allowed: set, where: str):
    extra = set(d) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown fields {sorted(extra)}")


_REG_FIELDS = {"type", "name", "x_range", "true_mu", "true_sigma", "pred_mu", "pred_sigma", "n", "m", "score", "quantile_z", "spec"}


def _regression_from_dict(d: dict, where: str, spec: InformativeSpec) -> RegressionScenario:
    return RegressionScenario(
        name=str(d.get("name", where)),
        spec=spec,
        true_mu=_curve(_require(d, "true_mu", where), where),
        true_sigma=_curve(_require(d, "true_sigma", where), where),
        pred_mu=_curve(d.get("pred_mu", d["true_mu"]), where),
        pred_sigma=_curve(d.get("pred_sigma", d["true_sigma"]), where),
        x_range=tuple(float(v) for v in d.get("x_range", (-1.0, 1.0))),
        n=int(d.get("n", 1000)),
        m=int(d.get("m", 500)),
        score=str(d.get("score", "locally_weighted")),
        quantile_z=float(d.get("quantile_z", 1.6448536269514722)),
    )


def scenario_from_dict(d: dict, where: str = "scenario") -> Scenario:
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object")
    kind = d.get("type")
    try:
        if kind == "classification":
            _known(d, {"type", "name", "snr", "probs_cal", "probs_test", "n", "m", "n_train",
                       "common_component", "label_model", "classifier", "spec"}, where)
            return ClassificationScenario(
                name=str(d.get("name", where)),
                snr=float(_require(d, "snr", where)),
                probs_cal=tuple(_require(d, "probs_cal", where)),
                probs_test=None if d.get("probs_test") is None else tuple(d["probs_test"]),
                spec=_spec(_require(d, "spec", where), where),
                n=int(d.get("n", 500)),
                m=int(d.get("m", 500)),
                n_train=int(d.get("n_train", 1000)),
                common_component=bool(d.get("common_component", False)),
                label_model=str(d.get("label_model", "iid")),
                classifier=str(d.get("classifier", "fitted")),
            )
        if kind == "regression":
            _known(d, _REG_FIELDS, where)
            return _regression_from_dict(d, where, _spec(_require(d, "spec", where), where))
        if kind == "banded":
            _known(d, _REG_FIELDS | {"edges"}, where)
            from .selection import DIRECTIONAL_SPEC

            spec = _spec(d["spec"], where) if "spec" in d else DIRECTIONAL_SPEC
            reg = _regression_from_dict(d, where, None)
            return BandedScenario(str(d.get("name", where)), reg, tuple(float(v) for v in _require(d, "edges", where)), spec)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from None
    raise ConfigError(f"{where}: unknown scenario type {kind!r}")


def _init_from_dict(d: dict, where: str):
    kind = d.get("kind") if isinstance(d, dict) else d
    level = None
    if isinstance(d, dict) and d.get("level") is not None:
        level = as_fraction(d["level"])
    if kind in ("bhq", "bh_q"):
        return BhOnQ(level, None, d.get("pvalues", "full") if isinstance(d, dict) else "full")
    if kind in ("nullclass", "null_class"):
        if not isinstance(d, dict) or "null_class" not in d:
            raise ConfigError(f"{where}: nullclass initial selection needs 'null_class'")
        return BhOnNullClass(int(d["null_class"]), level)
    if kind == "keepall":
        return KeepAll()
    raise ConfigError(f"{where}: unknown initial selection {kind!r}")


_PARAM_KEYS = {"pvalues", "r", "init", "seed", "estimator", "lam", "weights", "y0"}


def procedure_from_dict(d: dict, where: str = "procedure") -> ProcedureConfig:
    if isinstance(d, str):
        d = {"tag": d}
    if not isinstance(d, dict):
        raise ConfigError(f"{where}: expected an object or a tag string")
    _known(d, {"tag", "label", "spec"} | _PARAM_KEYS, where)
    params: dict[str, Any] = {}
    for k in _PARAM_KEYS & set(d):
        v = d[k]
        if k == "init":
            v = _init_from_dict(v, where)
        elif k == "lam":
            v = as_fraction(v)
        elif k == "pvalues" and v not in ("full", "class"):
            raise ConfigError(f"{where}: pvalues must be 'full' or 'class'")
        elif k == "weights":
            v = tuple(as_fraction(w) for w in v)
        params[k] = v
    spec = _spec(d["spec"], where) if "spec" in d else None
    return ProcedureConfig(str(_require(d, "tag", where)), str(d.get("label", "")), params, spec)


def config_from_dict(d: dict) -> ExperimentConfig:
    if not isinstance(d, dict):
        raise ConfigError("config must be a JSON object")
    version = d.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {version!r}; expected {SCHEMA_VERSION}")
    _known(d, {"schema_version", "name", "alpha", "replications", "master_seed", "scenario", "scenarios", "procedures"}, "config")
    raw = d.get("scenarios")
    if raw is None:
        raw = [_require(d, "scenario", "config")]
    scenarios = tuple(scenario_from_dict(s, f"scenarios[{i}]") for i, s in enumerate(raw))
    procs = tuple(procedure_from_dict(p, f"procedures[{i}]") for i, p in enumerate(_require(d, "procedures", "config")))
    try:
        alpha = as_fraction(d.get("alpha", "1/10"))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad alpha: {exc}") from None
    return ExperimentConfig(
        scenarios=scenarios,
        procedures=procs,
        alpha=alpha,
        replications=int(d.get("replications", 500)),
        master_seed=int(d.get("master_seed", 0)),
        name=str(d.get("name", "experiment")),
    )


def load_config(path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return config_from_dict(d)


# --- running -----------------------------------------------------------------------------


def run_replication(config: ExperimentConfig, scenario_index: int, rep: int) -> list[ReplicationMetrics]:
    """All procedures of the config on one draw of one scenario."""
    scenario = config.scenarios[scenario_index]
    rng = replication_rng(config.master_seed, scenario_index, rep)
    scored, truth = scenario.replicate(rng)
    out = []
    for proc in config.procedures:
        spec = proc.spec or scenario.spec
        params = dict(proc.params)
        if proc.tag == "infoscop" and "seed" in params:
            params["seed"] = int(rng.integers(2**63)) if params["seed"] == "auto" else params["seed"]
        outcome = run_procedure(proc.tag, scored, spec, config.alpha, **params)
        metrics = replication_metrics(outcome, truth, spec)
        if proc.tag == "directional":
            d = directional_fdp(outcome, truth)
            metrics = ReplicationMetrics(metrics.fcp, d, metrics.adjusted_power, metrics.n_selected,
                                         metrics.sel_rate, metrics.avg_size, metrics.covered_fraction)
        out.append(metrics)
    return out


def _run_task(args) -> list[ReplicationMetrics]:
    return run_replication(*args)


def default_threads() -> int:
    return os.cpu_count() or 1


def run_experiment(
    config: ExperimentConfig,
    threads: int | None = None,
    progress: Optional[Callable[[str], None]] = None,
) -> list[AggregateReport]:
    """Run every (scenario, replication) pair and aggregate per (scenario, procedure).

    Results are merged in task order, so the report is identical for any
    ``threads``.  With one replication the report carries that replication's
    values and NaN standard errors.
    """
    threads = default_threads() if threads is None else int(threads)
    if threads < 1:
        raise ValueError("threads must be positive")
    B = config.replications
    reports = []
    for s_idx, scenario in enumerate(config.scenarios):
        tasks = [(config, s_idx, rep) for rep in range(B)]
        if threads == 1:
            results = [_run_task(t) for t in tasks]
        else:
            with ProcessPoolExecutor(max_workers=threads) as pool:
                results = list(pool.map(_run_task, tasks, chunksize=max(1, B // (4 * threads))))
        for p_idx, proc in enumerate(config.procedures):
            reps = [r[p_idx] for r in results]
            reports.append(aggregate(reps, scenario.name, proc.label, allow_single=True))
        if progress is not None:
            progress(f"{scenario.name}: {B} replications done")
    return reports


def stderr_progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def bundled_configs() -> list[str]:
    """Names of the experiment configs shipped with the package."""
    from importlib.resources import files

    return sorted(p.name[:-5] for p in files("infocp.configs").iterdir() if p.name.endswith(".json"))


def bundled_config_path(name: str):
    from importlib.resources import files

    stem = name[:-5] if name.endswith(".json") else name
    path = files("infocp.configs") / f"{stem}.json"
    if not path.is_file():
        raise ConfigError(f"no bundled config named {name!r}; available: {', '.join(bundled_configs())}")
    return path
