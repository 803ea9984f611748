"""Non-conformity score models and their closed-form level sets.

Every regression model here has interval level sets ``{y : S_y(x) <= s}``, so a
prediction region is always a single closed interval (possibly unbounded).  The
classification model is the usual residual ``1 - pi_k(x)``.

All functions accept a feature matrix ``x`` of shape ``(n, d)``; a single point
is a ``(1, d)`` matrix or a 1-d vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

SIGMA_FLOOR = 1e-9

Function = Callable[[np.ndarray], np.ndarray]


def as_matrix(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(1, -1)
    return x


# --- picklable building blocks for mean / scale functions -----------------------


@dataclass(frozen=True)
class LinearFunction:
    """``intercept + x @ coef``."""

    coef: tuple[float, ...]
    intercept: float = 0.0

    def __call__(self, x):
        x = as_matrix(x)
        coef = np.asarray(self.coef, dtype=float)
        if x.shape[1] != coef.size:
            raise ValueError(f"feature dimension {x.shape[1]} does not match {coef.size} coefficients")
        return self.intercept + x @ coef


@dataclass(frozen=True)
class Bump:
    """Gaussian bump ``amplitude * exp(-((x0 - center) / width)^2)`` on the first feature."""

    center: float
    width: float
    amplitude: float

    def __call__(self, x):
        t = (as_matrix(x)[:, 0] - self.center) / self.width
        return self.amplitude * np.exp(-t * t)


@dataclass(frozen=True)
class Curve:
    """Smooth 1-d curve of the first feature, used by the synthetic scenarios.

    ``kind`` is one of ``constant`` (``a``), ``linear`` (``a + b x``),
    ``quadratic`` (``a + b x^2``), ``abs`` (``a + b |x|``) or ``sine``
    (``a + b sin(c x)``).  ``bumps`` are added on top, and ``scale_bumps``
    multiply the result by ``1 + sum(bump)``.
    """

    kind: str = "constant"
    a: float = 0.0
    b: float = 0.0
    c: float = 1.0
    bumps: tuple[Bump, ...] = ()
    scale_bumps: tuple[Bump, ...] = ()

    def base(self, t: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            return np.full_like(t, self.a)
        if self.kind == "linear":
            return self.a + self.b * t
        if self.kind == "quadratic":
            return self.a + self.b * t * t
        if self.kind == "abs":
            return self.a + self.b * np.abs(t)
        if self.kind == "sine":
            return self.a + self.b * np.sin(self.c * t)
        raise ValueError(f"unknown curve kind {self.kind!r}")

    def __call__(self, x):
        x = as_matrix(x)
        out = self.base(x[:, 0])
        for bump in self.bumps:
            out = out + bump(x)
        if self.scale_bumps:
            out = out * (1.0 + sum(b(x) for b in self.scale_bumps))
        return out

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "a": self.a, "b": self.b, "c": self.c}
        if self.bumps:
            d["bumps"] = [vars(b) | {} for b in self.bumps]
        if self.scale_bumps:
            d["scale_bumps"] = [vars(b) | {} for b in self.scale_bumps]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Curve":
        d = dict(d)
        bumps = tuple(Bump(**b) for b in d.pop("bumps", ()))
        scale = tuple(Bump(**b) for b in d.pop("scale_bumps", ()))
        unknown = set(d) - {"kind", "a", "b", "c"}
        if unknown:
            raise ValueError(f"unknown curve fields: {sorted(unknown)}")
        return cls(bumps=bumps, scale_bumps=scale, **{k: float(v) if k != "kind" else v for k, v in d.items()})


# --- score models ---------------------------------------------------------------


def _sigma(fn: Function, x: np.ndarray) -> np.ndarray:
    s = np.asarray(fn(x), dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s <= 0):
        raise ValueError("predicted sigma must be positive")
    return np.maximum(s, SIGMA_FLOOR)


class RegressionScore:
    """Base class; subclasses define the score and its level-set geometry."""

    task = "regression"

    def score(self, x, y) -> np.ndarray:
        raise NotImplementedError

    def level_set(self, x, threshold) -> tuple[np.ndarray, np.ndarray]:
        """Bounds ``(lo, hi)`` of ``{y : S_y(x) <= threshold}``; empty when lo > hi."""
        raise NotImplementedError

    def inf_over(self, x, lo, hi) -> np.ndarray:
        """``inf {S_y(x) : lo <= y <= hi}`` (closed, endpoints may be infinite)."""
        raise NotImplementedError

    def length_threshold(self, x, half_length: float) -> np.ndarray:
        """Largest threshold whose level set has length at most ``2 * half_length``."""
        raise NotImplementedError


def _broadcast(x, *vals):
    n = as_matrix(x).shape[0]
    return [np.broadcast_to(np.asarray(v, dtype=float), (n,)) for v in vals]


@dataclass(frozen=True)
class LocallyWeighted(RegressionScore):
    """``|y - mu(x)| / sigma(x)``."""

    mu: Function
    sigma: Function

    def score(self, x, y):
        x = as_matrix(x)
        (y,) = _broadcast(x, y)
        return np.abs(y - self.mu(x)) / _sigma(self.sigma, x)

    def level_set(self, x, threshold):
        x = as_matrix(x)
        (s,) = _broadcast(x, threshold)
        mu, sig = self.mu(x), _sigma(self.sigma, x)
        with np.errstate(invalid="ignore"):
            half = np.where(np.isposinf(s), np.inf, s * sig)
        return mu - half, mu + half

    def inf_over(self, x, lo, hi):
        x = as_matrix(x)
        lo, hi = _broadcast(x, lo, hi)
        mu = self.mu(x)
        dist = np.where(mu < lo, lo - mu, np.where(mu > hi, mu - hi, 0.0))
        return dist / _sigma(self.sigma, x)

    def length_threshold(self, x, half_length):
        return half_length / _sigma(self.sigma, as_matrix(x))


@dataclass(frozen=True)
class QuantileBased(RegressionScore):
    """``max(q_lo(x) - y, y - q_hi(x))`` (conformalized quantile regression)."""

    q_lo: Function
    q_hi: Function

    def _bounds(self, x):
        lo, hi = np.asarray(self.q_lo(x), float), np.asarray(self.q_hi(x), float)
        if np.any(lo > hi):
            raise ValueError("quantile predictor has q_lo(x) > q_hi(x)")
        return lo, hi

    def score(self, x, y):
        x = as_matrix(x)
        (y,) = _broadcast(x, y)
        lo, hi = self._bounds(x)
        return np.maximum(lo - y, y - hi)

    def level_set(self, x, threshold):
        x = as_matrix(x)
        (s,) = _broadcast(x, threshold)
        lo, hi = self._bounds(x)
        return lo - s, hi + s

    def inf_over(self, x, lo, hi):
        x = as_matrix(x)
        lo, hi = _broadcast(x, lo, hi)
        qlo, qhi = self._bounds(x)
        mid = (qlo + qhi) / 2
        y = np.clip(mid, lo, hi)
        return np.maximum(qlo - y, y - qhi)

    def length_threshold(self, x, half_length):
        lo, hi = self._bounds(as_matrix(x))
        return half_length - (hi - lo) / 2


@dataclass(frozen=True)
class MonotoneSigned(RegressionScore):
    """``(mu(x) - y) / sigma(x)``, nonincreasing in y; level sets are ``[mu - s sigma, inf)``."""

    mu: Function
    sigma: Function

    def score(self, x, y):
        x = as_matrix(x)
        (y,) = _broadcast(x, y)
        return (self.mu(x) - y) / _sigma(self.sigma, x)

    def level_set(self, x, threshold):
        x = as_matrix(x)
        (s,) = _broadcast(x, threshold)
        mu, sig = self.mu(x), _sigma(self.sigma, x)
        lo = np.where(np.isposinf(s), -np.inf, mu - s * sig)
        return lo, np.full_like(lo, np.inf)

    def inf_over(self, x, lo, hi):
        x = as_matrix(x)
        lo, hi = _broadcast(x, lo, hi)
        mu, sig = self.mu(x), _sigma(self.sigma, x)
        with np.errstate(invalid="ignore"):
            return np.where(np.isposinf(hi), -np.inf, (mu - hi) / sig)

    def length_threshold(self, x, half_length):
        return np.full(as_matrix(x).shape[0], -np.inf)


@dataclass(frozen=True)
class ClassResidual:
    """``S_k(x) = 1 - pi_k(x)`` with labels ``1..K``."""

    pi: Function
    K: int
    task = "classification"

    def score_matrix(self, x) -> np.ndarray:
        probs = np.asarray(self.pi(as_matrix(x)), dtype=float)
        if probs.ndim != 2 or probs.shape[1] != self.K:
            raise ValueError(f"pi must return an (n, {self.K}) matrix")
        return 1.0 - probs

    def score(self, x, y):
        S = self.score_matrix(x)
        y = np.broadcast_to(np.asarray(y, dtype=int), (S.shape[0],))
        if np.any((y < 1) | (y > self.K)):
            raise ValueError(f"labels must lie in 1..{self.K}")
        return S[np.arange(S.shape[0]), y - 1]

    def level_set(self, x, threshold) -> list[frozenset]:
        S = self.score_matrix(x)
        s = np.broadcast_to(np.asarray(threshold, dtype=float), (S.shape[0],))
        return [frozenset(int(k) + 1 for k in np.flatnonzero(row <= t)) for row, t in zip(S, s)]


ScoreModel = RegressionScore | ClassResidual


def score(model, x, y) -> float:
    """Scalar convenience wrapper around ``model.score``."""
    return float(model.score(as_matrix(x), y)[0])


# --- Gaussian classifier ---------------------------------------------------------


@dataclass(frozen=True)
class GaussianPosterior:
    """Class posterior of a Gaussian model with shared diagonal covariance."""

    means: np.ndarray  # (K, d)
    variances: np.ndarray  # (d,)
    log_priors: np.ndarray  # (K,)

    def __call__(self, x):
        x = as_matrix(x)
        diff = x[:, None, :] - self.means[None, :, :]
        logits = self.log_priors - 0.5 * np.sum(diff * diff / self.variances, axis=2)
        logits -= logits.max(axis=1, keepdims=True)
        w = np.exp(logits)
        return w / w.sum(axis=1, keepdims=True)


def fit_gaussian_classifier(features, labels, K: int) -> ClassResidual:
    """Fit per-class means, a pooled diagonal covariance and empirical priors.

    Each of the ``K`` classes (labels ``1..K``) needs at least two examples.
    """
    x = as_matrix(features)
    y = np.asarray(labels, dtype=int)
    if x.shape[0] != y.size:
        raise ValueError("features and labels have different lengths")
    counts = np.bincount(y - 1, minlength=K) if y.size else np.zeros(K, int)
    if y.size and (y.min() < 1 or y.max() > K):
        raise ValueError(f"labels must lie in 1..{K}")
    if np.any(counts < 2):
        bad = [k + 1 for k in np.flatnonzero(counts < 2)]
        raise ValueError(f"classes {bad} have fewer than 2 training examples")
    means = np.stack([x[y == k + 1].mean(axis=0) for k in range(K)])
    resid = x - means[y - 1]
    var = np.maximum(resid.var(axis=0) * y.size / max(y.size - K, 1), SIGMA_FLOOR)
    post = GaussianPosterior(means, var, np.log(counts / counts.sum()))
    return ClassResidual(post, K)


# --- tie breaking ----------------------------------------------------------------

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_GOLDEN = np.uint64(0x9E3779B97F4A7C15)


def _mix64(z: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
        return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class TieBreaker:
    """Deterministic jitter keyed by ``(seed, example index, label)``."""

    seed: int
    magnitude: float = 1e-12

    def uniforms(self, index: np.ndarray, label: np.ndarray) -> np.ndarray:
        index = np.asarray(index, dtype=np.uint64)
        label = np.asarray(label, dtype=np.uint64)
        with np.errstate(over="ignore"):
            z = _mix64(np.uint64(self.seed % 2**64) + _GOLDEN)
            z = _mix64(z ^ (index * _GOLDEN))
            z = _mix64(z ^ (label + _GOLDEN))
        return (z >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def apply(self, scores: np.ndarray, offset: int = 0) -> np.ndarray:
        """Jitter an ``(N, K)`` score matrix whose rows are examples ``offset..offset+N-1``."""
        scores = np.asarray(scores, dtype=float)
        n, K = scores.shape
        idx = np.arange(offset, offset + n)[:, None]
        lab = np.arange(1, K + 1)[None, :]
        return scores + self.magnitude * self.uniforms(idx, lab)
