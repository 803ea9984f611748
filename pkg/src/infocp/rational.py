"""Exact rational vectors for conformal p-values and BH thresholds.

Conformal p-values are ratios of small integers, and BH compares them against
grid points ``alpha * l / m``.  Doing that in floating point flips selections
on exact ties, so every p-value family keeps an integer numerator/denominator
pair and every comparison is an integer cross-multiplication.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

RationalLike = Union[Fraction, int, float, str]

# Largest magnitude allowed in an intermediate product (keeps int64 safe).
_SAFE = 2**62


def as_fraction(value: RationalLike) -> Fraction:
    """Convert ``value`` to an exact Fraction.

    Strings may be ``"p/q"`` or a decimal literal.  Floats are converted through
    their shortest decimal repr, so ``0.1`` becomes ``1/10`` rather than the
    binary expansion.
    """
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not np.isfinite(value):
            raise ValueError(f"cannot convert {value!r} to a rational")
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        text = value.strip()
        try:
            return Fraction(text)
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"not a rational number: {value!r}") from exc
    raise TypeError(f"unsupported rational type {type(value).__name__}")


def parse_alpha(value: RationalLike) -> Fraction:
    alpha = as_fraction(value)
    if not 0 < alpha < 1:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    return alpha


def format_fraction(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


@dataclass(frozen=True)
class Rationals:
    """A vector of nonnegative rationals ``num / den`` (int64 arrays)."""

    num: np.ndarray
    den: np.ndarray

    def __post_init__(self):
        num = np.asarray(self.num, dtype=np.int64)
        den = np.asarray(self.den, dtype=np.int64)
        num, den = np.broadcast_arrays(num, den)
        if np.any(den <= 0):
            raise ValueError("denominators must be positive")
        object.__setattr__(self, "num", np.ascontiguousarray(num))
        object.__setattr__(self, "den", np.ascontiguousarray(den))

    @classmethod
    def from_fractions(cls, values: Iterable[RationalLike]) -> "Rationals":
        fr = [as_fraction(v) for v in values]
        return cls(
            np.array([f.numerator for f in fr], dtype=np.int64),
            np.array([f.denominator for f in fr], dtype=np.int64),
        )

    @property
    def shape(self):
        return self.num.shape

    def __len__(self) -> int:
        return len(self.num)

    def __getitem__(self, idx):
        if np.ndim(self.num[idx]) == 0:
            return Fraction(int(self.num[idx]), int(self.den[idx]))
        return Rationals(self.num[idx], self.den[idx])

    def to_float(self) -> np.ndarray:
        # Correctly rounded division: equal rationals map to equal floats, and
        # for denominators below ~1e7 the float order matches the exact order.
        return self.num / self.den

    def fractions(self) -> list[Fraction]:
        return [Fraction(int(a), int(b)) for a, b in zip(self.num.ravel(), self.den.ravel())]

    def le(self, t: Fraction) -> np.ndarray:
        """Elementwise ``self <= t``."""
        t = as_fraction(t)
        return self.num * t.denominator <= t.numerator * self.den

    def gt(self, t: Fraction) -> np.ndarray:
        return ~self.le(t)

    def clip_one(self) -> "Rationals":
        over = self.num > self.den
        return Rationals(np.where(over, 1, self.num), np.where(over, 1, self.den))

    def reduced(self) -> "Rationals":
        g = np.gcd(self.num, self.den)
        g[g == 0] = 1
        return Rationals(self.num // g, self.den // g)

    def scaled(self, factor: Fraction) -> "Rationals":
        factor = as_fraction(factor)
        num = self.num * factor.numerator
        den = self.den * factor.denominator
        if np.any(np.abs(num) >= _SAFE) or np.any(den >= _SAFE):
            raise OverflowError("rational scaling overflowed int64")
        return Rationals(num, den).reduced()


def elementwise_max(a: Rationals, b: Rationals) -> Rationals:
    take_a = a.num * b.den >= b.num * a.den
    return Rationals(np.where(take_a, a.num, b.num), np.where(take_a, a.den, b.den))


def elementwise_min(a: Rationals, b: Rationals) -> Rationals:
    take_a = a.num * b.den <= b.num * a.den
    return Rationals(np.where(take_a, a.num, b.num), np.where(take_a, a.den, b.den))


def row_order_stat(values: Rationals, k: int) -> Rationals:
    """k-th smallest entry (1-based) of each row of an (m, K) rational matrix."""
    if values.num.ndim != 2:
        raise ValueError("row_order_stat expects a matrix")
    K = values.num.shape[1]
    if not 1 <= k <= K:
        raise ValueError(f"order statistic {k} out of range for {K} columns")
    order = np.argsort(values.to_float(), axis=1, kind="stable")
    col = order[:, k - 1]
    rows = np.arange(values.num.shape[0])
    return Rationals(values.num[rows, col], values.den[rows, col])
