"""Random problem instances and the structural checks run on them.

Each ``check_*`` function draws one instance from ``rng`` and raises
AssertionError on any mismatch.  Informativeness and p-values are recomputed
with the brute-force helpers in :mod:`oracles` wherever possible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

import oracles
from infocp.data import ClassificationScores, RegressionScores
from infocp.informative import (
    AtMostK,
    Combine,
    ExcludeInterval,
    ExcludeLabels,
    LengthAtMost,
    Localizing,
    NonTrivial,
    adjusted_pvalue_generic,
    adjusted_pvalues,
    family_grid,
    indicator_at,
)
from infocp.metrics import fcp, fdp
from infocp.pvalues import (
    CalibrationScores,
    class_calibrated_family,
    full_calibrated_family,
    prediction_set,
    score_threshold,
)
from infocp.regions import LabelSet
from infocp.scores import Curve, LocallyWeighted, MonotoneSigned, QuantileBased
from infocp.selection import (
    DIRECTIONAL_SPEC,
    BhOnNullClass,
    BhOnQ,
    KeepAll,
    adapt_infosp,
    bh,
    bh_iterative,
    directional_fdr,
    infoscop,
    infosp,
    jc_one_sided,
    naive,
)

ALPHAS = [Fraction(1, 20), Fraction(1, 10), Fraction(1, 5), Fraction(1, 3), Fraction(1, 2)]


@dataclass
class Instance:
    scored: object
    spec: object
    truth: np.ndarray  # hidden test labels
    oracle_spec: tuple  # (kind, arg) understood by oracles.informative_*
    alpha: Fraction


# --- specs ----------------------------------------------------------------------


def _label_spec(rng, K):
    choice = rng.integers(4)
    if choice == 0:
        size = int(rng.integers(1, K))
        labels = frozenset(int(v) for v in rng.choice(np.arange(1, K + 1), size, replace=False))
        return ExcludeLabels(labels), ("exclude", labels)
    if choice == 1:
        return NonTrivial(), ("non_trivial", None)
    if choice == 2:
        k0 = int(rng.integers(1, K))
        return AtMostK(k0), ("at_most", k0)
    y = int(rng.integers(1, K + 1))
    k0 = int(rng.integers(1, K))
    return (
        Combine((ExcludeLabels(frozenset({y})), AtMostK(k0))),
        ("combine", [("exclude", frozenset({y})), ("at_most", k0)]),
    )


def _cells(rng):
    cuts = np.sort(rng.uniform(-4, 4, 2 * int(rng.integers(1, 4))))
    cells = [(float(cuts[2 * j]), float(cuts[2 * j + 1])) for j in range(cuts.size // 2)]
    if rng.random() < 0.3:
        cells[0] = (-math.inf, cells[0][1])
    if rng.random() < 0.3 and not (len(cells) == 1 and math.isinf(cells[0][0])):
        cells[-1] = (cells[-1][0], math.inf)
    return cells


def _interval_spec(rng, monotone):
    choice = rng.integers(4)
    if choice == 0 or monotone and choice == 1:
        a, b = np.sort(rng.uniform(-3, 3, 2))
        if monotone or rng.random() < 0.2:
            a = -math.inf
        return ExcludeInterval(a, b), ("exclude", (a, b))
    if choice == 1:
        L = float(rng.uniform(0.2, 5))
        return LengthAtMost(L), ("length", L)
    if choice == 2:
        cells = _cells(rng)
        return Localizing(tuple(cells)), ("localizing", cells)
    a, b = np.sort(rng.uniform(-3, 3, 2))
    L = float(rng.uniform(0.5, 6))
    return (
        Combine((ExcludeInterval(a, b), LengthAtMost(L))),
        ("combine", [("exclude", (a, b)), ("length", L)]),
    )


# --- instances ---------------------------------------------------------------------


def classification_instance(rng, K=None, n_min=0) -> Instance:
    K = int(rng.integers(2, 5)) if K is None else K
    n = int(rng.integers(n_min, 40))
    m = int(rng.integers(1, 15))
    coarse = rng.random() < 0.3
    draw = (lambda shape: rng.integers(0, 6, shape) / 5.0) if coarse else (lambda shape: rng.random(shape))
    # scores loosely tied to the label so that selections are not always empty
    shift = rng.uniform(0, 0.8)
    labels = rng.integers(1, K + 1, n)
    truth = rng.integers(1, K + 1, m)
    cal, test = draw((n, K)), draw((m, K))
    cal[np.arange(n), labels - 1] -= shift
    test[np.arange(m), truth - 1] -= shift
    spec, ospec = _label_spec(rng, K)
    return Instance(ClassificationScores(cal, labels, test), spec, truth, ospec, ALPHAS[rng.integers(len(ALPHAS))])


def _curve(rng, lo, hi):
    kind = ["constant", "linear", "quadratic", "abs", "sine"][rng.integers(5)]
    return Curve(kind, float(rng.uniform(lo, hi)), float(rng.uniform(-1, 1)), float(rng.uniform(0.5, 3)))


def regression_model(rng, monotone=False):
    if monotone:
        return MonotoneSigned(_curve(rng, -1, 1), Curve("abs", float(rng.uniform(0.3, 1)), float(rng.uniform(0, 1))))
    if rng.random() < 0.5:
        return LocallyWeighted(_curve(rng, -1, 1), Curve("abs", float(rng.uniform(0.3, 1)), float(rng.uniform(0, 1))))
    base = _curve(rng, -1, 1)
    width = float(rng.uniform(0, 2))
    return QuantileBased(base, Curve(base.kind, base.a + width, base.b, base.c))


def regression_instance(rng, monotone=None, n_min=1) -> Instance:
    monotone = bool(rng.random() < 0.25) if monotone is None else monotone
    model = regression_model(rng, monotone)
    n = int(rng.integers(n_min, 40))
    m = int(rng.integers(1, 12))
    x = rng.uniform(-2, 2, (n + m, 1))
    y = np.sin(2 * x[:, 0]) + rng.normal(0, 1, n + m) * (0.5 + np.abs(x[:, 0]) / 2)
    spec, ospec = _interval_spec(rng, monotone)
    scored = RegressionScores(model, x[:n], y[:n], x[n:])
    return Instance(scored, spec, y[n:], ospec, ALPHAS[rng.integers(len(ALPHAS))])


def random_instance(rng, n_min=0) -> Instance:
    if rng.random() < 0.5:
        return classification_instance(rng, n_min=n_min)
    return regression_instance(rng, n_min=max(n_min, 1))


def family_of(inst: Instance, rng):
    if isinstance(inst.scored, ClassificationScores) and rng.random() < 0.5:
        return class_calibrated_family(inst.scored)
    return full_calibrated_family(inst.scored)


# --- oracle-side regions and informativeness ------------------------------------------


def oracle_informative(region, inst: Instance) -> bool:
    kind, arg = inst.oracle_spec
    if isinstance(region, LabelSet):
        return oracles.informative_labels(region.labels, region.K, kind, arg)
    return oracles.informative_interval(region.lo, region.hi, kind, arg)


def oracle_pvalue_rows(inst: Instance, fam):
    """Exact p-value rows for classification families, recomputed from scratch."""
    s = inst.scored
    if fam.kind == "class":
        return oracles.class_pvalue_matrix(s.cal.tolist(), s.cal_labels.tolist(), s.test.tolist())
    return oracles.pvalue_matrix(s.true_cal_scores().tolist(), s.test.tolist())


def conformal_set(inst: Instance, fam, i: int, level: Fraction):
    """Level-``level`` conformal set of test point ``i`` built without the family's region code."""
    s = inst.scored
    if isinstance(s, ClassificationScores):
        row = oracle_pvalue_rows(inst, fam)[i]
        return LabelSet(oracles.label_set(row, level), s.K)
    cal = CalibrationScores(s.true_cal_scores())
    return prediction_set(s.model, s.test_x[i : i + 1], cal, level)


def oracle_grid(inst: Instance, fam):
    if isinstance(inst.scored, ClassificationScores):
        vals = {v for row in oracle_pvalue_rows(inst, fam) for v in row}
        return sorted(vals | {Fraction(1)})
    n = inst.scored.n
    return [Fraction(k, n + 1) for k in range(1, n + 2)]


# --- checks --------------------------------------------------------------------------


def check_bh_iterative(rng):
    inst = random_instance(rng)
    fam = family_of(inst, rng)
    q = adjusted_pvalues(inst.spec, fam)
    sel, ell = bh(q, inst.alpha)
    it = bh_iterative(indicator_at(inst.spec, fam), inst.alpha, fam.m)
    want, want_ell = oracles.bh(q.fractions(), inst.alpha)
    assert list(sel) == want and ell == want_ell
    assert list(it) == want, (list(it), want)


def check_q_le_alpha_iff_informative(rng):
    inst = random_instance(rng)
    fam = family_of(inst, rng)
    q = adjusted_pvalues(inst.spec, fam).fractions()
    # grid levels and a few off-grid ones; level 1 is excluded because q = 1
    # is also the "never informative" value
    for level in sorted(set(oracle_grid(inst, fam)[:-1]) | set(ALPHAS)):
        for i in range(fam.m):
            inf = oracle_informative(conformal_set(inst, fam, i, level), inst)
            assert (q[i] <= level) == inf, (i, level, q[i])


def check_closed_form_equals_grid(rng):
    inst = random_instance(rng)
    fam = family_of(inst, rng)
    q = adjusted_pvalues(inst.spec, fam).fractions()
    at = indicator_at(inst.spec, fam)
    grid = family_grid(fam)
    cache = {level: at(level) for level in grid}
    ogrid = oracle_grid(inst, fam)
    for i in range(fam.m):
        generic = adjusted_pvalue_generic(lambda t: cache[t][i], grid)
        brute = oracles.grid_q(lambda t: oracle_informative(conformal_set(inst, fam, i, t), inst), ogrid)
        assert q[i] == generic == brute, (i, q[i], generic, brute)


def _outcomes(inst: Instance, rng):
    """Outcomes of every applicable procedure, each with its own instance view."""
    s, spec, a = inst.scored, inst.spec, inst.alpha
    fam = family_of(inst, rng)
    outs = [(infosp(fam, spec, a), inst), (naive(fam, spec, a), inst)]
    if s.n >= 2:
        if isinstance(s, ClassificationScores):
            init = [KeepAll(), BhOnQ(), BhOnNullClass(int(rng.integers(1, s.K + 1)))][rng.integers(3)]
        else:
            init = [KeepAll(), BhOnQ()][rng.integers(2)]
        outs.append((infoscop(s, spec, a, r=int(rng.integers(1, s.n)), init=init), inst))
    if isinstance(s, ClassificationScores):
        est = ["calibration", "storey"][rng.integers(2)]
        outs.append((adapt_infosp(s, spec, a, estimator=est), inst))
        if s.K == 3:
            ospec = ("combine", [("exclude", frozenset({2})), ("at_most", 1)])
            outs.append((directional_fdr(fam, a), Instance(s, DIRECTIONAL_SPEC, inst.truth, ospec, a)))
    elif isinstance(s.model, MonotoneSigned):
        y0 = float(rng.uniform(-2, 2))
        view = Instance(s, ExcludeInterval(-math.inf, y0), inst.truth, ("exclude", (-math.inf, y0)), a)
        outs.append((jc_one_sided(s, y0, a), view))
    return outs


def check_fdp_le_fcp(rng):
    inst = random_instance(rng)
    for out, view in _outcomes(inst, rng):
        assert fdp(out, view.truth, view.spec) <= fcp(out, view.truth), out.procedure


def check_selected_regions_informative(rng):
    inst = random_instance(rng)
    for out, view in _outcomes(inst, rng):
        for j in range(out.n_selected):
            assert oracle_informative(out.regions[j], view), (out.procedure, out.regions[j])
        if out.n_selected and out.procedure != "naive":
            q = dict(zip(out.candidates.tolist(), out.q.fractions()))
            assert all(q[int(i)] <= out.adjusted_level for i in out.selected)


def check_nesting(rng):
    inst = random_instance(rng)
    fam = family_of(inst, rng)
    a1, a2 = sorted(rng.choice(len(ALPHAS) + 2, 2, replace=False))
    levels = [Fraction(0)] + ALPHAS + [Fraction(1)]
    lo_level, hi_level = levels[a1], levels[a2]
    for i in range(fam.m):
        big = conformal_set(inst, fam, i, lo_level)
        small = conformal_set(inst, fam, i, hi_level)
        assert small.issubset(big), (i, lo_level, hi_level, small, big)


def check_duality(rng):
    n = int(rng.integers(0, 30))
    coarse = rng.random() < 0.3
    cal = (rng.integers(0, 8, n) / 4.0) if coarse else rng.normal(size=n)
    s = float(rng.integers(-1, 9) / 4.0) if coarse else float(rng.normal())
    alpha = Fraction(int(rng.integers(1, 1000)), 1000)
    p = oracles.pvalue(cal.tolist(), s)
    assert (p > alpha) == (s <= score_threshold(cal, alpha)), (cal, s, alpha)
    assert score_threshold(cal, alpha) == oracles.threshold(cal.tolist(), alpha)


STRUCTURAL_CHECKS = {
    "a": ("bh equals iterative recursion", check_bh_iterative),
    "b": ("q <= level iff conformal set informative", check_q_le_alpha_iff_informative),
    "c": ("closed-form q equals grid scan", check_closed_form_equals_grid),
    "d": ("FDP <= FCP", check_fdp_le_fcp),
    "e": ("selected regions informative", check_selected_regions_informative),
    "f": ("prediction sets nested in level", check_nesting),
    "g": ("p-value / threshold duality", check_duality),
}
