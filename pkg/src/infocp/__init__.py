"""Informative selective conformal prediction with false coverage rate control."""

from .informative import (
    AtMostK,
    Combine,
    ExcludeInterval,
    ExcludeLabels,
    InformativeSpec,
    LengthAtMost,
    Localizing,
    NonTrivial,
    adjusted_pvalue,
    adjusted_pvalues,
    is_informative,
    spec_from_dict,
)
from .pvalues import (
    class_calibrated_family,
    full_calibrated_family,
    full_calibrated_pvalue,
    prediction_set,
    score_threshold,
)
from .scores import ClassResidual, LocallyWeighted, MonotoneSigned, QuantileBased, TieBreaker
from .selection import SelectionOutcome, bh, bh_iterative, infoscop, infosp, naive, run_procedure

__all__ = [
    "AtMostK",
    "Combine",
    "ExcludeInterval",
    "ExcludeLabels",
    "InformativeSpec",
    "LengthAtMost",
    "Localizing",
    "NonTrivial",
    "adjusted_pvalue",
    "adjusted_pvalues",
    "is_informative",
    "spec_from_dict",
    "class_calibrated_family",
    "full_calibrated_family",
    "full_calibrated_pvalue",
    "prediction_set",
    "score_threshold",
    "ClassResidual",
    "LocallyWeighted",
    "MonotoneSigned",
    "QuantileBased",
    "TieBreaker",
    "SelectionOutcome",
    "bh",
    "bh_iterative",
    "infoscop",
    "infosp",
    "naive",
    "run_procedure",
]

__version__ = "0.1.0"
