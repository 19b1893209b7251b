"""Comparison of a recomputed outcome against the original one.

Five aspects are reported per outcome: magnitude of difference (relative
difference of the pooled estimates), distance of the recomputed estimate
from the original confidence interval, over/underestimation, agreement of
the direction of effect, and whether the outcome could be estimated at all.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, fields
from typing import Iterable, Optional

from .evidence.types import EffectMeasure
from .meta_analysis import PooledOutcome, ToleranceConfig


class EstimateClass(str, enum.Enum):
    EQUAL = "equal"
    OVERESTIMATED = "overestimated"
    UNDERESTIMATED = "underestimated"
    NOT_ESTIMABLE = "not_estimable"


class SignMatch(str, enum.Enum):
    SAME = "same"
    DIFFERENT = "different"
    NOT_ESTIMABLE = "not_estimable"


@dataclass(frozen=True)
class AspectReport:
    mod: float
    delta_ci: Optional[float]
    estimate_class: EstimateClass
    sign_match: SignMatch
    estimable: bool


def magnitude_of_difference(original: float, predicted: Optional[float]) -> float:
    """Relative difference ``|O_o - O_p| / |O_o|``.

    ``predicted=None`` (or NaN) means the outcome could not be estimated and
    yields 1.0; so does a non-zero prediction of a zero original.
    """
    if predicted is None or math.isnan(predicted):
        return 1.0
    if original == 0:
        return 0.0 if predicted == 0 else 1.0
    return abs(original - predicted) / abs(original)


def distance_from_ci(predicted: float, ci_low: float, ci_high: float) -> float:
    if ci_low > ci_high:
        raise ValueError("ci_low must not exceed ci_high")
    if predicted < ci_low:
        return ci_low - predicted
    if predicted > ci_high:
        return predicted - ci_high
    return 0.0


def classify_estimate(original: float, predicted: float,
                      tol: ToleranceConfig = ToleranceConfig()) -> EstimateClass:
    if tol.equal(original, predicted):
        return EstimateClass.EQUAL
    return EstimateClass.OVERESTIMATED if predicted > original else EstimateClass.UNDERESTIMATED


def sign_agreement(original: float, predicted: float,
                   effect_measure: EffectMeasure) -> SignMatch:
    # a value exactly at the null agrees with either direction
    null = EffectMeasure(effect_measure).null_value
    s_orig = (original > null) - (original < null)
    s_pred = (predicted > null) - (predicted < null)
    if s_orig == 0 or s_pred == 0 or s_orig == s_pred:
        return SignMatch.SAME
    return SignMatch.DIFFERENT


def aspect_report(original: PooledOutcome, predicted: PooledOutcome,
                  effect_measure: EffectMeasure,
                  tol: ToleranceConfig = ToleranceConfig()) -> AspectReport:
    if not original.estimable:
        raise ValueError("original outcome must be estimable")
    if not predicted.estimable:
        return AspectReport(1.0, None, EstimateClass.NOT_ESTIMABLE, SignMatch.NOT_ESTIMABLE,
                            False)
    o, p = original.estimate, predicted.estimate
    return AspectReport(
        magnitude_of_difference(o, p),
        distance_from_ci(p, original.ci_low, original.ci_high),
        classify_estimate(o, p, tol),
        sign_agreement(o, p, effect_measure),
        True,
    )


@dataclass(frozen=True)
class AggregateTable:
    mean_mod: float = 0.0
    mean_delta_ci: float = 0.0
    n_equal: int = 0
    n_over: int = 0
    n_under: int = 0
    n_same_sign: int = 0
    n_diff_sign: int = 0
    n_reported: int = 0
    n_missing: int = 0
    n_total: int = 0

    @property
    def n_different(self) -> int:
        return self.n_over + self.n_under

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def aggregate(reports: Iterable[AspectReport]) -> AggregateTable:
    """Outcome-level totals; non-estimable outcomes count as MoD 1.0 but are
    left out of the mean distance from CI."""
    reports = list(reports)
    if not reports:
        return AggregateTable()
    classes = [r.estimate_class for r in reports]
    signs = [r.sign_match for r in reports]
    distances = [r.delta_ci for r in reports if r.estimable]
    return AggregateTable(
        mean_mod=math.fsum(r.mod for r in reports) / len(reports),
        mean_delta_ci=math.fsum(distances) / len(distances) if distances else 0.0,
        n_equal=classes.count(EstimateClass.EQUAL),
        n_over=classes.count(EstimateClass.OVERESTIMATED),
        n_under=classes.count(EstimateClass.UNDERESTIMATED),
        n_same_sign=signs.count(SignMatch.SAME),
        n_diff_sign=signs.count(SignMatch.DIFFERENT),
        n_reported=sum(r.estimable for r in reports),
        n_missing=sum(not r.estimable for r in reports),
        n_total=len(reports),
    )
