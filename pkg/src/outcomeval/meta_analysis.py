"""Per-study effect sizes and pooled outcome estimates.

Estimators follow the RevMan defaults: Mantel-Haenszel for dichotomous data,
inverse variance for continuous data, DerSimonian-Laird when an outcome is
declared random-effects.  Ratio measures (RR, OR) are pooled on the log scale
and reported on the natural scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist
from typing import Iterable, Mapping, Optional, Sequence

from .evidence.types import (
    ContinuousArms, DataKind, DichotomousArms, EffectMeasure, Model, Outcome, Pooling,
)

Z_95 = 1.959964
_NAN = float("nan")


@dataclass(frozen=True)
class ToleranceConfig:
    """Equality tolerances used when classifying a recomputed estimate."""

    rel_tol: float = 1e-5
    abs_tol: float = 1e-6

    def __post_init__(self):
        if self.rel_tol < 0 or self.abs_tol < 0:
            raise ValueError("tolerances must be >= 0")

    def equal(self, original: float, predicted: float) -> bool:
        return abs(original - predicted) <= max(self.rel_tol * abs(original), self.abs_tol)


@dataclass(frozen=True)
class StudyEffect:
    study_id: str
    point: float
    log_scale: bool
    transformed_point: float
    se: float
    estimable: bool = True

    @classmethod
    def not_estimable(cls, study_id: str, log_scale: bool) -> "StudyEffect":
        return cls(study_id, _NAN, log_scale, _NAN, _NAN, False)


@dataclass(frozen=True)
class PooledOutcome:
    estimate: float
    ci_low: float
    ci_high: float
    weights: Mapping[str, float] = field(default_factory=dict)
    n_studies: int = 0
    estimable: bool = False
    q: float = 0.0
    tau2: float = 0.0
    i2: float = 0.0
    transformed_estimate: float = _NAN
    se: float = _NAN
    log_scale: bool = False

    @classmethod
    def not_estimable(cls, log_scale: bool = False) -> "PooledOutcome":
        return cls(_NAN, _NAN, _NAN, {}, 0, False, log_scale=log_scale)


def z_multiplier(ci_level: float = 0.95) -> float:
    if math.isclose(ci_level, 0.95, rel_tol=0.0, abs_tol=1e-12):
        return Z_95
    return NormalDist().inv_cdf(0.5 + ci_level / 2.0)


def confidence_interval(transformed_point: float, se: float, ci_level: float = 0.95,
                        log_scale: bool = False) -> tuple[float, float]:
    if se < 0:
        raise ValueError("se must be >= 0")
    half = z_multiplier(ci_level) * se
    low, high = transformed_point - half, transformed_point + half
    if log_scale:
        return math.exp(low), math.exp(high)
    return low, high


def _corrected(arms: DichotomousArms) -> tuple[float, float, float, float]:
    """(a, b, c, d) with 0.5 added to every cell when any cell is zero."""
    a, c = arms.events_exp, arms.events_ctrl
    b, d = arms.total_exp - a, arms.total_ctrl - c
    if 0 in (a, b, c, d):
        return a + 0.5, b + 0.5, c + 0.5, d + 0.5
    return float(a), float(b), float(c), float(d)


def _ratio_estimable(arms: DichotomousArms) -> bool:
    return (arms.total_exp > 0 and arms.total_ctrl > 0
            and not (arms.events_exp == 0 and arms.events_ctrl == 0))


def study_effect_dichotomous(arms: DichotomousArms, measure: EffectMeasure,
                             study_id: str = "") -> StudyEffect:
    measure = EffectMeasure(measure)
    if measure.is_ratio:
        if not _ratio_estimable(arms):
            return StudyEffect.not_estimable(study_id, True)
        a, b, c, d = _corrected(arms)
        n1, n2 = a + b, c + d
        if measure is EffectMeasure.RR:
            point = (a / n1) / (c / n2)
            log_point = (math.log(a) - math.log(n1)) - (math.log(c) - math.log(n2))
            se = math.sqrt(1 / a - 1 / n1 + 1 / c - 1 / n2)
        else:
            point = (a * d) / (b * c)
            log_point = (math.log(a) + math.log(d)) - (math.log(b) + math.log(c))
            se = math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
        return StudyEffect(study_id, point, True, log_point, se)
    if measure is not EffectMeasure.RD:
        raise ValueError(f"{measure.value} is not a dichotomous measure")
    n1, n2 = arms.total_exp, arms.total_ctrl
    if n1 == 0 or n2 == 0:
        return StudyEffect.not_estimable(study_id, False)
    a, c = arms.events_exp, arms.events_ctrl
    b, d = n1 - a, n2 - c
    point = a / n1 - c / n2
    se = math.sqrt(a * b / n1 ** 3 + c * d / n2 ** 3)
    return StudyEffect(study_id, point, False, point, se)


def study_effect_continuous(arms: ContinuousArms, measure: EffectMeasure,
                            study_id: str = "") -> StudyEffect:
    measure = EffectMeasure(measure)
    n1, n2 = arms.n_exp, arms.n_ctrl
    if n1 == 0 or n2 == 0:
        return StudyEffect.not_estimable(study_id, False)
    md = arms.mean_exp - arms.mean_ctrl
    if measure is EffectMeasure.MD:
        se = math.sqrt(arms.sd_exp ** 2 / n1 + arms.sd_ctrl ** 2 / n2)
        return StudyEffect(study_id, md, False, md, se)
    if measure is not EffectMeasure.SMD:
        raise ValueError(f"{measure.value} is not a continuous measure")
    total = n1 + n2
    if total < 3:
        return StudyEffect.not_estimable(study_id, False)
    pooled_sd = math.sqrt(((n1 - 1) * arms.sd_exp ** 2 + (n2 - 1) * arms.sd_ctrl ** 2)
                          / (total - 2))
    if pooled_sd == 0:
        if md != 0:
            return StudyEffect.not_estimable(study_id, False)
        g = 0.0
    else:
        g = md / pooled_sd * (1 - 3 / (4 * total - 9))
    se = math.sqrt(total / (n1 * n2) + g ** 2 / (2 * (total - 3.94)))
    return StudyEffect(study_id, g, False, g, se)


def study_effect(arms, measure: EffectMeasure, study_id: str = "") -> StudyEffect:
    if isinstance(arms, DichotomousArms):
        return study_effect_dichotomous(arms, measure, study_id)
    return study_effect_continuous(arms, measure, study_id)


def _normalised(pairs: Iterable[tuple[str, float]]) -> dict[str, float]:
    pairs = list(pairs)
    total = math.fsum(w for _, w in pairs)
    weights: dict[str, float] = {}
    for sid, w in pairs:
        weights[sid] = weights.get(sid, 0.0) + w / total
    return weights


def _heterogeneity(effects: Sequence[StudyEffect], pooled: float) -> tuple[float, float]:
    usable = [e for e in effects if e.estimable and e.se > 0]
    if len(usable) < 2:
        return 0.0, 0.0
    q = math.fsum((e.transformed_point - pooled) ** 2 / e.se ** 2 for e in usable)
    df = len(usable) - 1
    i2 = (q - df) / q if q > df else 0.0
    return q, i2


def _finish(transformed: float, se: float, ci_level: float, log_scale: bool,
            weights: dict[str, float], n: int, q: float, tau2: float,
            i2: float) -> PooledOutcome:
    if not (math.isfinite(transformed) and math.isfinite(se)):
        return PooledOutcome.not_estimable(log_scale)
    low, high = confidence_interval(transformed, se, ci_level, log_scale)
    estimate = math.exp(transformed) if log_scale else transformed
    # exp() can round the estimate a hair outside a zero-width interval
    estimate = min(max(estimate, low), high)
    return PooledOutcome(estimate, low, high, weights, n, True, q, tau2, i2,
                         transformed, se, log_scale)


def pool_mantel_haenszel(rows: Sequence[tuple[str, DichotomousArms]], measure: EffectMeasure,
                         ci_level: float = 0.95) -> PooledOutcome:
    """Fixed-effect Mantel-Haenszel pooling of 2x2 tables.

    RR/OR use Greenland-Robins variances of the log estimate; strata where
    neither arm has events carry no information and are dropped.  Zero cells
    in the remaining strata get the same 0.5 correction as the study effects,
    so each stratum's ratio equals its study effect.
    """
    measure = EffectMeasure(measure)
    log_scale = measure.is_ratio
    if measure.is_ratio:
        strata = [(sid, arms) for sid, arms in rows if _ratio_estimable(arms)]
    else:
        strata = [(sid, arms) for sid, arms in rows
                  if arms.total_exp > 0 and arms.total_ctrl > 0]
    if not strata:
        return PooledOutcome.not_estimable(log_scale)

    effects = [study_effect_dichotomous(arms, measure, sid) for sid, arms in strata]
    if measure is EffectMeasure.RR:
        r_terms, s_terms, p_terms = [], [], []
        for _, arms in strata:
            a, b, c, d = _corrected(arms)
            n1, n2 = a + b, c + d
            n = n1 + n2
            r_terms.append(a * n2 / n)
            s_terms.append(c * n1 / n)
            p_terms.append((n1 * n2 * (a + c) - a * c * n) / n ** 2)
        sum_r, sum_s = math.fsum(r_terms), math.fsum(s_terms)
        transformed = math.log(sum_r / sum_s)
        se = math.sqrt(math.fsum(p_terms) / (sum_r * sum_s))
        raw_weights = s_terms
    elif measure is EffectMeasure.OR:
        r_terms, s_terms, pr, ps_qr, qs = [], [], [], [], []
        for _, arms in strata:
            a, b, c, d = _corrected(arms)
            n = a + b + c + d
            r, s = a * d / n, b * c / n
            p, q = (a + d) / n, (b + c) / n
            r_terms.append(r)
            s_terms.append(s)
            pr.append(p * r)
            ps_qr.append(p * s + q * r)
            qs.append(q * s)
        sum_r, sum_s = math.fsum(r_terms), math.fsum(s_terms)
        transformed = math.log(sum_r / sum_s)
        var = (math.fsum(pr) / (2 * sum_r ** 2) + math.fsum(ps_qr) / (2 * sum_r * sum_s)
               + math.fsum(qs) / (2 * sum_s ** 2))
        se = math.sqrt(var)
        raw_weights = s_terms
    else:
        w_terms, num_terms, var_terms = [], [], []
        for _, arms in strata:
            a, c = arms.events_exp, arms.events_ctrl
            n1, n2 = arms.total_exp, arms.total_ctrl
            b, d = n1 - a, n2 - c
            n = n1 + n2
            w_terms.append(n1 * n2 / n)
            num_terms.append((a * n2 - c * n1) / n)
            var_terms.append((a * b * n2 ** 3 + c * d * n1 ** 3) / (n1 * n2 * n ** 2))
        sum_w = math.fsum(w_terms)
        transformed = math.fsum(num_terms) / sum_w
        se = math.sqrt(math.fsum(var_terms)) / sum_w
        raw_weights = w_terms

    weights = _normalised((sid, w) for (sid, _), w in zip(strata, raw_weights))
    q, i2 = _heterogeneity(effects, transformed)
    return _finish(transformed, se, ci_level, log_scale, weights, len(strata), q, 0.0, i2)


def pool_inverse_variance(effects: Sequence[StudyEffect], model: Model = Model.FIXED,
                          ci_level: float = 0.95) -> PooledOutcome:
    """Inverse-variance pooling, optionally with DerSimonian-Laird tau^2.

    Effects that are not estimable or have a zero standard error cannot be
    weighted and are left out.
    """
    model = Model(model)
    log_scale = any(e.log_scale for e in effects)
    usable = [e for e in effects if e.estimable and e.se > 0 and math.isfinite(e.se)]
    if not usable:
        return PooledOutcome.not_estimable(log_scale)

    w = [1.0 / e.se ** 2 for e in usable]
    theta = [e.transformed_point for e in usable]
    sum_w = math.fsum(w)
    fixed = math.fsum(wi * ti for wi, ti in zip(w, theta)) / sum_w
    k = len(usable)
    q = math.fsum(wi * (ti - fixed) ** 2 for wi, ti in zip(w, theta)) if k > 1 else 0.0
    df = k - 1
    i2 = (q - df) / q if k > 1 and q > df else 0.0

    tau2 = 0.0
    if model is Model.RANDOM and k > 1:
        c = sum_w - math.fsum(wi * wi for wi in w) / sum_w
        tau2 = max(0.0, (q - df) / c) if c > 0 else 0.0
    if tau2 > 0:
        w = [1.0 / (e.se ** 2 + tau2) for e in usable]
        sum_w = math.fsum(w)
        pooled = math.fsum(wi * ti for wi, ti in zip(w, theta)) / sum_w
    else:
        pooled = fixed
    se = 1.0 / math.sqrt(sum_w)
    weights = _normalised((e.study_id, wi) for e, wi in zip(usable, w))
    return _finish(pooled, se, ci_level, log_scale, weights, k, q, tau2, i2)


def pool_outcome(outcome: Outcome, included_studies: Optional[Iterable[str]] = None
                 ) -> PooledOutcome:
    """Pool an outcome from the rows of ``included_studies`` (all rows if None).

    Subgroups are merged into one analysis.  Dichotomous MH outcomes declared
    random-effects are pooled with DerSimonian-Laird, as RevMan does.
    """
    rows = outcome.rows
    if included_studies is not None:
        included = set(included_studies)
        rows = tuple(r for r in rows if r.study_id in included)
    measure = outcome.effect_measure
    if not rows:
        return PooledOutcome.not_estimable(measure.is_ratio)
    if (outcome.data_kind is DataKind.DICHOTOMOUS
            and outcome.pooling is Pooling.MANTEL_HAENSZEL
            and outcome.model is Model.FIXED):
        return pool_mantel_haenszel([(r.study_id, r.data) for r in rows], measure,
                                    outcome.ci_level)
    effects = [study_effect(r.data, measure, r.study_id) for r in rows]
    return pool_inverse_variance(effects, outcome.model, outcome.ci_level)


def study_effects(outcome: Outcome, included_studies: Optional[Iterable[str]] = None
                  ) -> list[StudyEffect]:
    included = None if included_studies is None else set(included_studies)
    return [study_effect(r.data, outcome.effect_measure, r.study_id) for r in outcome.rows
            if included is None or r.study_id in included]
