import math
import random

import pytest
from hypothesis import given, strategies as st

import oracles
from outcomeval.evidence import (
    ContinuousArms, DataKind, DichotomousArms, EffectMeasure, Model, Outcome, Pooling,
    StudyRow, Subgroup,
)
from outcomeval.meta_analysis import (
    StudyEffect, confidence_interval, pool_inverse_variance, pool_mantel_haenszel,
    pool_outcome, study_effect, study_effects,
)

RR, OR, RD = EffectMeasure.RR, EffectMeasure.OR, EffectMeasure.RD
MD, SMD = EffectMeasure.MD, EffectMeasure.SMD


def rel_close(a, b, rel=1e-10):
    return math.isclose(a, b, rel_tol=rel, abs_tol=1e-12)


# per-study effects ---------------------------------------------------------------

def test_rr_study_effect():
    e = study_effect(DichotomousArms(10, 20, 5, 20), RR)
    assert e.point == pytest.approx(2.0, rel=1e-12)
    assert e.se == pytest.approx(math.sqrt(0.2), rel=1e-12)
    assert e.se == pytest.approx(0.44721, abs=1e-5)


def test_rr_identical_arms():
    assert study_effect(DichotomousArms(5, 10, 5, 10), RR).point == pytest.approx(1.0)


@pytest.mark.parametrize("n1,n2", [(10, 10), (3, 50)])
def test_double_zero_odds_ratio_not_estimable(n1, n2):
    assert not study_effect(DichotomousArms(0, n1, 0, n2), OR).estimable


def test_zero_total_not_estimable():
    for m in (RR, OR, RD):
        assert not study_effect(DichotomousArms(0, 0, 3, 10), m).estimable
    assert not study_effect(ContinuousArms(0, 1.0, 1.0, 10, 0.5, 1.0), MD).estimable


def test_single_zero_cell_correction():
    e = study_effect(DichotomousArms(0, 10, 4, 10), OR)
    theta, se = oracles.study_log_effect("OR", 0, 10, 4, 10)
    assert e.estimable
    assert e.transformed_point == pytest.approx(theta, rel=1e-12)
    assert e.se == pytest.approx(se, rel=1e-12)


def test_rd_keeps_zero_cells():
    e = study_effect(DichotomousArms(0, 10, 2, 10), RD)
    assert e.point == pytest.approx(-0.2)
    assert e.se == pytest.approx(math.sqrt(0.2 * 0.8 / 10))


def test_md_effect():
    e = study_effect(ContinuousArms(50, 10.0, 2.0, 50, 8.0, 2.0), MD)
    assert e.point == pytest.approx(2.0)
    assert e.se == pytest.approx(0.4)


def test_md_identical_arms():
    assert study_effect(ContinuousArms(20, 3.0, 1.0, 20, 3.0, 1.0), MD).point == 0.0


def test_smd_equal_means_is_zero():
    assert study_effect(ContinuousArms(12, 4.0, 1.5, 9, 4.0, 2.5), SMD).point == 0.0


def test_smd_matches_oracle():
    arms = ContinuousArms(15, 5.2, 1.1, 18, 4.1, 1.6)
    g, se = oracles.continuous_effect("SMD", 15, 5.2, 1.1, 18, 4.1, 1.6)
    e = study_effect(arms, SMD)
    assert e.point == pytest.approx(g, rel=1e-12)
    assert e.se == pytest.approx(se, rel=1e-12)


def test_smd_zero_pooled_sd():
    assert not study_effect(ContinuousArms(5, 2.0, 0.0, 5, 1.0, 0.0), SMD).estimable


# confidence intervals ------------------------------------------------------------

def test_ci_log_scale():
    lo, hi = confidence_interval(0.0, 0.5, 0.95, log_scale=True)
    assert lo == pytest.approx(math.exp(-0.979982), rel=1e-9)
    assert hi == pytest.approx(math.exp(0.979982), rel=1e-9)
    assert lo == pytest.approx(0.3753, abs=1e-4)
    assert hi == pytest.approx(2.6645, abs=1e-4)


def test_ci_zero_se():
    assert confidence_interval(1.7, 0.0) == (1.7, 1.7)


def test_ci_natural_scale():
    lo, hi = confidence_interval(2.0, 1.0)
    assert lo == pytest.approx(0.040036, abs=1e-12)
    assert hi == pytest.approx(3.959964, abs=1e-12)


# Mantel-Haenszel -------------------------------------------------------------------

def test_mh_single_study_identity():
    arms = DichotomousArms(7, 30, 3, 25)
    pooled = pool_mantel_haenszel([("S", arms)], RR)
    assert pooled.estimate == pytest.approx(study_effect(arms, RR).point, rel=1e-12)
    assert pooled.weights == {"S": 1.0}


def test_mh_identical_strata():
    rows = [("A", DichotomousArms(10, 20, 5, 20)), ("B", DichotomousArms(20, 40, 10, 40))]
    assert pool_mantel_haenszel(rows, RR).estimate == pytest.approx(2.0, rel=1e-12)


def test_mh_heterogeneous_strata_oracle():
    tables = [(12, 40, 4, 38), (3, 25, 9, 27)]
    rows = [(f"S{i}", DichotomousArms(*t)) for i, t in enumerate(tables)]
    pooled = pool_mantel_haenszel(rows, RR)
    est, lo, hi = oracles.mh("RR", tables)
    assert rel_close(pooled.estimate, est)
    assert rel_close(pooled.ci_low, lo)
    assert rel_close(pooled.ci_high, hi)


def test_mh_all_double_zero():
    rows = [("A", DichotomousArms(0, 10, 0, 10)), ("B", DichotomousArms(0, 5, 0, 8))]
    assert not pool_mantel_haenszel(rows, OR).estimable


def _random_tables(rng):
    tables = []
    for _ in range(rng.randint(1, 6)):
        n1, n2 = rng.randint(1, 50), rng.randint(1, 50)
        tables.append((rng.randint(0, n1), n1, rng.randint(0, n2), n2))
    return tables


def _mh_defined(measure, tables):
    # RR/OR need positive sums after correction; RD needs non-degenerate variance
    if measure == "RD":
        return any(0 < a < n1 or 0 < c < n2 for a, n1, c, n2 in tables)
    return any(not (a == 0 and c == 0) for a, n1, c, n2 in tables)


@pytest.mark.parametrize("measure", ["RR", "OR", "RD"])
def test_mh_oracle_equivalence(measure):
    rng = random.Random(f"mh-{measure}")
    checked = 0
    while checked < 150:
        tables = _random_tables(rng)
        if not _mh_defined(measure, tables):
            continue
        rows = [(f"S{i}", DichotomousArms(*t)) for i, t in enumerate(tables)]
        pooled = pool_mantel_haenszel(rows, EffectMeasure(measure))
        expected = oracles.mh(measure, tables)
        assert pooled.estimable
        for got, want in zip((pooled.estimate, pooled.ci_low, pooled.ci_high), expected):
            assert rel_close(got, want), (tables, got, want)
        checked += 1


@pytest.mark.parametrize("measure", [RR, OR])
def test_mh_convexity(measure):
    rng = random.Random(7)
    for _ in range(200):
        tables = [t for t in _random_tables(rng) if not (t[0] == 0 and t[2] == 0)]
        if not tables:
            continue
        rows = [(f"S{i}", DichotomousArms(*t)) for i, t in enumerate(tables)]
        pooled = pool_mantel_haenszel(rows, measure)
        ratios = [study_effect(arms, measure).point for _, arms in rows]
        assert min(ratios) * (1 - 1e-12) <= pooled.estimate <= max(ratios) * (1 + 1e-12)


# inverse variance --------------------------------------------------------------------

def _eff(theta, se, log_scale=False, sid="S"):
    point = math.exp(theta) if log_scale else theta
    return StudyEffect(sid, point, log_scale, theta, se, True)


def test_iv_symmetric_points():
    pooled = pool_inverse_variance([_eff(0.7, 0.3, sid="A"), _eff(-0.7, 0.3, sid="B")])
    assert pooled.estimate == pytest.approx(0.0, abs=1e-15)


def test_iv_single_effect():
    pooled = pool_inverse_variance([_eff(1.3, 0.2)], Model.RANDOM)
    assert pooled.estimate == pytest.approx(1.3)
    assert pooled.tau2 == 0.0
    assert pooled.q == 0.0


def test_iv_three_effects_oracle():
    thetas, ses = [0.4, 1.1, -0.2], [0.3, 0.5, 0.25]
    effects = [_eff(t, s, sid=f"S{i}") for i, (t, s) in enumerate(zip(thetas, ses))]
    pooled = pool_inverse_variance(effects)
    w = [1 / s ** 2 for s in ses]
    brute = sum(wi * t for wi, t in zip(w, thetas)) / sum(w)
    assert math.isclose(pooled.estimate, brute, rel_tol=1e-12)


def test_iv_no_estimable_effects():
    pooled = pool_inverse_variance([StudyEffect.not_estimable("S", False)])
    assert not pooled.estimable


@pytest.mark.parametrize("random_model", [False, True])
@pytest.mark.parametrize("log_scale", [False, True])
def test_iv_oracle_equivalence(random_model, log_scale):
    rng = random.Random(f"iv-{random_model}-{log_scale}")
    for _ in range(120):
        k = rng.randint(1, 6)
        thetas = [rng.uniform(-2, 2) for _ in range(k)]
        ses = [rng.uniform(0.05, 1.5) for _ in range(k)]
        effects = [_eff(t, s, log_scale, f"S{i}") for i, (t, s) in enumerate(zip(thetas, ses))]
        pooled = pool_inverse_variance(effects, Model.RANDOM if random_model else Model.FIXED)
        est, lo, hi, tau2, q = oracles.inverse_variance(thetas, ses, random_model, log_scale)
        assert rel_close(pooled.estimate, est)
        assert rel_close(pooled.ci_low, lo)
        assert rel_close(pooled.ci_high, hi)
        assert math.isclose(pooled.tau2, tau2, rel_tol=1e-10, abs_tol=1e-14)
        assert math.isclose(pooled.q, q, rel_tol=1e-10, abs_tol=1e-12)


@given(st.lists(st.tuples(st.floats(-3, 3), st.floats(0.01, 2)), min_size=1, max_size=8))
def test_iv_invariants(pairs):
    effects = [_eff(t, s, sid=f"S{i}") for i, (t, s) in enumerate(pairs)]
    fixed = pool_inverse_variance(effects)
    assert math.isclose(sum(fixed.weights.values()), 1.0, abs_tol=1e-9)
    thetas = [t for t, _ in pairs]
    assert min(thetas) - 1e-12 <= fixed.estimate <= max(thetas) + 1e-12
    assert fixed.se <= min(s for _, s in pairs) * (1 + 1e-12)
    assert fixed.ci_low <= fixed.estimate <= fixed.ci_high
    rand = pool_inverse_variance(effects, Model.RANDOM)
    assert 0.0 <= rand.i2 <= 1.0
    if rand.tau2 == 0.0:
        assert rand.estimate == pytest.approx(fixed.estimate, rel=1e-12, abs=1e-15)
        assert rand.se == pytest.approx(fixed.se, rel=1e-12)


# symmetry ---------------------------------------------------------------------------

@given(st.integers(1, 50), st.integers(1, 50), st.data())
def test_arm_swap_symmetry(n1, n2, data):
    a = data.draw(st.integers(0, n1))
    c = data.draw(st.integers(0, n2))
    arms = DichotomousArms(a, n1, c, n2)
    for m in (RR, OR):
        e, s = study_effect(arms, m), study_effect(arms.swapped(), m)
        if e.estimable:
            assert s.transformed_point == -e.transformed_point
            assert s.point == pytest.approx(1 / e.point, rel=1e-14)
    e, s = study_effect(arms, RD), study_effect(arms.swapped(), RD)
    assert s.point == -e.point


def test_md_swap_symmetry():
    arms = ContinuousArms(12, 3.3, 1.0, 14, 2.1, 1.4)
    assert study_effect(arms.swapped(), MD).point == -study_effect(arms, MD).point


# pool_outcome ------------------------------------------------------------------------

def _outcome(measure=RR, pooling=Pooling.MANTEL_HAENSZEL, model=Model.FIXED):
    tables = [(12, 40, 4, 38), (3, 25, 9, 27), (8, 30, 6, 31), (15, 50, 10, 49),
              (2, 12, 1, 11)]
    rows = tuple(StudyRow(f"S{i}", DichotomousArms(*t)) for i, t in enumerate(tables))
    subgroups = (Subgroup("G1", "a", rows[:2]), Subgroup("G2", "b", rows[2:]))
    return Outcome("O1", "o", DataKind.DICHOTOMOUS, measure, pooling, model,
                   subgroups=subgroups)


def test_pool_outcome_all_studies_identity():
    out = _outcome()
    full = pool_outcome(out)
    assert pool_outcome(out, out.study_ids) == full
    assert full.estimate == pytest.approx(oracles.mh("RR", [r.data and (
        r.data.events_exp, r.data.total_exp, r.data.events_ctrl, r.data.total_ctrl)
        for r in out.rows])[0], rel=1e-10)


def test_pool_outcome_empty_selection():
    assert not pool_outcome(_outcome(), set()).estimable


def test_pool_outcome_drop_one_study():
    out = _outcome(pooling=Pooling.INVERSE_VARIANCE, model=Model.RANDOM)
    before = {e.study_id: e for e in study_effects(out)}
    kept = {"S0", "S1", "S3", "S4"}
    after = {e.study_id: e for e in study_effects(out, kept)}
    for sid in kept:
        assert after[sid] == before[sid]
    pooled = pool_outcome(out, kept)
    assert set(pooled.weights) == kept
    assert math.isclose(sum(pooled.weights.values()), 1.0, abs_tol=1e-9)


def test_random_mh_outcome_uses_dersimonian_laird():
    out = _outcome(model=Model.RANDOM)
    pooled = pool_outcome(out)
    effects = study_effects(out)
    est = oracles.inverse_variance([e.transformed_point for e in effects],
                                   [e.se for e in effects], True, True)[0]
    assert rel_close(pooled.estimate, est)
