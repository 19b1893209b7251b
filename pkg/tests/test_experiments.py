import math
import random

import pytest

import oracles
from outcomeval.evidence import (
    Comparison, Corpus, DataKind, DichotomousArms, EffectMeasure, Model, Outcome, Pooling,
    Qrels, Review, RunRanking, StudyPublicationMap, StudyRow, Subgroup,
)
from outcomeval.experiments import (
    GOLD_TAG, SimulationSpec, SplitMix64, compare_runs, correlate, derive_seed, dominates,
    evaluate_run, evaluation_universe, frontier, gold_baseline, max_with_qrels_baseline,
    pareto_frontier, removal_order, simulate_removals,
)
from outcomeval.ir_metrics import recall_at_percent


# rng --------------------------------------------------------------------------------

def test_splitmix_reference_vector():
    # published first outputs of SplitMix64 seeded with 0
    rng = SplitMix64(0)
    assert [rng.next_u64() for _ in range(3)] == [
        0xE220A8397B1DCDAF, 0x6E789E6AA1B965F4, 0x06C45D188009454F]


def test_derive_seed_is_keyed():
    seeds = {derive_seed(0, rid, i) for rid in ("CD1", "CD2") for i in range(5)}
    assert len(seeds) == 10
    assert derive_seed(3, "CD1", 2) == derive_seed(3, "CD1", 2)


def test_sample_prefix_nested_and_distinct():
    items = [f"p{i}" for i in range(30)]
    full = SplitMix64(42).sample_prefix(items, 30)
    assert sorted(full) == sorted(items)
    for k in range(31):
        assert SplitMix64(42).sample_prefix(items, k) == full[:k]


def test_sample_prefix_is_roughly_uniform():
    counts = [0] * 5
    rng = SplitMix64(9)
    for _ in range(5000):
        counts[rng.sample_prefix(range(5), 1)[0]] += 1
    assert all(900 < c < 1100 for c in counts)


def test_removal_order_clamps():
    assert sorted(removal_order(["a", "b"], 0, "CD1", 0, 10)) == ["a", "b"]


# constructed corpus -----------------------------------------------------------------

def _small_corpus(n_docs=10, n_relevant=3, qrels_missing=()):
    studies = [f"S{i}" for i in range(n_relevant)]
    tables = [(12, 40, 4, 38), (3, 25, 9, 27), (8, 30, 6, 31)]
    rows = tuple(StudyRow(s, DichotomousArms(*tables[i % 3])) for i, s in enumerate(studies))
    outcome = Outcome("O1", "mortality", DataKind.DICHOTOMOUS, EffectMeasure.RR,
                      Pooling.MANTEL_HAENSZEL, Model.FIXED,
                      subgroups=(Subgroup("O1", "", rows),))
    review = Review("CDX", (Comparison("C1", "c", (outcome,)),))
    mapping = StudyPublicationMap(frozenset(("CDX", s, f"pub{i}")
                                            for i, s in enumerate(studies)))
    judgments = {("CDX", f"pub{i}"): int(i < n_relevant and f"pub{i}" not in qrels_missing)
                 for i in range(n_docs)}
    return Corpus({"CDX": review}, mapping, Qrels(judgments))


def test_gold_recall_at_30_single_review():
    corpus = _small_corpus()
    gold = gold_baseline(corpus)
    ranking = gold.ranking("CDX")
    assert len(ranking) == 10
    assert recall_at_percent(ranking, corpus.qrels.relevant("CDX"), 30) == 1.0


def test_baselines_share_relevant_block_when_qrels_complete():
    corpus = _small_corpus()
    gold = gold_baseline(corpus).ranking("CDX")
    maxq = max_with_qrels_baseline(corpus.qrels, corpus).ranking("CDX")
    assert gold[:3] == maxq[:3] == ["pub0", "pub1", "pub2"]


def test_max_with_qrels_misses_unjudged_included():
    corpus = _small_corpus(qrels_missing={"pub1"})
    maxq = max_with_qrels_baseline(corpus.qrels, corpus)
    ev = evaluate_run(maxq, corpus, cutoffs=(20, 100))
    assert ev.aggregates[20].mean_mod > 0
    gold_ev = evaluate_run(gold_baseline(corpus), corpus, cutoffs=(100,))
    assert gold_ev.aggregates[100].mean_mod == 0.0


def test_run_retrieving_nothing_relevant():
    corpus = _small_corpus()
    run = RunRanking.from_ordered("bad", {"CDX": [f"pub{i}" for i in range(9, 2, -1)]})
    ev = evaluate_run(run, corpus, cutoffs=(30,))
    table = ev.aggregates[30]
    assert table.mean_mod == 1.0
    assert table.n_missing == table.n_total == 1


def test_unknown_run_topic_warns():
    corpus = _small_corpus()
    run = RunRanking.from_ordered("r", {"CDX": ["pub0"], "CD-other": ["x"]})
    ev = evaluate_run(run, corpus, cutoffs=(100,))
    assert any("CD-other" in w for w in ev.warnings)
    assert ev.aggregates[100].n_total == 1


# synthetic corpus -------------------------------------------------------------------

def test_universe_size(synthetic_corpus):
    universe = evaluation_universe(synthetic_corpus)
    assert len(universe) >= 30
    assert all(item.original.estimable for item in universe)


def test_gold_at_100_matches_identity(synthetic_corpus):
    ev = evaluate_run(gold_baseline(synthetic_corpus), synthetic_corpus, cutoffs=(100,))
    table = ev.aggregates[100]
    assert table.mean_mod == 0.0
    assert table.n_missing == 0
    assert table.n_equal == table.n_total
    for r in ev.results[100]:
        assert r.predicted == r.item.original


def test_outcome_count_constant_across_cutoffs(synthetic_corpus):
    run = max_with_qrels_baseline(synthetic_corpus.qrels, synthetic_corpus)
    ev = evaluate_run(run, synthetic_corpus)
    assert len({t.n_total for t in ev.aggregates.values()}) == 1


def test_simulation_zero_removal_is_gold(synthetic_corpus):
    table = simulate_removals(synthetic_corpus, SimulationSpec((0,), n_seeds=2))
    mean = table.column(0).mean()
    assert mean["n_equal"] == mean["n_total"] == table.gold.n_total
    assert mean["mean_mod"] == 0.0
    assert mean["pub_recall"] == 1.0


def test_simulation_remove_everything(synthetic_corpus):
    table = simulate_removals(synthetic_corpus, SimulationSpec((1000,), n_seeds=2))
    mean = table.column(1000).mean()
    assert mean["n_reported"] == 0
    assert mean["mean_mod"] == 1.0
    assert mean["study_recall"] == 0.0


def test_simulation_deterministic(synthetic_corpus):
    spec = SimulationSpec((1, 3), n_seeds=3, base_seed=11)
    assert simulate_removals(synthetic_corpus, spec) == simulate_removals(synthetic_corpus,
                                                                           spec)


def test_simulation_base_seed_matters(synthetic_corpus):
    a = simulate_removals(synthetic_corpus, SimulationSpec((2,), n_seeds=3, base_seed=0))
    b = simulate_removals(synthetic_corpus, SimulationSpec((2,), n_seeds=3, base_seed=1))
    assert a.column(2).per_seed != b.column(2).per_seed


@pytest.mark.parametrize("counts,seeds", [((), 1), ((2, 1), 1), ((-1,), 1), ((1,), 0)])
def test_simulation_spec_validation(counts, seeds):
    with pytest.raises(ValueError):
        SimulationSpec(counts, n_seeds=seeds)


def test_compare_runs_orders_by_map(synthetic_corpus):
    evs = [evaluate_run(RunRanking.from_ordered(tag, lists), synthetic_corpus)
           for tag, lists in _two_runs(synthetic_corpus)]
    rows = compare_runs(evs)
    brute = sorted(rows, key=lambda r: (-r["map"], r["mean_mod@30"], r["run_tag"]))
    assert [r["run_tag"] for r in rows] == [r["run_tag"] for r in brute] == ["good", "poor"]
    assert [r["rank_by_map"] for r in rows] == [1, 2]


def _two_runs(corpus):
    gold = gold_baseline(corpus)
    good = {rid: gold.ranking(rid) for rid in corpus.review_ids()}
    poor = {rid: list(reversed(r)) for rid, r in good.items()}
    return [("poor", poor), ("good", good)]


def test_compare_runs_baseline_first(synthetic_corpus):
    evs = [evaluate_run(gold_baseline(synthetic_corpus), synthetic_corpus)]
    evs += [evaluate_run(RunRanking.from_ordered(t, l), synthetic_corpus)
            for t, l in _two_runs(synthetic_corpus)]
    rows = compare_runs(evs)
    assert rows[0]["run_tag"] == GOLD_TAG
    assert rows[0]["map"] is None


# pareto -----------------------------------------------------------------------------

def test_pareto_example():
    points = pareto_frontier([("A", 1, 1), ("B", 2, 2), ("C", 0, 3)])
    flags = {p.run_tag: p.dominated for p in points}
    assert flags == {"A": False, "B": True, "C": False}
    assert [p.run_tag for p in frontier([("A", 1, 1), ("B", 2, 2), ("C", 0, 3)])] == ["C", "A"]


def test_pareto_singleton_and_empty():
    assert [p.run_tag for p in frontier([("X", 3, 7)])] == ["X"]
    assert pareto_frontier([]) == []


def test_pareto_duplicates_both_kept():
    assert len(frontier([("a", 1, 2), ("b", 1, 2)])) == 2


def test_pareto_normalisation():
    pts = {p.run_tag: p for p in pareto_frontier([("gold", 0, 0), ("r", 3, 10), ("s", 1, 5)])}
    assert pts["gold"].y == 0.0 and pts["r"].y == 1.0 and pts["s"].y == 0.5
    assert pts["s"].y_raw == 5


def test_pareto_random_against_brute_force():
    rng = random.Random(5)
    for trial in range(50):
        n = rng.randint(1, 200)
        raw = [(f"r{i}", rng.randint(0, 20), rng.randint(0, 50) * 0.5) for i in range(n)]
        raw.append(("gold", 0, 0.0))
        points = pareto_frontier(raw)
        coords = [(p.x, p.y) for p in points]
        brute = oracles.dominated_brute(coords)
        assert {i for i, p in enumerate(points) if p.dominated} == brute
        front = [c for i, c in enumerate(coords) if i not in brute]
        for i in brute:
            assert any(dominates(f, coords[i]) for f in front)
        gold = next(p for p in points if p.run_tag == "gold")
        assert not gold.dominated and (gold.x, gold.y) == (0, 0.0)


# correlation ------------------------------------------------------------------------

def test_correlation_perfect_line():
    out = correlate({"map": [0.1, 0.2, 0.3, 0.4]}, [4.0, 3.0, 2.0, 1.0])
    assert out["map"]["pearson"] == pytest.approx(-1.0)
    assert out["map"]["spearman"] == pytest.approx(-1.0)
    assert out["map"]["slope"] == pytest.approx(-10.0)


def test_correlation_degenerate():
    out = correlate({"map": [0.1, 0.1, 0.1]}, [1.0, 2.0, 3.0])
    assert math.isnan(out["map"]["pearson"])
