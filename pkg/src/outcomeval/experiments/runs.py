"""Evaluation of ranking runs at percentage cut-offs, and the two oracle baselines."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

from ..aspects import AggregateTable, AspectReport, aggregate
from ..evidence.corpus import Corpus
from ..evidence.types import Qrels, RunRanking
from ..ir_metrics import TopicEvaluation, cutoff_at_percent, evaluate_topic, mean_measures
from ..meta_analysis import PooledOutcome, ToleranceConfig
from .universe import EvaluatedOutcome, by_review, evaluation_universe, reports_for_review

log = logging.getLogger(__name__)

DEFAULT_CUTOFFS = (5, 10, 20, 30, 50)
GOLD_TAG = "gold"
MAX_WITH_QRELS_TAG = "max-with-qrels"


@dataclass(frozen=True)
class OutcomeResult:
    item: EvaluatedOutcome
    predicted: PooledOutcome
    report: AspectReport


@dataclass(frozen=True)
class RunEvaluation:
    run_tag: str
    cutoffs: tuple[float, ...]
    results: Mapping[float, tuple[OutcomeResult, ...]]
    aggregates: Mapping[float, AggregateTable]
    topics: tuple[TopicEvaluation, ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def measures(self) -> dict[str, float]:
        return mean_measures(self.topics)

    def pareto_objectives(self, cutoff: float) -> tuple[int, float]:
        """(non-estimable count, summed MoD over estimable outcomes) at ``cutoff``."""
        results = self.results[cutoff]
        missing = sum(not r.report.estimable for r in results)
        return missing, math.fsum(r.report.mod for r in results if r.report.estimable)


def retrieved_at(ranking: Sequence[str], k_percent: float) -> list[str]:
    if not ranking:
        return []
    return list(ranking[:cutoff_at_percent(len(ranking), k_percent)])


def evaluate_run(run: RunRanking, corpus: Corpus, qrels: Optional[Qrels] = None,
                 cutoffs: Iterable[float] = DEFAULT_CUTOFFS,
                 tol: ToleranceConfig = ToleranceConfig(),
                 universe: Optional[list[EvaluatedOutcome]] = None) -> RunEvaluation:
    """Outcome aspects per cutoff plus IR measures over the full ranking.

    Topic ids are review ids.  Run topics unknown to the corpus are ignored;
    corpus reviews missing from the run count as retrieving nothing, so the
    outcome set is the same for every run.
    """
    cutoffs = tuple(cutoffs)
    qrels = qrels if qrels is not None else corpus.qrels
    universe = evaluation_universe(corpus) if universe is None else universe
    grouped = by_review(universe)
    warnings = []
    for topic in sorted(set(run.topics) - set(corpus.reviews)):
        warnings.append(f"run {run.tag}: topic {topic} not in corpus; skipped")
    for rid in sorted(set(grouped) - set(run.topics)):
        warnings.append(f"run {run.tag}: review {rid} missing from run; nothing retrieved")
    for message in warnings:
        log.warning(message)

    results = {}
    for k in cutoffs:
        rows = []
        for rid in sorted(grouped):
            retrieved = retrieved_at(run.ranking(rid), k)
            rows.extend(OutcomeResult(item, predicted, report) for item, predicted, report
                        in reports_for_review(grouped[rid], retrieved, corpus, tol))
        results[k] = tuple(rows)
    aggregates = {k: aggregate(r.report for r in results[k]) for k in cutoffs}

    topics = []
    if qrels is not None:
        for topic in sorted(set(run.topics) & set(corpus.reviews)):
            if not qrels.judged(topic):
                warnings.append(f"run {run.tag}: no qrels for topic {topic}")
                continue
            evaluation = evaluate_topic(topic, run.ranking(topic), qrels)
            if evaluation is not None:
                topics.append(evaluation)
    return RunEvaluation(run.tag, cutoffs, results, aggregates, tuple(topics), tuple(warnings))


def _collection(corpus: Corpus, qrels: Optional[Qrels], review_id: str) -> set[str]:
    return set(qrels.judged(review_id)) if qrels is not None else set()


def gold_baseline(corpus: Corpus, qrels: Optional[Qrels] = None) -> RunRanking:
    """All publications of the review's included studies first, then the rest of
    the judged collection; ascending publication id within each block."""
    qrels = qrels if qrels is not None else corpus.qrels
    lists = {}
    for rid in corpus.review_ids():
        included = set(corpus.mapping.publications(rid))
        rest = _collection(corpus, qrels, rid) - included
        lists[rid] = sorted(included) + sorted(rest)
    return RunRanking.from_ordered(GOLD_TAG, lists)


def max_with_qrels_baseline(qrels: Qrels, corpus: Corpus) -> RunRanking:
    """Qrels-relevant publications first, then the rest of the judged collection."""
    lists = {}
    for rid in corpus.review_ids():
        relevant = set(qrels.relevant(rid))
        rest = set(qrels.judged(rid)) - relevant
        lists[rid] = sorted(relevant) + sorted(rest)
    return RunRanking.from_ordered(MAX_WITH_QRELS_TAG, lists)


def compare_runs(evaluations: Sequence[RunEvaluation], sort_cutoff: float = 30,
                 baselines: Iterable[str] = (GOLD_TAG, MAX_WITH_QRELS_TAG)) -> list[dict]:
    """One row per run with MAP and mean MoD, ordered by MAP (desc) then mean MoD.

    Baselines are not scored with IR measures; for ordering they are treated
    as having the highest MAP.  Both rank positions are included so the two
    orderings can be compared.
    """
    baselines = set(baselines)
    rows = []
    for ev in evaluations:
        measures = ev.measures()
        row = {"run_tag": ev.run_tag, "baseline": ev.run_tag in baselines,
               "map": None if ev.run_tag in baselines else measures.get("map")}
        for k in ev.cutoffs:
            row[f"mean_mod@{_fmt(k)}"] = ev.aggregates[k].mean_mod
            row[f"n_missing@{_fmt(k)}"] = ev.aggregates[k].n_missing
        rows.append(row)

    key_mod = f"mean_mod@{_fmt(sort_cutoff)}"

    def map_key(row):
        map_value = math.inf if row["baseline"] else (row["map"] or 0.0)
        return (-map_value, row.get(key_mod, math.inf), row["run_tag"])

    def mod_key(row):
        return (row.get(key_mod, math.inf), -(math.inf if row["baseline"] else (row["map"] or 0.0)),
                row["run_tag"])

    for position, row in enumerate(sorted(rows, key=mod_key), start=1):
        row["rank_by_mod"] = position
    ordered = sorted(rows, key=map_key)
    for position, row in enumerate(ordered, start=1):
        row["rank_by_map"] = position
    return ordered


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:g}"
