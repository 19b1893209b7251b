"""Random removal of included publications and its effect on review outcomes."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, fields
from typing import Optional, Sequence

from ..aspects import AggregateTable, aggregate
from ..evidence.corpus import Corpus
from ..evidence.mapping import studies_found
from ..meta_analysis import ToleranceConfig
from .rng import SplitMix64, derive_seed
from .universe import EvaluatedOutcome, by_review, evaluation_universe, reports_for_review

log = logging.getLogger(__name__)

DEFAULT_REMOVAL_COUNTS = (1, 2, 3, 4, 5, 10, 15, 20, 30, 50, 100)
DEFAULT_SEEDS = 20
DEFAULT_BASE_SEED = 0


@dataclass(frozen=True)
class SimulationSpec:
    removal_counts: tuple[int, ...] = DEFAULT_REMOVAL_COUNTS
    n_seeds: int = DEFAULT_SEEDS
    base_seed: int = DEFAULT_BASE_SEED

    def __post_init__(self):
        counts = tuple(self.removal_counts)
        object.__setattr__(self, "removal_counts", counts)
        if not counts:
            raise ValueError("at least one removal count is required")
        if any(c < 0 for c in counts):
            raise ValueError("removal counts must be >= 0")
        if any(b <= a for a, b in zip(counts, counts[1:])):
            raise ValueError("removal counts must be strictly increasing")
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be >= 1")


@dataclass(frozen=True)
class SimulationColumn:
    removal_count: int
    per_seed: tuple[AggregateTable, ...]
    pub_recall: tuple[float, ...]
    study_recall: tuple[float, ...]
    # per outcome, averaged over seeds; non-estimable replicates count MoD 1.0
    outcome_mod: tuple[float, ...] = ()
    outcome_delta_ci: tuple[Optional[float], ...] = ()

    def mean(self) -> dict[str, float]:
        """Seed-mean of every aggregate field plus the two recall rows."""
        n = len(self.per_seed)
        out = {f.name: math.fsum(getattr(t, f.name) for t in self.per_seed) / n
               for f in fields(AggregateTable)}
        out["pub_recall"] = math.fsum(self.pub_recall) / n
        out["study_recall"] = math.fsum(self.study_recall) / n
        return out


@dataclass(frozen=True)
class SimulationTable:
    spec: SimulationSpec
    gold: AggregateTable
    columns: tuple[SimulationColumn, ...]
    outcome_keys: tuple[tuple[str, str, str], ...] = ()
    skipped_reviews: tuple[str, ...] = field(default=())

    def column(self, removal_count: int) -> SimulationColumn:
        for col in self.columns:
            if col.removal_count == removal_count:
                return col
        raise KeyError(removal_count)


def removal_order(publications: Sequence[str], base_seed: int, review_id: str,
                  seed_index: int, k: int) -> list[str]:
    """The first ``k`` publications removed for this (review, replicate)."""
    rng = SplitMix64(derive_seed(base_seed, review_id, seed_index))
    return rng.sample_prefix(sorted(publications), k)


def simulate_removals(corpus: Corpus, spec: SimulationSpec = SimulationSpec(),
                      tol: ToleranceConfig = ToleranceConfig(),
                      universe: Optional[list[EvaluatedOutcome]] = None) -> SimulationTable:
    """Remove n included publications per review at random, re-pool, compare.

    Each (review, replicate) gets its own stream; the removed sets for
    increasing n are nested prefixes of one shuffle.  Counts larger than a
    review's publication list remove everything.
    """
    universe = evaluation_universe(corpus) if universe is None else universe
    grouped = by_review(universe)
    skipped = []
    reviews = []
    for rid in sorted(grouped):
        pubs = sorted(corpus.mapping.publications(rid))
        if not pubs:
            log.warning("review %s has no included publications in the mapping; skipped", rid)
            skipped.append(rid)
            continue
        reviews.append((rid, pubs))

    kept = [item for rid, _ in reviews for item in grouped[rid]]
    gold = aggregate(report for rid, pubs in reviews
                     for _, _, report in reports_for_review(grouped[rid], pubs, corpus, tol))
    max_count = max(spec.removal_counts)

    per_count: dict[int, dict] = {
        n: {"tables": [], "pub": [], "study": [], "mods": [[] for _ in kept],
            "dcis": [[] for _ in kept]}
        for n in spec.removal_counts
    }
    for seed in range(spec.n_seeds):
        orders = {rid: removal_order(pubs, spec.base_seed, rid, seed, max_count)
                  for rid, pubs in reviews}
        for n in spec.removal_counts:
            bucket = per_count[n]
            reports = []
            pub_recalls, study_recalls = [], []
            for rid, pubs in reviews:
                removed = set(orders[rid][:n])
                retrieved = [p for p in pubs if p not in removed]
                reports.extend(r for _, _, r in
                               reports_for_review(grouped[rid], retrieved, corpus, tol))
                pub_recalls.append(len(retrieved) / len(pubs))
                all_studies = studies_found(rid, pubs, corpus.mapping)
                found = studies_found(rid, retrieved, corpus.mapping)
                study_recalls.append(len(found) / len(all_studies) if all_studies else 0.0)
            bucket["tables"].append(aggregate(reports))
            bucket["pub"].append(math.fsum(pub_recalls) / len(pub_recalls) if reviews else 0.0)
            bucket["study"].append(
                math.fsum(study_recalls) / len(study_recalls) if reviews else 0.0)
            for i, report in enumerate(reports):
                bucket["mods"][i].append(report.mod)
                if report.delta_ci is not None:
                    bucket["dcis"][i].append(report.delta_ci)

    columns = []
    for n in spec.removal_counts:
        bucket = per_count[n]
        columns.append(SimulationColumn(
            n, tuple(bucket["tables"]), tuple(bucket["pub"]), tuple(bucket["study"]),
            tuple(math.fsum(m) / len(m) for m in bucket["mods"]),
            tuple(math.fsum(d) / len(d) if d else None for d in bucket["dcis"]),
        ))
    return SimulationTable(spec, gold, tuple(columns), tuple(item.key for item in kept),
                           tuple(skipped))
