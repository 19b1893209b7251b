"""The set of outcomes an evaluation runs over, with their original pools."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from ..aspects import AspectReport, aspect_report
from ..evidence.corpus import Corpus
from ..evidence.mapping import studies_found
from ..evidence.types import Comparison, Outcome, Review
from ..meta_analysis import PooledOutcome, ToleranceConfig, pool_outcome

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvaluatedOutcome:
    review_id: str
    comparison: Comparison
    outcome: Outcome
    original: PooledOutcome
    published_mismatch: bool = False

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.review_id, self.comparison.comparison_id, self.outcome.outcome_id)


def _published_mismatch(outcome: Outcome, pooled: PooledOutcome) -> bool:
    if outcome.original_estimate is None:
        return False
    # published totals are rounded for display
    return not math.isclose(outcome.original_estimate, pooled.estimate,
                            rel_tol=1e-2, abs_tol=5e-3)


def evaluation_universe(corpus: Corpus, review_ids: Optional[Iterable[str]] = None
                        ) -> list[EvaluatedOutcome]:
    """Outcomes whose full-data pool is estimable, in corpus order.

    The recomputed full-data pool is the reference ("original") outcome.
    """
    ids = sorted(review_ids) if review_ids is not None else corpus.review_ids()
    universe = []
    for rid in ids:
        review: Review = corpus.reviews[rid]
        for comparison, outcome in review.iter_outcomes():
            pooled = pool_outcome(outcome)
            if not pooled.estimable:
                log.info("%s/%s/%s not estimable from full data; excluded", rid,
                         comparison.comparison_id, outcome.outcome_id)
                continue
            universe.append(EvaluatedOutcome(rid, comparison, outcome, pooled,
                                             _published_mismatch(outcome, pooled)))
    return universe


def reports_for_review(items: Iterable[EvaluatedOutcome], retrieved: Iterable[str],
                       corpus: Corpus, tol: ToleranceConfig = ToleranceConfig()
                       ) -> list[tuple[EvaluatedOutcome, PooledOutcome, AspectReport]]:
    """Re-pool every outcome of one review from the studies found in ``retrieved``."""
    items = list(items)
    if not items:
        return []
    found = studies_found(items[0].review_id, retrieved, corpus.mapping)
    out = []
    for item in items:
        predicted = pool_outcome(item.outcome, found)
        out.append((item, predicted,
                    aspect_report(item.original, predicted, item.outcome.effect_measure, tol)))
    return out


def by_review(universe: Iterable[EvaluatedOutcome]) -> dict[str, list[EvaluatedOutcome]]:
    grouped: dict[str, list[EvaluatedOutcome]] = {}
    for item in universe:
        grouped.setdefault(item.review_id, []).append(item)
    return grouped
