"""Rank-based screening measures (MAP, recall and nDCG at a percentage of the
collection, WSS, last relevant found, area under the recall curve).

Every function takes the ranked list of publication ids for one topic and the
set of relevant ids.  Documents without a judgment count as non-relevant, and
``R`` is the number of relevant documents in the judgments, retrieved or not.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence

from .evidence.types import Qrels

log = logging.getLogger(__name__)

DEFAULT_RECALL_PERCENTS = (5, 10, 20, 30, 50)
DEFAULT_NDCG_PERCENTS = (20,)
DEFAULT_WSS_TARGETS = (0.95, 1.0)


def cutoff_at_percent(n_docs: int, k_percent: float) -> int:
    if not 0 < k_percent <= 100:
        raise ValueError(f"percent must lie in (0, 100], got {k_percent}")
    if n_docs < 1:
        raise ValueError("n_docs must be >= 1")
    # integer arithmetic where possible so 30% of 100 is exactly 30
    if float(k_percent).is_integer():
        return max(1, -(-int(k_percent) * n_docs // 100))
    return max(1, math.ceil(k_percent * n_docs / 100))


def _relevant_ranks(ranking: Sequence[str], relevant: set) -> list[int]:
    return [i for i, doc in enumerate(ranking, start=1) if doc in relevant]


def average_precision(ranking: Sequence[str], relevant: Iterable[str]) -> float:
    relevant = set(relevant)
    if not relevant:
        raise ValueError("average precision is undefined without relevant documents")
    ranks = _relevant_ranks(ranking, relevant)
    # exact rational sum, so the result is the correctly rounded value
    return float(sum(Fraction(i + 1, r) for i, r in enumerate(ranks)) / len(relevant))


def map_over_topics(values: Iterable[Optional[float]]) -> float:
    """Unweighted mean over topics; ``None`` entries (R = 0) are skipped."""
    kept = [v for v in values if v is not None]
    return math.fsum(kept) / len(kept) if kept else 0.0


def recall_at_percent(ranking: Sequence[str], relevant: Iterable[str], k: float) -> float:
    relevant = set(relevant)
    if not relevant:
        raise ValueError("recall is undefined without relevant documents")
    if not ranking:
        return 0.0
    top = ranking[:cutoff_at_percent(len(ranking), k)]
    return sum(doc in relevant for doc in top) / len(relevant)


def ndcg_at_percent(ranking: Sequence[str], relevant: Iterable[str], k: float) -> float:
    relevant = set(relevant)
    if not relevant:
        raise ValueError("nDCG is undefined without relevant documents")
    if not ranking:
        return 0.0
    cutoff = cutoff_at_percent(len(ranking), k)
    dcg = math.fsum(1.0 / math.log2(i + 1)
                    for i, doc in enumerate(ranking[:cutoff], start=1) if doc in relevant)
    ideal = math.fsum(1.0 / math.log2(i + 1) for i in range(1, min(len(relevant), cutoff) + 1))
    return dcg / ideal


def wss_at_recall(ranking: Sequence[str], relevant: Iterable[str], r: float = 0.95) -> float:
    """Work saved over sampling at recall target ``r``.

    If the ranking never reaches the target (relevant documents missing from
    the run) the whole list must be screened, i.e. rank* = N.
    """
    relevant = set(relevant)
    if not relevant:
        raise ValueError("WSS is undefined without relevant documents")
    n = len(ranking)
    if n == 0:
        return -(1 - r)
    needed = math.ceil(r * len(relevant) - 1e-9)
    found = 0
    rank_star = n
    for i, doc in enumerate(ranking, start=1):
        if doc in relevant:
            found += 1
            if found >= needed:
                rank_star = i
                break
    return (n - rank_star) / n - (1 - r)


def last_relevant_rank(ranking: Sequence[str], relevant: Iterable[str]) -> Optional[int]:
    ranks = _relevant_ranks(ranking, set(relevant))
    return ranks[-1] if ranks else None


def aurc(ranking: Sequence[str], relevant: Iterable[str]) -> float:
    """Mean of the recall step curve over ranks 1..N."""
    relevant = set(relevant)
    if not relevant:
        raise ValueError("AURC is undefined without relevant documents")
    if not ranking:
        return 0.0
    found = 0
    total = 0
    for doc in ranking:
        found += doc in relevant
        total += found
    return total / (len(relevant) * len(ranking))


@dataclass(frozen=True)
class TopicEvaluation:
    topic_id: str
    n_docs: int
    n_relevant: int
    ap: float
    recall_at: Mapping[float, float] = field(default_factory=dict)
    ndcg_at: Mapping[float, float] = field(default_factory=dict)
    wss: Mapping[float, float] = field(default_factory=dict)
    last_rel_rank: Optional[int] = None
    aurc: float = 0.0
    n_unjudged: int = 0


def evaluate_topic(topic_id: str, ranking: Sequence[str], qrels: Qrels,
                   recall_percents=DEFAULT_RECALL_PERCENTS,
                   ndcg_percents=DEFAULT_NDCG_PERCENTS,
                   wss_targets=DEFAULT_WSS_TARGETS) -> Optional[TopicEvaluation]:
    """All measures for one topic, or None when the topic has no relevant documents."""
    relevant = qrels.relevant(topic_id)
    if not relevant:
        log.info("topic %s has no relevant documents; skipped", topic_id)
        return None
    judged = qrels.judged(topic_id)
    return TopicEvaluation(
        topic_id=topic_id,
        n_docs=len(ranking),
        n_relevant=len(relevant),
        ap=average_precision(ranking, relevant),
        recall_at={k: recall_at_percent(ranking, relevant, k) for k in recall_percents},
        ndcg_at={k: ndcg_at_percent(ranking, relevant, k) for k in ndcg_percents},
        wss={r: wss_at_recall(ranking, relevant, r) for r in wss_targets},
        last_rel_rank=last_relevant_rank(ranking, relevant),
        aurc=aurc(ranking, relevant),
        n_unjudged=sum(doc not in judged for doc in ranking),
    )


def mean_measures(topics: Iterable[TopicEvaluation]) -> dict[str, float]:
    """Per-measure means across topics, keyed like ``recall@20``/``wss@95``."""
    topics = list(topics)
    if not topics:
        return {}
    out: dict[str, float] = {"map": map_over_topics(t.ap for t in topics)}
    for k in topics[0].recall_at:
        out[f"recall@{_fmt(k)}"] = math.fsum(t.recall_at[k] for t in topics) / len(topics)
    for k in topics[0].ndcg_at:
        out[f"ndcg@{_fmt(k)}"] = math.fsum(t.ndcg_at[k] for t in topics) / len(topics)
    for r in topics[0].wss:
        out[f"wss@{_fmt(r * 100)}"] = math.fsum(t.wss[r] for t in topics) / len(topics)
    # a topic whose relevant documents were never retrieved counts as fully screened
    last = [t.last_rel_rank or t.n_docs for t in topics]
    out["last_rel"] = math.fsum(last) / len(topics)
    out["last_rel_frac"] = math.fsum(r / max(t.n_docs, 1)
                                     for r, t in zip(last, topics)) / len(topics)
    out["aurc"] = math.fsum(t.aurc for t in topics) / len(topics)
    return out


def _fmt(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:g}"
