"""Immutable domain types for review statistical data and retrieval inputs."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union


class EvidenceError(ValueError):
    """Base class for ingestion failures."""


class ParseError(EvidenceError):
    """Input could not be parsed.

    ``offset`` is a byte offset for XML input, ``line`` a 1-based line number
    for line-oriented formats, ``path`` a JSON path for JSON input.
    """

    def __init__(self, message: str, *, offset: int | None = None,
                 line: int | None = None, path: str | None = None):
        super().__init__(message)
        self.offset = offset
        self.line = line
        self.path = path


class ValidationError(EvidenceError):
    """Input parsed but violates a structural invariant."""

    def __init__(self, message: str, *, path: str | None = None):
        super().__init__(message)
        self.path = path


class DataKind(str, enum.Enum):
    DICHOTOMOUS = "dichotomous"
    CONTINUOUS = "continuous"


class EffectMeasure(str, enum.Enum):
    RR = "RR"
    OR = "OR"
    RD = "RD"
    MD = "MD"
    SMD = "SMD"

    @property
    def is_ratio(self) -> bool:
        return self in (EffectMeasure.RR, EffectMeasure.OR)

    @property
    def null_value(self) -> float:
        return 1.0 if self.is_ratio else 0.0


class Pooling(str, enum.Enum):
    MANTEL_HAENSZEL = "MH"
    INVERSE_VARIANCE = "IV"


class Model(str, enum.Enum):
    FIXED = "fixed"
    RANDOM = "random"


DICHOTOMOUS_MEASURES = frozenset({EffectMeasure.RR, EffectMeasure.OR, EffectMeasure.RD})
CONTINUOUS_MEASURES = frozenset({EffectMeasure.MD, EffectMeasure.SMD})


@dataclass(frozen=True)
class DichotomousArms:
    events_exp: int
    total_exp: int
    events_ctrl: int
    total_ctrl: int

    def __post_init__(self):
        for name in ("events_exp", "total_exp", "events_ctrl", "total_ctrl"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"{name} must be an integer, got {value!r}")
            if value < 0:
                raise ValidationError(f"{name} must be >= 0, got {value}")
        if self.events_exp > self.total_exp:
            raise ValidationError(
                f"events_exp ({self.events_exp}) exceeds total_exp ({self.total_exp})")
        if self.events_ctrl > self.total_ctrl:
            raise ValidationError(
                f"events_ctrl ({self.events_ctrl}) exceeds total_ctrl ({self.total_ctrl})")

    def swapped(self) -> "DichotomousArms":
        return DichotomousArms(self.events_ctrl, self.total_ctrl, self.events_exp, self.total_exp)


@dataclass(frozen=True)
class ContinuousArms:
    n_exp: int
    mean_exp: float
    sd_exp: float
    n_ctrl: int
    mean_ctrl: float
    sd_ctrl: float

    def __post_init__(self):
        for name in ("n_exp", "n_ctrl"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int):
                raise ValidationError(f"{name} must be an integer, got {value!r}")
            if value < 0:
                raise ValidationError(f"{name} must be >= 0, got {value}")
        for name in ("mean_exp", "sd_exp", "mean_ctrl", "sd_ctrl"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ValidationError(f"{name} must be a number, got {value!r}")
            if value != value or value in (float("inf"), float("-inf")):
                raise ValidationError(f"{name} must be finite, got {value!r}")
        if self.sd_exp < 0 or self.sd_ctrl < 0:
            raise ValidationError("standard deviations must be >= 0")

    def swapped(self) -> "ContinuousArms":
        return ContinuousArms(self.n_ctrl, self.mean_ctrl, self.sd_ctrl,
                              self.n_exp, self.mean_exp, self.sd_exp)


Arms = Union[DichotomousArms, ContinuousArms]


@dataclass(frozen=True)
class StudyRow:
    study_id: str
    data: Arms

    def __post_init__(self):
        if not self.study_id:
            raise ValidationError("study row with empty study_id")


@dataclass(frozen=True)
class Subgroup:
    subgroup_id: str
    name: str
    rows: tuple[StudyRow, ...] = ()


@dataclass(frozen=True)
class Outcome:
    outcome_id: str
    name: str
    data_kind: DataKind
    effect_measure: EffectMeasure
    pooling: Pooling
    model: Model = Model.FIXED
    ci_level: float = 0.95
    subgroups: tuple[Subgroup, ...] = ()
    original_estimate: Optional[float] = None
    original_ci: Optional[tuple[float, float]] = None

    def __post_init__(self):
        if self.data_kind is DataKind.DICHOTOMOUS:
            if self.effect_measure not in DICHOTOMOUS_MEASURES:
                raise ValidationError(
                    f"outcome {self.outcome_id}: {self.effect_measure.value} "
                    "is not a dichotomous measure")
            arm_type: type = DichotomousArms
        else:
            if self.effect_measure not in CONTINUOUS_MEASURES:
                raise ValidationError(
                    f"outcome {self.outcome_id}: {self.effect_measure.value} "
                    "is not a continuous measure")
            if self.pooling is Pooling.MANTEL_HAENSZEL:
                raise ValidationError(
                    f"outcome {self.outcome_id}: Mantel-Haenszel requires dichotomous data")
            arm_type = ContinuousArms
        if not 0.0 < self.ci_level < 1.0:
            raise ValidationError(f"outcome {self.outcome_id}: ci_level must lie in (0, 1)")
        for sg in self.subgroups:
            for row in sg.rows:
                if not isinstance(row.data, arm_type):
                    raise ValidationError(
                        f"outcome {self.outcome_id}: row {row.study_id} has "
                        f"{type(row.data).__name__}, expected {arm_type.__name__}")
        if self.original_ci is not None:
            low, high = self.original_ci
            if low > high:
                raise ValidationError(f"outcome {self.outcome_id}: original CI low > high")
            if self.original_estimate is not None and not low <= self.original_estimate <= high:
                raise ValidationError(
                    f"outcome {self.outcome_id}: original estimate outside original CI")

    @property
    def rows(self) -> tuple[StudyRow, ...]:
        return tuple(row for sg in self.subgroups for row in sg.rows)

    @property
    def study_ids(self) -> frozenset[str]:
        return frozenset(row.study_id for row in self.rows)


@dataclass(frozen=True)
class Comparison:
    comparison_id: str
    name: str
    outcomes: tuple[Outcome, ...] = ()

    def __post_init__(self):
        _require_unique((o.outcome_id for o in self.outcomes),
                        f"comparison {self.comparison_id}: duplicate outcome id")


@dataclass(frozen=True)
class Review:
    review_id: str
    comparisons: tuple[Comparison, ...] = ()
    skipped_outcomes: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.review_id:
            raise ValidationError("review_id must be non-empty")
        _require_unique((c.comparison_id for c in self.comparisons),
                        f"review {self.review_id}: duplicate comparison id")

    def iter_outcomes(self) -> Iterable[tuple[Comparison, Outcome]]:
        for comparison in self.comparisons:
            for outcome in comparison.outcomes:
                yield comparison, outcome

    @property
    def study_ids(self) -> frozenset[str]:
        return frozenset(s for _, o in self.iter_outcomes() for s in o.study_ids)


@dataclass(frozen=True)
class StudyPublicationMap:
    """Many-to-many study/publication links, keyed by review."""

    entries: frozenset[tuple[str, str, str]] = frozenset()
    _by_study: Mapping[tuple[str, str], frozenset[str]] = field(
        init=False, repr=False, compare=False)

    def __post_init__(self):
        by_study: dict[tuple[str, str], set[str]] = {}
        for review_id, study_id, pub_id in self.entries:
            by_study.setdefault((review_id, study_id), set()).add(pub_id)
        object.__setattr__(self, "_by_study",
                           {k: frozenset(v) for k, v in by_study.items()})

    def publications_of(self, review_id: str, study_id: str) -> frozenset[str]:
        return self._by_study.get((review_id, study_id), frozenset())

    def studies(self, review_id: str) -> frozenset[str]:
        return frozenset(s for (r, s) in self._by_study if r == review_id)

    def publications(self, review_id: str) -> frozenset[str]:
        return frozenset(p for (r, _, p) in self.entries if r == review_id)

    def review_ids(self) -> frozenset[str]:
        return frozenset(r for r, _, _ in self.entries)

    def study_links(self, review_id: str) -> dict[str, frozenset[str]]:
        return {s: pubs for (r, s), pubs in self._by_study.items() if r == review_id}


@dataclass(frozen=True)
class Qrels:
    judgments: Mapping[tuple[str, str], int] = field(default_factory=dict)

    def topics(self) -> list[str]:
        return sorted({t for t, _ in self.judgments})

    def judged(self, topic_id: str) -> frozenset[str]:
        return frozenset(d for (t, d) in self.judgments if t == topic_id)

    def relevant(self, topic_id: str) -> frozenset[str]:
        return frozenset(d for (t, d), g in self.judgments.items() if t == topic_id and g > 0)

    def grade(self, topic_id: str, doc_id: str) -> int:
        return self.judgments.get((topic_id, doc_id), 0)


@dataclass(frozen=True)
class RankedDoc:
    publication_id: str
    rank: int
    score: float


@dataclass(frozen=True)
class RunRanking:
    tag: str
    topics: Mapping[str, tuple[RankedDoc, ...]] = field(default_factory=dict)

    def ranking(self, topic_id: str) -> list[str]:
        return [d.publication_id for d in self.topics.get(topic_id, ())]

    @classmethod
    def from_ordered(cls, tag: str, lists: Mapping[str, list[str]]) -> "RunRanking":
        """Build a run from already ordered publication lists (scores descend)."""
        topics = {}
        for topic, docs in lists.items():
            n = len(docs)
            topics[topic] = tuple(RankedDoc(doc, i + 1, float(n - i)) for i, doc in enumerate(docs))
        return cls(tag, topics)


def _require_unique(ids: Iterable[str], message: str) -> None:
    seen: set[str] = set()
    for ident in ids:
        if ident in seen:
            raise ValidationError(f"{message} {ident!r}")
        seen.add(ident)
