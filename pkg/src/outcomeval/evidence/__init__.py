"""Review data model and ingestion."""

from .corpus import Corpus, load_corpus, load_reviews
from .mapping import emit_mapping, parse_mapping, studies_found
from .revman import emit_json, emit_review_xml, parse_review_file, parse_review_json, parse_review_xml
from .trec import emit_qrels, emit_run, parse_qrels, parse_run
from .types import (
    Comparison, ContinuousArms, DataKind, DichotomousArms, EffectMeasure, EvidenceError,
    Model, Outcome, ParseError, Pooling, Qrels, RankedDoc, Review, RunRanking, StudyPublicationMap,
    StudyRow, Subgroup, ValidationError,
)

__all__ = [
    "Comparison", "ContinuousArms", "Corpus", "DataKind", "DichotomousArms", "EffectMeasure",
    "EvidenceError", "Model", "Outcome", "ParseError", "Pooling", "Qrels", "RankedDoc",
    "Review", "RunRanking", "StudyPublicationMap", "StudyRow", "Subgroup", "ValidationError",
    "emit_json", "emit_mapping", "emit_review_xml", "emit_qrels", "emit_run", "load_corpus", "load_reviews",
    "parse_mapping", "parse_qrels", "parse_review_file", "parse_review_json",
    "parse_review_xml", "parse_run", "studies_found",
]
