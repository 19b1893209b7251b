"""Loading a corpus directory: review files plus mapping and qrels."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Optional

from .mapping import parse_mapping
from .revman import parse_review_file
from .trec import parse_qrels
from .types import EvidenceError, Qrels, Review, StudyPublicationMap

log = logging.getLogger(__name__)

REVIEW_SUFFIXES = (".xml", ".rm5", ".json")


@dataclass(frozen=True)
class Corpus:
    reviews: Mapping[str, Review]
    mapping: StudyPublicationMap = StudyPublicationMap()
    qrels: Optional[Qrels] = None
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def review_ids(self) -> list[str]:
        return sorted(self.reviews)


def review_dir(root: Path) -> Path:
    root = Path(root)
    return root / "reviews" if (root / "reviews").is_dir() else root


def review_files(root: Path) -> list[Path]:
    directory = review_dir(root)
    return sorted(p for p in directory.iterdir()
                  if p.is_file() and p.suffix.lower() in REVIEW_SUFFIXES)


def default_mapping_path(root: Path) -> Path:
    return Path(root) / "mapping.csv"


def default_qrels_path(root: Path, level: str = "fulltext") -> Path:
    return Path(root) / f"qrels_{level}.txt"


def load_reviews(root: Path) -> dict[str, Review]:
    reviews: dict[str, Review] = {}
    for path in review_files(root):
        review = parse_review_file(path)
        if review.review_id in reviews:
            raise EvidenceError(f"{path.name}: duplicate review id {review.review_id}")
        reviews[review.review_id] = review
    return reviews


def load_corpus(root, mapping_path=None, qrels_path=None, level: str = "fulltext") -> Corpus:
    """Load reviews under ``root`` (or ``root/reviews``) with mapping and qrels.

    Mapping and qrels default to ``mapping.csv`` and ``qrels_<level>.txt`` in
    ``root``; a missing default qrels file is tolerated, a missing mapping is not.
    """
    root = Path(root)
    if not root.is_dir():
        raise EvidenceError(f"corpus directory {root} does not exist")
    reviews = load_reviews(root)
    warnings: list[str] = []
    mapping_path = Path(mapping_path) if mapping_path else default_mapping_path(root)
    if not mapping_path.is_file():
        raise EvidenceError(f"mapping file {mapping_path} not found")
    mapping = parse_mapping(mapping_path.read_bytes(), warnings)

    qrels = None
    if qrels_path:
        qrels = parse_qrels(Path(qrels_path).read_bytes())
    elif default_qrels_path(root, level).is_file():
        qrels = parse_qrels(default_qrels_path(root, level).read_bytes())
    return Corpus(reviews, mapping, qrels, tuple(warnings))
