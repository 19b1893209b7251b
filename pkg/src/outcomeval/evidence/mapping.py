"""Study/publication mapping CSV and the study-found rule."""

from __future__ import annotations

import csv
import io
import logging
from typing import Iterable, Optional

from .types import ParseError, StudyPublicationMap

log = logging.getLogger(__name__)

MAPPING_COLUMNS = ("review_id", "study_id", "publication_id")


def parse_mapping(data: bytes, warnings: Optional[list[str]] = None) -> StudyPublicationMap:
    """Read a ``review_id,study_id,publication_id`` CSV.

    Duplicate triples are kept once; a message is appended to ``warnings``
    (when given) and logged for each duplicate.
    """
    try:
        text = data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"mapping is not valid UTF-8: {exc}") from None
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [c for c in MAPPING_COLUMNS if c not in header]
    if missing:
        raise ParseError(f"mapping CSV missing column(s): {', '.join(missing)}", line=1)
    reader.fieldnames = header

    entries: set[tuple[str, str, str]] = set()
    rows = 0
    for lineno, record in enumerate(reader, start=2):
        triple = tuple((record.get(c) or "").strip() for c in MAPPING_COLUMNS)
        if not any(triple):
            continue
        if not all(triple):
            raise ParseError(f"line {lineno}: empty field in mapping row", line=lineno)
        rows += 1
        if triple in entries:
            message = f"line {lineno}: duplicate mapping row {','.join(triple)}"
            log.warning(message)
            if warnings is not None:
                warnings.append(message)
            continue
        entries.add(triple)  # type: ignore[arg-type]
    log.debug("mapping: %d rows, %d unique", rows, len(entries))
    return StudyPublicationMap(frozenset(entries))


def emit_mapping(mapping: StudyPublicationMap) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(MAPPING_COLUMNS)
    writer.writerows(sorted(mapping.entries))
    return buf.getvalue().encode("utf-8")


def studies_found(review_id: str, retrieved: Iterable[str],
                  mapping: StudyPublicationMap) -> set[str]:
    """Studies with at least one publication among ``retrieved``."""
    retrieved = set(retrieved)
    return {study for study, pubs in mapping.study_links(review_id).items()
            if not pubs.isdisjoint(retrieved)}
