"""TREC-style qrels and run files."""

from __future__ import annotations

from .types import ParseError, Qrels, RankedDoc, RunRanking


def _lines(data: bytes):
    text = data.decode("utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            yield lineno, stripped.split()


def parse_qrels(data: bytes) -> Qrels:
    """``topic iteration publication_id grade`` per line."""
    judgments: dict[tuple[str, str], int] = {}
    for lineno, parts in _lines(data):
        if len(parts) != 4:
            raise ParseError(f"qrels line {lineno}: expected 4 fields, got {len(parts)}",
                             line=lineno)
        topic, _, doc, grade = parts
        try:
            value = int(grade)
        except ValueError:
            raise ParseError(f"qrels line {lineno}: grade {grade!r} is not an integer",
                             line=lineno) from None
        if value < 0:
            # some collections mark unjudged with -1
            value = 0
        if (topic, doc) in judgments and judgments[(topic, doc)] != value:
            raise ParseError(f"qrels line {lineno}: conflicting grade for {topic}/{doc}",
                             line=lineno)
        judgments[(topic, doc)] = value
    return Qrels(judgments)


def parse_run(data: bytes) -> RunRanking:
    """Parse ``topic Q0 publication_id rank score tag`` lines.

    Ranks in the file are only validated as numbers; the output is re-ranked
    1..n per topic by descending score, ties broken by ascending publication id.
    Repeated (topic, publication) pairs keep their first occurrence.
    """
    per_topic: dict[str, dict[str, float]] = {}
    tag = ""
    for lineno, parts in _lines(data):
        if len(parts) != 6:
            raise ParseError(f"run line {lineno}: expected 6 fields, got {len(parts)}",
                             line=lineno)
        topic, _, doc, rank, score, run_tag = parts
        try:
            int(rank)
        except ValueError:
            raise ParseError(f"run line {lineno}: rank {rank!r} is not an integer",
                             line=lineno) from None
        try:
            value = float(score)
        except ValueError:
            raise ParseError(f"run line {lineno}: score {score!r} is not numeric",
                             line=lineno) from None
        if value != value:
            raise ParseError(f"run line {lineno}: score is NaN", line=lineno)
        tag = tag or run_tag
        per_topic.setdefault(topic, {}).setdefault(doc, value)

    topics = {}
    for topic in sorted(per_topic):
        ordered = sorted(per_topic[topic].items(), key=lambda kv: (-kv[1], kv[0]))
        topics[topic] = tuple(RankedDoc(doc, i, score)
                              for i, (doc, score) in enumerate(ordered, start=1))
    return RunRanking(tag, topics)


def emit_run(run: RunRanking) -> bytes:
    lines = []
    for topic in sorted(run.topics):
        for doc in run.topics[topic]:
            lines.append(f"{topic} Q0 {doc.publication_id} {doc.rank} {doc.score!r} {run.tag}")
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""


def emit_qrels(qrels: Qrels) -> bytes:
    lines = [f"{t} 0 {d} {g}" for (t, d), g in sorted(qrels.judgments.items())]
    return ("\n".join(lines) + "\n").encode("utf-8") if lines else b""
