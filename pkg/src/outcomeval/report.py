"""Report rows and their CSV/JSON serialization."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from .aspects import AggregateTable
from .experiments.pareto import ParetoPoint
from .experiments.runs import RunEvaluation
from .experiments.simulation import SimulationTable

OUTCOME_FIELDS = ("row_type", "run_tag", "review_id", "comparison_id", "outcome_id", "cutoff",
                  "effect_measure", "model", "original", "predicted", "mod", "delta_ci",
                  "estimate_class", "sign_match", "estimable", "published_mismatch")
AGGREGATE_FIELDS = ("mean_mod", "mean_delta_ci", "n_equal", "n_over", "n_under",
                    "n_same_sign", "n_diff_sign", "n_reported", "n_missing", "n_total")
RUN_FILE_FIELDS = OUTCOME_FIELDS + AGGREGATE_FIELDS


def write_atomic(path, data: bytes) -> Path:
    """Write via a temporary file in the same directory, then rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return repr(value)
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def to_csv(rows: Iterable[Mapping], fieldnames: Sequence[str]) -> bytes:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames), lineterminator="\n",
                            extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _cell(row.get(k)) for k in fieldnames})
    return buf.getvalue().encode("utf-8")


def _json_default(value):
    if hasattr(value, "value"):
        return value.value
    raise TypeError(f"cannot serialise {type(value).__name__}")


def _json_clean(value):
    if isinstance(value, float) and not math.isfinite(value):
        return None
    if isinstance(value, dict):
        return {str(k): _json_clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_clean(v) for v in value]
    return value


def to_json(obj) -> bytes:
    return (json.dumps(_json_clean(obj), indent=2, default=_json_default) + "\n").encode("utf-8")


def read_csv(data: bytes) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(data.decode("utf-8"))))


def _aggregate_row(run_tag: str, cutoff, table: AggregateTable) -> dict:
    row = {"row_type": "aggregate", "run_tag": run_tag, "cutoff": cutoff}
    row.update(table.as_dict())
    return row


def run_rows(evaluation: RunEvaluation) -> list[dict]:
    """Per-outcome rows for every cutoff followed by one aggregate row per cutoff."""
    rows = []
    for k in evaluation.cutoffs:
        for res in evaluation.results[k]:
            item, report = res.item, res.report
            rows.append({
                "row_type": "outcome", "run_tag": evaluation.run_tag,
                "review_id": item.review_id, "comparison_id": item.comparison.comparison_id,
                "outcome_id": item.outcome.outcome_id, "cutoff": k,
                "effect_measure": item.outcome.effect_measure, "model": item.outcome.model,
                "original": item.original.estimate,
                "predicted": res.predicted.estimate if res.predicted.estimable else None,
                "mod": report.mod, "delta_ci": report.delta_ci,
                "estimate_class": report.estimate_class, "sign_match": report.sign_match,
                "estimable": report.estimable, "published_mismatch": item.published_mismatch,
            })
    for k in evaluation.cutoffs:
        rows.append(_aggregate_row(evaluation.run_tag, k, evaluation.aggregates[k]))
    return rows


def topic_rows(evaluation: RunEvaluation) -> list[dict]:
    rows = []
    for t in evaluation.topics:
        row = {"run_tag": evaluation.run_tag, "topic_id": t.topic_id, "n_docs": t.n_docs,
               "n_relevant": t.n_relevant, "n_unjudged": t.n_unjudged, "ap": t.ap,
               "last_rel": t.last_rel_rank, "aurc": t.aurc}
        row.update({f"recall@{_num(k)}": v for k, v in t.recall_at.items()})
        row.update({f"ndcg@{_num(k)}": v for k, v in t.ndcg_at.items()})
        row.update({f"wss@{_num(r * 100)}": v for r, v in t.wss.items()})
        rows.append(row)
    return rows


SIMULATION_ROWS = (
    ("mean relative difference (%)", "mean_mod", 100.0),
    ("mean distance from CI", "mean_delta_ci", 1.0),
    ("equal outcome", "n_equal", 1.0),
    ("different", "n_different", 1.0),
    ("underestimated", "n_under", 1.0),
    ("overestimated", "n_over", 1.0),
    ("same sign", "n_same_sign", 1.0),
    ("different sign", "n_diff_sign", 1.0),
    ("reported outcomes", "n_reported", 1.0),
    ("missing outcomes", "n_missing", 1.0),
    ("publication recall", "pub_recall", 1.0),
    ("study recall", "study_recall", 1.0),
)


def simulation_matrix(table: SimulationTable) -> tuple[list[str], list[dict]]:
    """Aspect rows by removal-count columns (seed means), gold column first."""
    columns = ["gold"] + [str(c.removal_count) for c in table.columns]
    gold = table.gold.as_dict()
    gold.update(n_different=table.gold.n_different, pub_recall=1.0, study_recall=1.0)
    means = []
    for col in table.columns:
        m = col.mean()
        m["n_different"] = m["n_over"] + m["n_under"]
        means.append(m)
    rows = []
    for label, key, scale in SIMULATION_ROWS:
        row = {"aspect": label, "gold": gold[key] * scale}
        for name, m in zip(columns[1:], means):
            row[name] = m[key] * scale
        rows.append(row)
    return ["aspect"] + columns, rows


def simulation_seed_rows(table: SimulationTable) -> list[dict]:
    rows = []
    for col in table.columns:
        for seed, (agg, pr, sr) in enumerate(zip(col.per_seed, col.pub_recall,
                                                  col.study_recall)):
            row = {"removal_count": col.removal_count, "seed": seed,
                   "pub_recall": pr, "study_recall": sr}
            row.update(agg.as_dict())
            rows.append(row)
    return rows


SIMULATION_SEED_FIELDS = ("removal_count", "seed") + AGGREGATE_FIELDS + ("pub_recall",
                                                                        "study_recall")

PARETO_FIELDS = ("run_tag", "x", "y_raw", "y", "dominated")


def pareto_rows(points: Sequence[ParetoPoint]) -> list[dict]:
    return [{"run_tag": p.run_tag, "x": p.x, "y_raw": p.y_raw, "y": p.y,
             "dominated": p.dominated} for p in points]


def read_pareto_points(data: bytes) -> list[tuple[str, float, float]]:
    """Read ``run_tag,x,y_raw`` rows (extra columns ignored)."""
    rows = read_csv(data)
    if rows and not {"run_tag", "x", "y_raw"} <= set(rows[0]):
        raise ValueError("pareto points CSV needs columns run_tag,x,y_raw")
    return [(r["run_tag"], float(r["x"]), float(r["y_raw"])) for r in rows]


def _num(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else f"{value:g}"
