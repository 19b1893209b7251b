"""Readers and writers for review statistical data.

Two formats are supported: a subset of RevMan 5 XML (the ``ANALYSES_AND_DATA``
payload) and a canonical JSON document.  Both produce the same
:class:`~outcomeval.evidence.types.Review`.
"""

from __future__ import annotations

import json
import re
import xml.etree.ElementTree as ET
from typing import Any, Optional

import jsonschema

from .types import (
    ContinuousArms, Comparison, DataKind, DichotomousArms, EffectMeasure,
    EvidenceError, Model, Outcome, ParseError, Pooling, Review, StudyRow,
    Subgroup, ValidationError,
)

_SUPPORTED_TAGS = {
    "DICH_OUTCOME": (DataKind.DICHOTOMOUS, "DICH_SUBGROUP", "DICH_DATA"),
    "CONT_OUTCOME": (DataKind.CONTINUOUS, "CONT_SUBGROUP", "CONT_DATA"),
}
_METHODS = {"MH": Pooling.MANTEL_HAENSZEL, "IV": Pooling.INVERSE_VARIANCE}
_CD_RE = re.compile(r"(CD\d+)")


def _byte_offset(data: bytes, line: int, column: int) -> int:
    lines = data.split(b"\n")
    return sum(len(chunk) + 1 for chunk in lines[: max(line - 1, 0)]) + column


def _name_of(elem: ET.Element) -> str:
    name = elem.find("NAME")
    return (name.text or "").strip() if name is not None else ""


def _int_attr(elem: ET.Element, key: str, where: str) -> int:
    raw = elem.get(key)
    if raw is None:
        raise ValidationError(f"{where}: missing attribute {key}")
    try:
        value = float(raw)
    except ValueError:
        raise ValidationError(f"{where}: attribute {key}={raw!r} is not numeric") from None
    if value != int(value):
        raise ValidationError(f"{where}: attribute {key}={raw!r} is not a whole number")
    return int(value)


def _float_attr(elem: ET.Element, key: str, where: str) -> float:
    raw = elem.get(key)
    if raw is None:
        raise ValidationError(f"{where}: missing attribute {key}")
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(f"{where}: attribute {key}={raw!r} is not numeric") from None


def _optional_float(elem: ET.Element, key: str) -> Optional[float]:
    raw = elem.get(key)
    if raw in (None, ""):
        return None
    try:
        return float(raw)
    except ValueError:
        return None


def _xml_row(elem: ET.Element, kind: DataKind, where: str) -> StudyRow:
    study_id = (elem.get("STUDY_ID") or "").strip()
    where = f"{where} row {study_id or '?'}"
    if not study_id:
        raise ValidationError(f"{where}: missing STUDY_ID")
    try:
        if kind is DataKind.DICHOTOMOUS:
            data: Any = DichotomousArms(
                _int_attr(elem, "EVENTS_1", where), _int_attr(elem, "TOTAL_1", where),
                _int_attr(elem, "EVENTS_2", where), _int_attr(elem, "TOTAL_2", where))
        else:
            data = ContinuousArms(
                _int_attr(elem, "TOTAL_1", where), _float_attr(elem, "MEAN_1", where),
                _float_attr(elem, "SD_1", where), _int_attr(elem, "TOTAL_2", where),
                _float_attr(elem, "MEAN_2", where), _float_attr(elem, "SD_2", where))
    except ValidationError as exc:
        if str(exc).startswith(where):
            raise
        raise ValidationError(f"{where}: {exc}") from None
    return StudyRow(study_id, data)


def _xml_outcome(elem: ET.Element, kind: DataKind, sub_tag: str, data_tag: str,
                 where: str) -> Optional[Outcome]:
    outcome_id = elem.get("ID") or elem.get("NO") or ""
    where = f"{where} outcome {outcome_id}"
    measure_raw = (elem.get("EFFECT_MEASURE") or "").upper()
    method_raw = (elem.get("METHOD") or ("MH" if kind is DataKind.DICHOTOMOUS else "IV")).upper()
    if measure_raw not in EffectMeasure.__members__ or method_raw not in _METHODS:
        return None
    measure = EffectMeasure(measure_raw)
    model = Model.RANDOM if (elem.get("RANDOM") or "NO").upper() == "YES" else Model.FIXED
    ci_raw = _optional_float(elem, "CI_TOTAL")
    ci_level = ci_raw / 100.0 if ci_raw is not None else 0.95

    subgroups = []
    direct = [_xml_row(r, kind, where) for r in elem.findall(data_tag)]
    if direct:
        subgroups.append(Subgroup(outcome_id, "", tuple(direct)))
    for sg in elem.findall(sub_tag):
        sg_id = sg.get("ID") or sg.get("NO") or ""
        rows = tuple(_xml_row(r, kind, f"{where} subgroup {sg_id}") for r in sg.findall(data_tag))
        subgroups.append(Subgroup(sg_id, _name_of(sg), rows))

    estimate = _optional_float(elem, "EFFECT_SIZE")
    low, high = _optional_float(elem, "CI_START"), _optional_float(elem, "CI_END")
    original_ci = (low, high) if low is not None and high is not None else None
    try:
        return Outcome(outcome_id, _name_of(elem), kind, measure, _METHODS[method_raw],
                       model, ci_level, tuple(subgroups), estimate, original_ci)
    except ValidationError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def parse_review_xml(data: bytes, fallback_id: str | None = None) -> Review:
    """Parse the supported RevMan 5 subset.

    Outcome elements other than ``DICH_OUTCOME``/``CONT_OUTCOME`` (and
    dichotomous/continuous outcomes with unsupported measures such as Peto OR)
    are not parsed; their ids end up in ``Review.skipped_outcomes``.
    """
    try:
        root = ET.fromstring(data)
    except ET.ParseError as exc:
        line, column = exc.position
        offset = _byte_offset(data, line, column)
        raise ParseError(f"malformed XML at byte {offset}: {exc}", offset=offset,
                         line=line) from None

    rid = root.get("REVIEW_ID") or root.get("ID")
    if not rid:
        match = _CD_RE.search(root.get("DOI") or "")
        rid = match.group(1) if match else fallback_id
    if not rid:
        raise ValidationError("review id not found in XML and none given")

    comparisons = []
    skipped = []
    for cmp_elem in root.iter("COMPARISON"):
        cmp_id = cmp_elem.get("ID") or cmp_elem.get("NO") or ""
        outcomes = []
        for child in cmp_elem:
            if not child.tag.endswith("_OUTCOME"):
                continue
            if child.tag not in _SUPPORTED_TAGS:
                skipped.append(child.get("ID") or child.get("NO") or "")
                continue
            kind, sub_tag, data_tag = _SUPPORTED_TAGS[child.tag]
            outcome = _xml_outcome(child, kind, sub_tag, data_tag, f"comparison {cmp_id}")
            if outcome is None:
                skipped.append(child.get("ID") or child.get("NO") or "")
            else:
                outcomes.append(outcome)
        comparisons.append(Comparison(cmp_id, _name_of(cmp_elem), tuple(outcomes)))
    return Review(rid, tuple(comparisons), tuple(skipped))


_ARM_NUMBER = {"type": "number"}
_COUNT = {"type": "integer", "minimum": 0}

REVIEW_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["review_id", "comparisons"],
    "properties": {
        "review_id": {"type": "string", "minLength": 1},
        "skipped_outcomes": {"type": "array", "items": {"type": "string"}},
        "comparisons": {"type": "array", "items": {
            "type": "object",
            "required": ["id", "outcomes"],
            "properties": {
                "id": {"type": "string"},
                "name": {"type": "string"},
                "outcomes": {"type": "array", "items": {
                    "type": "object",
                    "required": ["id", "data_kind", "effect_measure", "pooling", "subgroups"],
                    "properties": {
                        "id": {"type": "string"},
                        "name": {"type": "string"},
                        "data_kind": {"enum": [k.value for k in DataKind]},
                        "effect_measure": {"enum": [m.value for m in EffectMeasure]},
                        "pooling": {"enum": [p.value for p in Pooling]},
                        "model": {"enum": [m.value for m in Model]},
                        "ci_level": {"type": "number", "exclusiveMinimum": 0,
                                     "exclusiveMaximum": 1},
                        "original": {"type": "object", "properties": {
                            "estimate": {"type": ["number", "null"]},
                            "ci_low": {"type": ["number", "null"]},
                            "ci_high": {"type": ["number", "null"]},
                        }},
                        "subgroups": {"type": "array", "items": {
                            "type": "object",
                            "required": ["id", "rows"],
                            "properties": {
                                "id": {"type": "string"},
                                "name": {"type": "string"},
                                "rows": {"type": "array", "items": {
                                    "type": "object",
                                    "required": ["study_id"],
                                    "properties": {
                                        "study_id": {"type": "string", "minLength": 1},
                                        "events_exp": _COUNT, "total_exp": _COUNT,
                                        "events_ctrl": _COUNT, "total_ctrl": _COUNT,
                                        "n_exp": _COUNT, "n_ctrl": _COUNT,
                                        "mean_exp": _ARM_NUMBER, "mean_ctrl": _ARM_NUMBER,
                                        "sd_exp": {"type": "number", "minimum": 0},
                                        "sd_ctrl": {"type": "number", "minimum": 0},
                                    },
                                }},
                            },
                        }},
                    },
                }},
            },
        }},
    },
}

_DICH_FIELDS = ("events_exp", "total_exp", "events_ctrl", "total_ctrl")
_CONT_FIELDS = ("n_exp", "mean_exp", "sd_exp", "n_ctrl", "mean_ctrl", "sd_ctrl")


def _json_row(obj: dict, kind: DataKind, path: str) -> StudyRow:
    fields = _DICH_FIELDS if kind is DataKind.DICHOTOMOUS else _CONT_FIELDS
    missing = [f for f in fields if f not in obj]
    if missing:
        raise ValidationError(f"{path}: missing {', '.join(missing)}", path=path)
    try:
        if kind is DataKind.DICHOTOMOUS:
            data: Any = DichotomousArms(*(obj[f] for f in fields))
        else:
            data = ContinuousArms(*(obj[f] for f in fields))
        return StudyRow(obj["study_id"], data)
    except ValidationError as exc:
        raise ValidationError(f"{path}: {exc}", path=path) from None


def review_from_dict(doc: dict) -> Review:
    """Build a Review from an already-decoded canonical JSON document."""
    validator = jsonschema.Draft202012Validator(REVIEW_SCHEMA)
    error = next(iter(sorted(validator.iter_errors(doc), key=lambda e: list(e.path))), None)
    if error is not None:
        raise ValidationError(f"{error.json_path}: {error.message}", path=error.json_path)

    comparisons = []
    for ci, cmp in enumerate(doc["comparisons"]):
        outcomes = []
        for oi, out in enumerate(cmp["outcomes"]):
            opath = f"$.comparisons[{ci}].outcomes[{oi}]"
            kind = DataKind(out["data_kind"])
            subgroups = []
            for si, sg in enumerate(out["subgroups"]):
                rows = tuple(_json_row(r, kind, f"{opath}.subgroups[{si}].rows[{ri}]")
                             for ri, r in enumerate(sg["rows"]))
                subgroups.append(Subgroup(sg["id"], sg.get("name", ""), rows))
            original = out.get("original") or {}
            low, high = original.get("ci_low"), original.get("ci_high")
            try:
                outcomes.append(Outcome(
                    out["id"], out.get("name", ""), kind,
                    EffectMeasure(out["effect_measure"]), Pooling(out["pooling"]),
                    Model(out.get("model", Model.FIXED.value)), out.get("ci_level", 0.95),
                    tuple(subgroups), original.get("estimate"),
                    (low, high) if low is not None and high is not None else None))
            except ValidationError as exc:
                raise ValidationError(f"{opath}: {exc}", path=opath) from None
        try:
            comparisons.append(Comparison(cmp["id"], cmp.get("name", ""), tuple(outcomes)))
        except ValidationError as exc:
            raise ValidationError(f"$.comparisons[{ci}]: {exc}",
                                  path=f"$.comparisons[{ci}]") from None
    try:
        return Review(doc["review_id"], tuple(comparisons),
                      tuple(doc.get("skipped_outcomes", ())))
    except ValidationError as exc:
        raise ValidationError(f"$: {exc}", path="$") from None


def parse_review_json(data: bytes) -> Review:
    try:
        doc = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"malformed JSON: {exc}", offset=getattr(exc, "pos", None),
                         path="$") from None
    return review_from_dict(doc)


def review_to_dict(review: Review) -> dict:
    comparisons = []
    for cmp in review.comparisons:
        outcomes = []
        for out in cmp.outcomes:
            subgroups = []
            for sg in out.subgroups:
                rows = []
                for row in sg.rows:
                    fields = (_DICH_FIELDS if out.data_kind is DataKind.DICHOTOMOUS
                              else _CONT_FIELDS)
                    entry: dict = {"study_id": row.study_id}
                    entry.update({f: getattr(row.data, f) for f in fields})
                    rows.append(entry)
                subgroups.append({"id": sg.subgroup_id, "name": sg.name, "rows": rows})
            entry = {
                "id": out.outcome_id, "name": out.name, "data_kind": out.data_kind.value,
                "effect_measure": out.effect_measure.value, "pooling": out.pooling.value,
                "model": out.model.value, "ci_level": out.ci_level,
            }
            if out.original_estimate is not None or out.original_ci is not None:
                low, high = out.original_ci or (None, None)
                entry["original"] = {"estimate": out.original_estimate,
                                     "ci_low": low, "ci_high": high}
            entry["subgroups"] = subgroups
            outcomes.append(entry)
        comparisons.append({"id": cmp.comparison_id, "name": cmp.name, "outcomes": outcomes})
    doc: dict = {"review_id": review.review_id, "comparisons": comparisons}
    if review.skipped_outcomes:
        doc["skipped_outcomes"] = list(review.skipped_outcomes)
    return doc


def emit_json(review: Review) -> bytes:
    return (json.dumps(review_to_dict(review), indent=2, sort_keys=False) + "\n").encode("utf-8")


def parse_review_file(path) -> Review:
    """Dispatch on file suffix (``.xml``/``.rm5`` or ``.json``)."""
    from pathlib import Path

    path = Path(path)
    data = path.read_bytes()
    try:
        if path.suffix.lower() == ".json":
            return parse_review_json(data)
        return parse_review_xml(data, fallback_id=path.stem)
    except EvidenceError as exc:
        exc.args = (f"{path.name}: {exc}",)
        raise


def _fmt_num(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def emit_review_xml(review: Review) -> bytes:
    """Write the supported RevMan subset (inverse of :func:`parse_review_xml`).

    Skipped outcome ids are written back as empty ``OTHER_OUTCOME`` elements
    in the first comparison.
    """
    root = ET.Element("COCHRANE_REVIEW", {"REVIEW_ID": review.review_id})
    analyses = ET.SubElement(root, "ANALYSES_AND_DATA")
    inverse_methods = {v: k for k, v in _METHODS.items()}
    for cmp in review.comparisons:
        cmp_elem = ET.SubElement(analyses, "COMPARISON", {"ID": cmp.comparison_id})
        ET.SubElement(cmp_elem, "NAME").text = cmp.name
        for out in cmp.outcomes:
            dich = out.data_kind is DataKind.DICHOTOMOUS
            tag, sub_tag, data_tag = ("DICH_OUTCOME", "DICH_SUBGROUP", "DICH_DATA") if dich \
                else ("CONT_OUTCOME", "CONT_SUBGROUP", "CONT_DATA")
            attrs = {
                "ID": out.outcome_id,
                "EFFECT_MEASURE": out.effect_measure.value,
                "METHOD": inverse_methods[out.pooling],
                "RANDOM": "YES" if out.model is Model.RANDOM else "NO",
                "CI_TOTAL": _fmt_num(round(out.ci_level * 100, 10)),
            }
            if out.original_estimate is not None:
                attrs["EFFECT_SIZE"] = _fmt_num(out.original_estimate)
            if out.original_ci is not None:
                attrs["CI_START"] = _fmt_num(out.original_ci[0])
                attrs["CI_END"] = _fmt_num(out.original_ci[1])
            out_elem = ET.SubElement(cmp_elem, tag, attrs)
            ET.SubElement(out_elem, "NAME").text = out.name
            for sg in out.subgroups:
                sg_elem = ET.SubElement(out_elem, sub_tag, {"ID": sg.subgroup_id})
                ET.SubElement(sg_elem, "NAME").text = sg.name
                for row in sg.rows:
                    d = row.data
                    if dich:
                        row_attrs = {"EVENTS_1": d.events_exp, "TOTAL_1": d.total_exp,
                                     "EVENTS_2": d.events_ctrl, "TOTAL_2": d.total_ctrl}
                    else:
                        row_attrs = {"MEAN_1": d.mean_exp, "SD_1": d.sd_exp, "TOTAL_1": d.n_exp,
                                     "MEAN_2": d.mean_ctrl, "SD_2": d.sd_ctrl,
                                     "TOTAL_2": d.n_ctrl}
                    ET.SubElement(sg_elem, data_tag, {"STUDY_ID": row.study_id,
                                                      **{k: _fmt_num(v) for k, v in
                                                         row_attrs.items()}})
    if review.skipped_outcomes:
        target = analyses.find("COMPARISON")
        if target is None:
            target = ET.SubElement(analyses, "COMPARISON", {"ID": "CMP-SKIPPED"})
        for sid in review.skipped_outcomes:
            ET.SubElement(target, "OTHER_OUTCOME", {"ID": sid})
    ET.indent(root)
    return ET.tostring(root, encoding="utf-8", xml_declaration=True) + b"\n"
