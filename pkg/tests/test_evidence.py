import json

import pytest
from hypothesis import given, settings, strategies as st

from outcomeval.evidence import (
    ContinuousArms, DataKind, DichotomousArms, EffectMeasure, Model, ParseError, Pooling,
    Review, StudyPublicationMap, ValidationError, emit_json, emit_review_xml, parse_mapping,
    parse_qrels, parse_review_json, parse_review_xml, parse_run, studies_found,
)
from outcomeval.evidence.revman import review_to_dict


def test_parse_single_rr_fixture(fixtures_dir):
    review = parse_review_xml((fixtures_dir / "single_rr.xml").read_bytes())
    assert review.review_id == "CD000001"
    assert review.skipped_outcomes == ()
    assert len(review.comparisons) == 1
    cmp = review.comparisons[0]
    assert (cmp.comparison_id, cmp.name) == ("CMP-001", "Drug versus placebo")
    assert len(cmp.outcomes) == 1
    out = cmp.outcomes[0]
    assert out.outcome_id == "CMP-001.01"
    assert out.name == "Mortality"
    assert out.data_kind is DataKind.DICHOTOMOUS
    assert out.effect_measure is EffectMeasure.RR
    assert out.pooling is Pooling.MANTEL_HAENSZEL
    assert out.model is Model.FIXED
    assert out.ci_level == 0.95
    assert out.original_estimate == 2.0
    assert out.original_ci == (1.01, 3.96)
    rows = out.rows
    assert [r.study_id for r in rows] == ["STD-Smith-2001", "STD-Jones-2005"]
    assert rows[0].data == DichotomousArms(10, 20, 5, 20)
    assert rows[1].data == DichotomousArms(20, 40, 10, 40)


def test_zero_comparisons():
    review = parse_review_xml(b'<COCHRANE_REVIEW REVIEW_ID="CD1"><ANALYSES_AND_DATA/>'
                              b'</COCHRANE_REVIEW>')
    assert review.comparisons == ()


def test_ordinal_outcome_is_skipped(fixtures_dir):
    review = parse_review_xml((fixtures_dir / "ordinal_and_rr.xml").read_bytes())
    outcomes = [o for _, o in review.iter_outcomes()]
    assert [o.outcome_id for o in outcomes] == ["CMP-001.02"]
    assert review.skipped_outcomes == ("CMP-001.01",)


def test_mixed_fixture_subgroups_and_doi_id(fixtures_dir):
    review = parse_review_xml((fixtures_dir / "mixed_with_ordinal.xml").read_bytes())
    assert review.review_id == "CD000002"
    assert review.skipped_outcomes == ("CMP-001.01", "CMP-001.03")
    (out,) = review.comparisons[0].outcomes
    assert out.model is Model.RANDOM
    assert [sg.name for sg in out.subgroups] == ["Adults", "Elderly"]
    assert out.rows[1].data == ContinuousArms(30, 12.5, 3.0, 28, 11.0, 3.5)


def test_malformed_xml_reports_offset(fixtures_dir):
    data = (fixtures_dir / "malformed.xml").read_bytes()
    with pytest.raises(ParseError) as err:
        parse_review_xml(data)
    # the mismatched closing tag starts on line 4
    assert err.value.line == 4
    assert err.value.offset >= data.index(b"</COCHRANE_REVIEW>")
    assert "byte" in str(err.value)


def test_events_exceeding_total_names_row():
    xml = (b'<COCHRANE_REVIEW REVIEW_ID="CD1"><COMPARISON ID="C1"><DICH_OUTCOME ID="O1" '
           b'EFFECT_MEASURE="RR" METHOD="MH"><DICH_DATA STUDY_ID="STD-bad" EVENTS_1="12" '
           b'TOTAL_1="10" EVENTS_2="1" TOTAL_2="10"/></DICH_OUTCOME></COMPARISON>'
           b'</COCHRANE_REVIEW>')
    with pytest.raises(ValidationError, match="STD-bad"):
        parse_review_xml(xml)


def test_json_round_trip(fixtures_dir):
    for name in ("single_rr.xml", "mixed_with_ordinal.xml", "ordinal_and_rr.xml"):
        review = parse_review_xml((fixtures_dir / name).read_bytes())
        assert parse_review_json(emit_json(review)) == review


def test_xml_round_trip(fixtures_dir):
    review = parse_review_xml((fixtures_dir / "mixed_with_ordinal.xml").read_bytes())
    assert parse_review_xml(emit_review_xml(review)) == review


def test_json_empty_outcomes():
    doc = {"review_id": "CD1", "comparisons": [{"id": "C1", "name": "x", "outcomes": []}]}
    review = parse_review_json(json.dumps(doc).encode())
    assert list(review.iter_outcomes()) == []


def _cont_doc(sd):
    return {"review_id": "CD1", "comparisons": [{"id": "C1", "outcomes": [{
        "id": "O1", "data_kind": "continuous", "effect_measure": "MD", "pooling": "IV",
        "subgroups": [{"id": "S1", "rows": [{
            "study_id": "STD-1", "n_exp": 10, "mean_exp": 1.0, "sd_exp": sd,
            "n_ctrl": 10, "mean_ctrl": 0.5, "sd_ctrl": 1.0}]}]}]}]}


def test_json_negative_sd_names_path():
    with pytest.raises(ValidationError) as err:
        parse_review_json(json.dumps(_cont_doc(-1.0)).encode())
    assert "comparisons[0].outcomes[0].subgroups[0].rows[0]" in err.value.path


def test_json_wrong_measure_for_kind():
    doc = _cont_doc(1.0)
    doc["comparisons"][0]["outcomes"][0]["effect_measure"] = "RR"
    with pytest.raises(ValidationError, match="not a continuous measure"):
        parse_review_json(json.dumps(doc).encode())


def test_mantel_haenszel_rejected_for_continuous():
    doc = _cont_doc(1.0)
    doc["comparisons"][0]["outcomes"][0]["pooling"] = "MH"
    with pytest.raises(ValidationError, match="Mantel-Haenszel"):
        parse_review_json(json.dumps(doc).encode())


def test_json_malformed():
    with pytest.raises(ParseError):
        parse_review_json(b"{not json")


def test_duplicate_outcome_ids_rejected():
    doc = _cont_doc(1.0)
    outcomes = doc["comparisons"][0]["outcomes"]
    outcomes.append(dict(outcomes[0]))
    with pytest.raises(ValidationError, match="duplicate outcome"):
        parse_review_json(json.dumps(doc).encode())


def test_synthetic_reviews_round_trip(synthetic_corpus):
    for review in synthetic_corpus.reviews.values():
        assert parse_review_json(emit_json(review)) == review
        assert review_to_dict(parse_review_json(emit_json(review))) == review_to_dict(review)


# mapping ------------------------------------------------------------------

def test_mapping_three_rows():
    m = parse_mapping(b"review_id,study_id,publication_id\nR,S1,p1\nR,S2,p2\nR,S3,p3\n")
    assert len(m.entries) == 3


def test_mapping_multi_publication_study():
    m = parse_mapping(b"review_id,study_id,publication_id\nR,S1,p1\nR,S1,p2\n")
    assert m.publications_of("R", "S1") == {"p1", "p2"}


def test_mapping_duplicates_warn():
    warnings = []
    m = parse_mapping(b"review_id,study_id,publication_id\nR,S1,p1\nR,S1,p1\n", warnings)
    assert len(m.entries) == 1
    assert len(warnings) == 1


def test_mapping_missing_column():
    with pytest.raises(ParseError, match="publication_id"):
        parse_mapping(b"review_id,study_id\nR,S1\n")


# qrels / runs ---------------------------------------------------------------

def test_qrels():
    q = parse_qrels(b"t1 0 d1 1\nt1 0 d2 0\n")
    assert q.relevant("t1") == {"d1"}
    assert q.judged("t1") == {"d1", "d2"}


def test_qrels_bad_grade_line_number():
    with pytest.raises(ParseError) as err:
        parse_qrels(b"t1 0 d1 1\nt1 0 d2 x\n")
    assert err.value.line == 2


def test_run_ranks_by_score():
    run = parse_run(b"t1 Q0 d1 1 0.9 tag\nt1 Q0 d2 2 0.7 tag\n")
    assert [(d.publication_id, d.rank) for d in run.topics["t1"]] == [("d1", 1), ("d2", 2)]
    assert run.tag == "tag"


def test_run_tie_break_by_publication_id():
    run = parse_run(b"t1 Q0 d2 1 0.5 tag\nt1 Q0 d1 2 0.5 tag\n")
    records = [("d2", 0.5), ("d1", 0.5)]
    expected = [doc for doc, _ in sorted(records, key=lambda r: (-r[1], r[0]))]
    assert run.ranking("t1") == expected == ["d1", "d2"]


def test_run_non_numeric_score_line():
    with pytest.raises(ParseError) as err:
        parse_run(b"t1 Q0 d1 1 0.9 tag\nt1 Q0 d2 2 high tag\n")
    assert err.value.line == 2


@given(st.lists(st.tuples(st.sampled_from(["t1", "t2"]), st.text("abcdef", min_size=1,
                                                                     max_size=4),
                          st.floats(-1e6, 1e6)), max_size=40))
def test_run_ranks_are_permutation(records):
    data = "".join(f"{t} Q0 {d} 1 {s!r} tag\n" for t, d, s in records).encode()
    run = parse_run(data)
    for docs in run.topics.values():
        assert [d.rank for d in docs] == list(range(1, len(docs) + 1))
        scores = [d.score for d in docs]
        assert scores == sorted(scores, reverse=True)


# studies_found --------------------------------------------------------------

MAP = StudyPublicationMap(frozenset({("R", "S", "p1"), ("R", "S", "p2"), ("R", "T", "p3"),
                                     ("R", "U", "p3"), ("Q", "S", "p1")}))


def test_studies_found_any_publication():
    assert studies_found("R", {"p2"}, MAP) == {"S"}


def test_studies_found_empty():
    assert studies_found("R", set(), MAP) == set()


def test_studies_found_shared_publication():
    retrieved = {"p3"}
    brute = {s for (r, s, p) in MAP.entries if r == "R" and p in retrieved}
    assert studies_found("R", retrieved, MAP) == brute == {"T", "U"}


def test_studies_found_unknown_publications_ignored():
    assert studies_found("R", {"zzz"}, MAP) == set()


@given(st.sets(st.sampled_from(["p1", "p2", "p3", "p4"])),
       st.sets(st.sampled_from(["p1", "p2", "p3", "p4"])))
def test_studies_found_monotone(a, b):
    assert studies_found("R", a, MAP) <= studies_found("R", a | b, MAP)


# fuzzing -------------------------------------------------------------------

@settings(max_examples=200)
@given(st.integers(-3, 30), st.integers(-3, 30), st.integers(-3, 30), st.integers(-3, 30))
def test_parsed_rows_satisfy_invariants(e1, t1, e2, t2):
    xml = (f'<COCHRANE_REVIEW REVIEW_ID="CD1"><COMPARISON ID="C1"><DICH_OUTCOME ID="O1" '
           f'EFFECT_MEASURE="OR" METHOD="MH"><DICH_DATA STUDY_ID="S" EVENTS_1="{e1}" '
           f'TOTAL_1="{t1}" EVENTS_2="{e2}" TOTAL_2="{t2}"/></DICH_OUTCOME></COMPARISON>'
           f'</COCHRANE_REVIEW>').encode()
    try:
        review = parse_review_xml(xml)
    except ValidationError:
        return
    arms = review.comparisons[0].outcomes[0].rows[0].data
    assert 0 <= arms.events_exp <= arms.total_exp
    assert 0 <= arms.events_ctrl <= arms.total_ctrl


@settings(max_examples=200)
@given(st.binary(max_size=200))
def test_garbage_never_yields_invalid_review(data):
    try:
        review = parse_review_xml(b"<COCHRANE_REVIEW REVIEW_ID='CD1'>" + data)
    except (ParseError, ValidationError):
        return
    assert isinstance(review, Review)
