"""Generator for the bundled synthetic corpus.

The corpus mimics the shape of Cochrane intervention reviews paired with a
screening collection: several reviews, studies reported by one to four
publications, outcomes drawing on a handful of studies each, qrels at two
screening levels, and a few ranking runs of varying quality.  Output is a
pure function of the seed, so the files shipped under ``data/synthetic`` can
be regenerated and compared byte for byte.
"""

from __future__ import annotations

import random
from pathlib import Path

from .evidence.mapping import emit_mapping
from .evidence.revman import emit_json, emit_review_xml
from .evidence.trec import emit_qrels, emit_run
from .evidence.types import (
    Comparison, ContinuousArms, DataKind, DichotomousArms, EffectMeasure, Model, Outcome,
    Pooling, Qrels, Review, RunRanking, StudyPublicationMap, StudyRow, Subgroup,
)
from .meta_analysis import pool_outcome

SEED = 1
N_REVIEWS = 8
# (dichotomous, continuous) outcomes per review; totals 28 and 12
OUTCOME_PLAN = [(5, 2), (4, 1), (3, 2), (4, 1), (3, 2), (3, 1), (3, 2), (3, 1)]
STUDIES_PER_REVIEW = [6, 5, 8, 4, 7, 5, 8, 6]
# (tag, relevance boost, noise) for the bundled runs
RUN_PLAN = [("run-a", 3.0, 1.0), ("run-b", 2.2, 1.0), ("run-c", 1.6, 1.0),
            ("run-d", 1.0, 1.0), ("run-e", 0.5, 1.0)]


def _study_sizes(rng: random.Random) -> int:
    return rng.choice([20, 30, 40, 60, 80, 100, 150, 200, 300])


def _dichotomous_row(rng: random.Random, study_id: str, base_risk: float,
                     true_rr: float) -> StudyRow:
    n1, n2 = _study_sizes(rng), _study_sizes(rng)
    p_ctrl = min(0.9, max(0.02, base_risk * rng.uniform(0.6, 1.4)))
    p_exp = min(0.95, max(0.01, p_ctrl * true_rr * rng.uniform(0.7, 1.3)))
    c = sum(rng.random() < p_ctrl for _ in range(n2))
    a = sum(rng.random() < p_exp for _ in range(n1))
    if a == 0 and c == 0:
        a = 1
    return StudyRow(study_id, DichotomousArms(a, n1, c, n2))


def _continuous_row(rng: random.Random, study_id: str, baseline: float, shift: float,
                    sd: float) -> StudyRow:
    n1, n2 = _study_sizes(rng) // 2, _study_sizes(rng) // 2
    s1, s2 = sd * rng.uniform(0.8, 1.2), sd * rng.uniform(0.8, 1.2)
    m2 = baseline + rng.gauss(0, sd / 4)
    m1 = m2 + shift + rng.gauss(0, sd / 3)
    return StudyRow(study_id, ContinuousArms(n1, round(m1, 2), round(s1, 2),
                                             n2, round(m2, 2), round(s2, 2)))


def _n_studies_for_outcome(rng: random.Random, available: int) -> int:
    # about half the outcomes rest on one or two studies
    k = rng.choices([1, 2, 3, 4, 5, 6, 8], weights=[3, 3, 2, 2, 1, 1, 1])[0]
    return min(k, available)


def _with_published(outcome: Outcome) -> Outcome:
    pooled = pool_outcome(outcome)
    return Outcome(outcome.outcome_id, outcome.name, outcome.data_kind, outcome.effect_measure,
                   outcome.pooling, outcome.model, outcome.ci_level, outcome.subgroups,
                   round(pooled.estimate, 2),
                   (round(pooled.ci_low, 2), round(pooled.ci_high, 2)))


def _outcome(rng: random.Random, rid: str, idx: int, kind: DataKind, studies: list[str]
             ) -> Outcome:
    chosen = sorted(rng.sample(studies, _n_studies_for_outcome(rng, len(studies))))
    if kind is DataKind.DICHOTOMOUS:
        measure = rng.choices([EffectMeasure.RR, EffectMeasure.OR, EffectMeasure.RD],
                              weights=[6, 3, 1])[0]
        pooling = Pooling.MANTEL_HAENSZEL if rng.random() < 0.85 else Pooling.INVERSE_VARIANCE
        base_risk, true_rr = rng.uniform(0.08, 0.5), rng.choice([0.5, 0.7, 0.9, 1.0, 1.2, 1.6])
        rows = [_dichotomous_row(rng, s, base_risk, true_rr) for s in chosen]
    else:
        measure = rng.choice([EffectMeasure.MD, EffectMeasure.SMD])
        pooling = Pooling.INVERSE_VARIANCE
        baseline, sd = rng.uniform(5, 60), rng.uniform(2, 15)
        shift = sd * rng.choice([-0.6, -0.3, 0.0, 0.2, 0.5])
        rows = [_continuous_row(rng, s, baseline, shift, sd) for s in chosen]
    model = Model.RANDOM if rng.random() < 0.25 else Model.FIXED
    oid = f"{rid}-O{idx:02d}"
    if len(rows) >= 4 and rng.random() < 0.4:
        half = len(rows) // 2
        subgroups = (Subgroup(f"{oid}.1", "Adults", tuple(rows[:half])),
                     Subgroup(f"{oid}.2", "Children", tuple(rows[half:])))
    else:
        subgroups = (Subgroup(f"{oid}.1", "", tuple(rows)),)
    name = f"{'Event rate' if kind is DataKind.DICHOTOMOUS else 'Score'} {idx}"
    return _with_published(Outcome(oid, name, kind, measure, pooling, model, 0.95, subgroups))


def build(seed: int = SEED):
    """Return (reviews, mapping, qrels by level, runs)."""
    rng = random.Random(seed)
    reviews = []
    entries = set()
    abstract, fulltext = {}, {}
    next_pub = 24000000
    collections: dict[str, list[str]] = {}
    for r in range(N_REVIEWS):
        rid = f"CD9{r + 1:05d}"
        studies = [f"STD-{rid}-{s + 1:02d}" for s in range(STUDIES_PER_REVIEW[r])]
        included_pubs = []
        for study in studies:
            for _ in range(rng.choices([1, 2, 3, 4], weights=[2, 3, 3, 2])[0]):
                pub = str(next_pub)
                next_pub += rng.randint(1, 40)
                entries.add((rid, study, pub))
                included_pubs.append(pub)
        n_dich, n_cont = OUTCOME_PLAN[r]
        kinds = [DataKind.DICHOTOMOUS] * n_dich + [DataKind.CONTINUOUS] * n_cont
        rng.shuffle(kinds)
        outcomes = tuple(_outcome(rng, rid, i + 1, kind, studies) for i, kind in enumerate(kinds))
        split = (len(outcomes) + 1) // 2
        comparisons = (
            Comparison(f"{rid}-CMP-001", "Intervention versus placebo", outcomes[:split]),
            Comparison(f"{rid}-CMP-002", "Intervention versus usual care", outcomes[split:]),
        )
        skipped = (f"{rid}-CMP-001-ORD",) if r == 2 else ()
        reviews.append(Review(rid, comparisons, skipped))

        # screening collection: included pubs (some unmatched) plus non-relevant candidates
        unmatched = set(rng.sample(included_pubs, max(1, len(included_pubs) // 10)))
        n_other = rng.randint(60, 180)
        others = []
        for _ in range(n_other):
            others.append(str(next_pub))
            next_pub += rng.randint(1, 40)
        collection = [p for p in included_pubs if p not in unmatched] + others
        collections[rid] = collection
        abstract_extra = set(rng.sample(others, len(others) // 8))
        for pub in collection:
            relevant_ft = pub in included_pubs
            fulltext[(rid, pub)] = int(relevant_ft)
            abstract[(rid, pub)] = int(relevant_ft or pub in abstract_extra)

    mapping = StudyPublicationMap(frozenset(entries))
    qrels = {"fulltext": Qrels(fulltext), "abstract": Qrels(abstract)}
    runs = []
    for tag, boost, noise in RUN_PLAN:
        lists = {}
        for rid in sorted(collections):
            scored = [(rng.gauss(0, noise) + (boost if abstract[(rid, p)] else 0.0), p)
                      for p in collections[rid]]
            lists[rid] = [p for _, p in sorted(scored, key=lambda t: (-t[0], t[1]))]
        runs.append(RunRanking.from_ordered(tag, lists))
    return reviews, mapping, qrels, runs


def write(out_dir, seed: int = SEED) -> list[Path]:
    """Write the corpus files; the last two reviews are stored as JSON."""
    out = Path(out_dir)
    (out / "reviews").mkdir(parents=True, exist_ok=True)
    (out / "runs").mkdir(exist_ok=True)
    reviews, mapping, qrels, runs = build(seed)
    written = []
    for i, review in enumerate(reviews):
        if i >= len(reviews) - 2:
            path, data = out / "reviews" / f"{review.review_id}.json", emit_json(review)
        else:
            path, data = out / "reviews" / f"{review.review_id}.xml", emit_review_xml(review)
        path.write_bytes(data)
        written.append(path)
    files = {
        out / "mapping.csv": emit_mapping(mapping),
        out / "qrels_fulltext.txt": emit_qrels(qrels["fulltext"]),
        out / "qrels_abstract.txt": emit_qrels(qrels["abstract"]),
    }
    for run in runs:
        files[out / "runs" / f"{run.tag}.txt"] = emit_run(run)
    for path, data in files.items():
        path.write_bytes(data)
        written.append(path)
    return written


def bundled_path() -> Path:
    return Path(__file__).parent / "data" / "synthetic"
