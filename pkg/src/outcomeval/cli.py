"""Command-line interface.

Exit codes: 0 success, 1 validation/input failure, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import report
from .evidence.corpus import Corpus, default_mapping_path, default_qrels_path, load_corpus, \
    review_files
from .evidence.mapping import parse_mapping, studies_found
from .evidence.revman import parse_review_file
from .evidence.trec import parse_qrels, parse_run
from .evidence.types import DataKind, EvidenceError, RunRanking
from .experiments.correlation import correlate
from .experiments.pareto import pareto_frontier
from .experiments.runs import (
    DEFAULT_CUTOFFS, GOLD_TAG, MAX_WITH_QRELS_TAG, compare_runs, evaluate_run, gold_baseline,
    max_with_qrels_baseline, retrieved_at,
)
from .experiments.simulation import DEFAULT_REMOVAL_COUNTS, SimulationSpec, simulate_removals
from .experiments.universe import evaluation_universe
from .meta_analysis import pool_outcome
from .svg import render_boxplot_svg, render_forest_svg, render_pareto_svg

log = logging.getLogger("outcomeval")

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


class ConfigError(Exception):
    """Invalid option values; reported as a usage error."""


@dataclass
class CliConfig:
    command: str
    corpus: Optional[Path] = None
    mapping: Optional[Path] = None
    qrels: Optional[Path] = None
    runs: list[Path] = field(default_factory=list)
    points: Optional[Path] = None
    cutoffs: tuple[float, ...] = DEFAULT_CUTOFFS
    cutoff: Optional[float] = None
    removals: tuple = DEFAULT_REMOVAL_COUNTS
    seeds: int = 20
    base_seed: int = 0
    level: str = "fulltext"
    out: Path = Path("out")
    format: str = "csv"
    baselines: bool = True
    clamp: Optional[float] = None

    def __post_init__(self):
        if any(not 0 < k <= 100 for k in self.cutoffs):
            raise ConfigError("cutoffs must lie in (0, 100]")
        if self.cutoff is not None and not 0 < self.cutoff <= 100:
            raise ConfigError("cutoff must lie in (0, 100]")
        if self.seeds < 1:
            raise ConfigError("--seeds must be >= 1")
        if self.command != "pareto" or self.points is None:
            if self.corpus is None:
                raise ConfigError(f"{self.command} requires --corpus")
        if self.command in ("eval-run",) and not self.runs:
            raise ConfigError("eval-run requires --runs")


def _percent_list(text: str) -> tuple[float, ...]:
    try:
        values = tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")
    return tuple(int(v) if v.is_integer() else v for v in values)


def _removal_list(text: str) -> tuple:
    out = []
    for token in (t.strip() for t in text.split(",")):
        if not token:
            continue
        if token.lower() == "all":
            out.append("all")
            continue
        try:
            out.append(int(token))
        except ValueError:
            raise argparse.ArgumentTypeError(f"removal count {token!r} is not an integer")
    return tuple(out)


def _expand_runs(paths: Sequence[Path]) -> list[Path]:
    files = []
    for p in paths:
        p = Path(p)
        files.extend(sorted(q for q in p.iterdir() if q.is_file()) if p.is_dir() else [p])
    return files


def _load_runs(paths: Sequence[Path]) -> list[RunRanking]:
    runs, seen = [], set()
    for path in _expand_runs(paths):
        run = parse_run(path.read_bytes())
        tag = run.tag or path.stem
        while tag in seen:
            tag += "'"
        seen.add(tag)
        runs.append(RunRanking(tag, run.topics))
    return runs


def _write(config: CliConfig, name: str, data: bytes) -> Path:
    path = report.write_atomic(config.out / name, data)
    log.info("wrote %s", path)
    return path


def _table(config: CliConfig, stem: str, rows: list[dict], fields: Sequence[str]) -> Path:
    if config.format == "json":
        return _write(config, f"{stem}.json", report.to_json(rows))
    return _write(config, f"{stem}.csv", report.to_csv(rows, fields))


def _corpus(config: CliConfig) -> Corpus:
    return load_corpus(config.corpus, config.mapping, config.qrels, config.level)


def cmd_validate(config: CliConfig) -> int:
    root = Path(config.corpus)
    if not root.is_dir():
        print(f"error: corpus directory {root} does not exist", file=sys.stderr)
        return EXIT_INVALID
    files = review_files(root)
    if not files:
        print(f"error: no reviews found in {root}", file=sys.stderr)
        return EXIT_INVALID
    errors = 0
    reviews = []
    for path in files:
        try:
            reviews.append(parse_review_file(path))
        except EvidenceError as exc:
            errors += 1
            print(f"error: {exc}", file=sys.stderr)

    n_dich = n_cont = n_skipped = 0
    for review in reviews:
        n_skipped += len(review.skipped_outcomes)
        for _, outcome in review.iter_outcomes():
            if outcome.data_kind is DataKind.DICHOTOMOUS:
                n_dich += 1
            else:
                n_cont += 1
    print(f"reviews: {len(reviews)}")
    print(f"outcomes: {n_dich + n_cont} (dichotomous {n_dich}, continuous {n_cont})")
    print(f"skipped outcomes: {n_skipped}")

    mapping_path = config.mapping or default_mapping_path(root)
    mapping = None
    try:
        warnings: list[str] = []
        mapping = parse_mapping(Path(mapping_path).read_bytes(), warnings)
        for w in warnings:
            print(f"warning: {w}", file=sys.stderr)
    except FileNotFoundError:
        errors += 1
        print(f"error: mapping file {mapping_path} not found", file=sys.stderr)
    except EvidenceError as exc:
        errors += 1
        print(f"error: {mapping_path}: {exc}", file=sys.stderr)

    if mapping is not None:
        studies = [(r.review_id, s) for r in reviews for s in sorted(r.study_ids)]
        mapped = sum(bool(mapping.publications_of(rid, s)) for rid, s in studies)
        pct = 100.0 * mapped / len(studies) if studies else 0.0
        print(f"mapping coverage: {pct:.1f}% ({mapped}/{len(studies)} studies with data "
              "have a publication)")

    qrels_path = config.qrels or default_qrels_path(root, config.level)
    if Path(qrels_path).is_file():
        try:
            qrels = parse_qrels(Path(qrels_path).read_bytes())
            if mapping is not None:
                pubs = [(rid, p) for rid in sorted({r.review_id for r in reviews})
                        for p in sorted(mapping.publications(rid))]
                judged = sum((rid, p) in qrels.judgments for rid, p in pubs)
                pct = 100.0 * judged / len(pubs) if pubs else 0.0
                print(f"qrels coverage: {pct:.1f}% ({judged}/{len(pubs)} mapped publications "
                      "judged)")
        except EvidenceError as exc:
            errors += 1
            print(f"error: {qrels_path}: {exc}", file=sys.stderr)
    elif config.qrels:
        errors += 1
        print(f"error: qrels file {qrels_path} not found", file=sys.stderr)
    else:
        print("qrels coverage: n/a (no qrels file)")

    for path in _expand_runs(config.runs):
        try:
            parse_run(path.read_bytes())
        except (EvidenceError, OSError) as exc:
            errors += 1
            print(f"error: {path.name}: {exc}", file=sys.stderr)
    return EXIT_INVALID if errors else EXIT_OK


def _evaluate_all(config: CliConfig, corpus: Corpus, cutoffs):
    universe = evaluation_universe(corpus)
    runs = _load_runs(config.runs)
    if config.baselines:
        runs = [gold_baseline(corpus)] + runs
        if corpus.qrels is not None:
            runs.insert(1, max_with_qrels_baseline(corpus.qrels, corpus))
    return [evaluate_run(run, corpus, corpus.qrels, cutoffs, universe=universe) for run in runs]


def cmd_eval_run(config: CliConfig) -> int:
    corpus = _corpus(config)
    evaluations = _evaluate_all(config, corpus, config.cutoffs)
    sort_cutoff = 30 if 30 in config.cutoffs else config.cutoffs[-1]
    for ev in evaluations:
        rows = report.run_rows(ev)
        for w in ev.warnings:
            print(f"warning: {w}", file=sys.stderr)
            rows.append({"row_type": "warning", "run_tag": ev.run_tag, "note": w})
        _table(config, ev.run_tag, rows, report.RUN_FILE_FIELDS + ("note",))
        topics = report.topic_rows(ev)
        if topics:
            _table(config, f"{ev.run_tag}.topics", topics, list(topics[0]))

    comparison = compare_runs(evaluations, sort_cutoff)
    for row in comparison:
        measures = next(ev for ev in evaluations if ev.run_tag == row["run_tag"]).measures()
        if not row["baseline"]:
            row.update({k: v for k, v in measures.items() if k != "map"})
    fields = ["rank_by_map", "rank_by_mod", "run_tag", "baseline", "map"]
    fields += [k for k in comparison[0] if k not in fields] if comparison else []
    _table(config, "runs_comparison", comparison, fields)

    scored = [ev for ev in evaluations if ev.run_tag not in (GOLD_TAG, MAX_WITH_QRELS_TAG)
              and ev.topics]
    corr_cutoff = 20 if 20 in config.cutoffs else sort_cutoff
    if len(scored) >= 3:
        names = list(scored[0].measures())
        corr = correlate({n: [ev.measures()[n] for ev in scored] for n in names},
                         [ev.aggregates[corr_cutoff].mean_mod for ev in scored])
        corr_rows = [{"measure": n, "cutoff": corr_cutoff, **v} for n, v in corr.items()]
        _table(config, "correlation", corr_rows,
               ["measure", "cutoff", "n", "pearson", "spearman", "slope", "intercept"])

    if config.format == "svg":
        order = [row["run_tag"] for row in comparison]
        by_tag = {ev.run_tag: ev for ev in evaluations}
        groups = {tag: [r.report.mod * 100 for r in by_tag[tag].results[sort_cutoff]]
                  for tag in order}
        _write(config, f"boxplot_mod@{sort_cutoff:g}.svg",
               render_boxplot_svg(groups, f"relative difference per outcome @{sort_cutoff:g}%",
                                  clamp=config.clamp))
    return EXIT_OK


def _resolve_removals(removals, corpus: Corpus) -> tuple[int, ...]:
    largest = max((len(corpus.mapping.publications(r)) for r in corpus.reviews), default=0)
    counts = sorted({largest if c == "all" else c for c in removals})
    return tuple(counts)


def cmd_simulate(config: CliConfig) -> int:
    corpus = _corpus(config)
    try:
        spec = SimulationSpec(_resolve_removals(config.removals, corpus), config.seeds,
                              config.base_seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    table = simulate_removals(corpus, spec)
    for rid in table.skipped_reviews:
        print(f"warning: review {rid} has no included publications; skipped", file=sys.stderr)
    columns, rows = report.simulation_matrix(table)
    seed_rows = report.simulation_seed_rows(table)
    if config.format == "json":
        _write(config, "simulation.json", report.to_json({"columns": columns, "rows": rows,
                                                          "per_seed": seed_rows}))
    else:
        _write(config, "simulation.csv", report.to_csv(rows, columns))
        _write(config, "simulation_seeds.csv",
               report.to_csv(seed_rows, report.SIMULATION_SEED_FIELDS))
    if config.format == "svg":
        mods = {str(c.removal_count): [m * 100 for m in c.outcome_mod] for c in table.columns}
        _write(config, "simulation_mod.svg",
               render_boxplot_svg(mods, "relative difference by publications removed",
                                  clamp=config.clamp))
        dcis = {str(c.removal_count): [d for d in c.outcome_delta_ci if d is not None]
                for c in table.columns}
        _write(config, "simulation_delta_ci.svg",
               render_boxplot_svg(dcis, "distance from CI by publications removed",
                                  axis_label="distance from CI"))
    return EXIT_OK


def cmd_pareto(config: CliConfig) -> int:
    cutoff = config.cutoff if config.cutoff is not None else 5
    if config.points is not None:
        try:
            points = report.read_pareto_points(Path(config.points).read_bytes())
        except (ValueError, KeyError) as exc:
            print(f"error: {config.points}: {exc}", file=sys.stderr)
            return EXIT_INVALID
    else:
        corpus = _corpus(config)
        evaluations = _evaluate_all(config, corpus, (cutoff,))
        # gold is the best achievable point, not the gold ranking cut at k%
        points = [(ev.run_tag, *ev.pareto_objectives(cutoff)) for ev in evaluations
                  if ev.run_tag != GOLD_TAG]
        points.append((GOLD_TAG, 0, 0.0))
    result = pareto_frontier(points)
    _table(config, "pareto", report.pareto_rows(result), report.PARETO_FIELDS)
    _write(config, "pareto.svg", render_pareto_svg(result, f"Pareto frontier @{cutoff:g}%"))
    return EXIT_OK


def cmd_report(config: CliConfig) -> int:
    """Forest plots for every outcome, optionally as recomputed from one run at a cutoff."""
    corpus = _corpus(config)
    run = _load_runs(config.runs)[0] if config.runs else None
    cutoff = config.cutoff if config.cutoff is not None else 30
    for rid in corpus.review_ids():
        included = None
        if run is not None:
            included = studies_found(rid, retrieved_at(run.ranking(rid), cutoff), corpus.mapping)
        for comparison, outcome in corpus.reviews[rid].iter_outcomes():
            pooled = pool_outcome(outcome, included)
            name = f"forest/{rid}/{comparison.comparison_id}__{outcome.outcome_id}.svg"
            _write(config, name, render_forest_svg(outcome, pooled, included))
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "eval-run": cmd_eval_run, "simulate": cmd_simulate,
            "pareto": cmd_pareto, "report": cmd_report}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="outcomeval",
        description="Outcome-based evaluation of systematic review screening runs.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, runs=True):
        p.add_argument("--corpus", type=Path, help="directory with review files (or reviews/)")
        p.add_argument("--mapping", type=Path, help="study/publication CSV "
                       "(default: <corpus>/mapping.csv)")
        p.add_argument("--qrels", type=Path, help="qrels file (default: "
                       "<corpus>/qrels_<level>.txt)")
        p.add_argument("--level", choices=("fulltext", "abstract"), default="fulltext")
        p.add_argument("--out", type=Path, default=Path("out"))
        p.add_argument("--format", choices=("csv", "json", "svg"), default="csv")
        if runs:
            p.add_argument("--runs", "--run", dest="runs", type=Path, nargs="+", default=[],
                           help="run files or directories of run files")

    p = sub.add_parser("validate", help="parse all inputs and print a summary")
    common(p)
    p = sub.add_parser("eval-run", help="evaluate runs at percentage cutoffs")
    common(p)
    p.add_argument("--cutoffs", type=_percent_list, default=DEFAULT_CUTOFFS)
    p.add_argument("--no-baselines", dest="baselines", action="store_false")
    p.add_argument("--clamp", type=float, help="cut the box plot axis at this value")
    p = sub.add_parser("simulate", help="random publication removal simulation")
    common(p, runs=False)
    p.add_argument("--removals", type=_removal_list, default=DEFAULT_REMOVAL_COUNTS,
                   help="comma-separated counts; 'all' removes every publication")
    p.add_argument("--seeds", type=int, default=20)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--clamp", type=float)
    p = sub.add_parser("pareto", help="Pareto frontier over runs or a points CSV")
    common(p)
    p.add_argument("--cutoff", type=float, default=None)
    p.add_argument("--points", type=Path, help="CSV with run_tag,x,y_raw (skips evaluation)")
    p.add_argument("--no-baselines", dest="baselines", action="store_false")
    p = sub.add_parser("report", help="forest plots per outcome")
    common(p)
    p.add_argument("--cutoff", type=float, default=None)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    options = {k: v for k, v in vars(args).items() if k != "verbose"}
    if options.get("format") == "svg" and args.command == "validate":
        options["format"] = "csv"
    try:
        config = CliConfig(**options)
        return COMMANDS[args.command](config)
    except ConfigError as exc:
        parser.error(str(exc))
    except (EvidenceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
