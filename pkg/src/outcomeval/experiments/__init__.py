"""Removal simulations, run evaluation, baselines and Pareto analysis."""

from .correlation import correlate
from .pareto import ParetoPoint, dominates, frontier, pareto_frontier
from .rng import SplitMix64, derive_seed
from .runs import (
    DEFAULT_CUTOFFS, GOLD_TAG, MAX_WITH_QRELS_TAG, OutcomeResult, RunEvaluation, compare_runs,
    evaluate_run, gold_baseline, max_with_qrels_baseline,
)
from .simulation import (
    DEFAULT_REMOVAL_COUNTS, SimulationColumn, SimulationSpec, SimulationTable, removal_order,
    simulate_removals,
)
from .universe import EvaluatedOutcome, evaluation_universe

__all__ = [
    "DEFAULT_CUTOFFS", "DEFAULT_REMOVAL_COUNTS", "EvaluatedOutcome", "GOLD_TAG",
    "MAX_WITH_QRELS_TAG", "OutcomeResult", "ParetoPoint", "RunEvaluation", "SimulationColumn",
    "SimulationSpec", "SimulationTable", "SplitMix64", "compare_runs", "correlate",
    "derive_seed", "dominates", "evaluate_run", "evaluation_universe", "frontier",
    "gold_baseline", "max_with_qrels_baseline", "pareto_frontier", "removal_order",
    "simulate_removals",
]
