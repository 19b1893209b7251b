"""Non-dominated runs over (non-estimable outcomes, summed relative difference)."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable


@dataclass(frozen=True)
class ParetoPoint:
    run_tag: str
    x: float
    y: float
    dominated: bool
    y_raw: float = 0.0


def dominates(p: tuple[float, float], q: tuple[float, float]) -> bool:
    """p dominates q when it is no worse on both objectives and better on one."""
    return p[0] <= q[0] and p[1] <= q[1] and (p[0] < q[0] or p[1] < q[1])


def pareto_frontier(points: Iterable[tuple[str, float, float]]) -> list[ParetoPoint]:
    """Min-max normalise y over all points and flag dominated ones.

    Returns every point, ordered by (x, y, tag); the frontier is the subset
    with ``dominated=False``.  Callers include the gold baseline at (0, 0).
    """
    points = list(points)
    if not points:
        return []
    ys = [y for _, _, y in points]
    lo, hi = min(ys), max(ys)
    span = hi - lo
    normalised = [(tag, x, (y - lo) / span if span > 0 else 0.0, y) for tag, x, y in points]
    out = []
    for tag, x, y, raw in normalised:
        dominated = any(dominates((x2, y2), (x, y)) for _, x2, y2, _ in normalised)
        out.append(ParetoPoint(tag, x, y, dominated, raw))
    out.sort(key=lambda p: (p.x, p.y, p.run_tag))
    return out


def frontier(points: Iterable[tuple[str, float, float]]) -> list[ParetoPoint]:
    return [p for p in pareto_frontier(points) if not p.dominated]
