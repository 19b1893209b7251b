"""Correlation between mean relative difference and traditional measures."""

from __future__ import annotations

import math
from typing import Mapping, Sequence

import numpy as np
from scipy import stats


def correlate(measure_values: Mapping[str, Sequence[float]],
              mean_mod: Sequence[float]) -> dict[str, dict[str, float]]:
    """Pearson, Spearman and a least-squares line of mean_mod on each measure.

    Coefficients are NaN when either side is constant or fewer than 3 runs exist.
    """
    y = np.asarray(mean_mod, dtype=float)
    out = {}
    for name, values in measure_values.items():
        x = np.asarray(values, dtype=float)
        if len(x) != len(y):
            raise ValueError(f"{name}: {len(x)} values for {len(y)} runs")
        row = {"pearson": math.nan, "spearman": math.nan, "slope": math.nan,
               "intercept": math.nan, "n": float(len(x))}
        if len(x) >= 3 and np.ptp(x) > 0 and np.ptp(y) > 0:
            row["pearson"] = float(stats.pearsonr(x, y)[0])
            row["spearman"] = float(stats.spearmanr(x, y)[0])
            fit = stats.linregress(x, y)
            row["slope"], row["intercept"] = float(fit.slope), float(fit.intercept)
        out[name] = row
    return out
