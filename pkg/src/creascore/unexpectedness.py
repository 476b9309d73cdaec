"""Unexpectedness: dissimilarity from the recent-past window.

For artifact i the window holds every artifact strictly earlier than i but
at most window_years before it. The score is the negated max, mean, or
inverse-time-weighted mean similarity over that window, so more similarity
to the recent past means less unexpectedness. Sums use math.fsum: the
correctly-rounded reduction keeps results identical no matter how the work
is vectorized or split across threads.
"""

import math
from dataclasses import dataclass

import numpy as np

from .similarity import SimilarityMatrix

MEASURES = ("max", "mean", "inverse_weighted")
EMPTY_WINDOW_POLICIES = ("zero", "flag")


@dataclass(frozen=True)
class UnexpectednessConfig:
    window_years: int = 5
    measure: str = "mean"
    empty_window_policy: str = "zero"

    def __post_init__(self):
        if self.window_years < 1:
            raise ValueError("window_years must be >= 1")
        if self.measure not in MEASURES:
            raise ValueError(f"unknown measure {self.measure!r}")
        if self.empty_window_policy not in EMPTY_WINDOW_POLICIES:
            raise ValueError(f"unknown empty-window policy {self.empty_window_policy!r}")


def predecessor_window(i: int, times: np.ndarray, window_years: int) -> np.ndarray:
    """Indices j with t(i) - window_years <= t(j) < t(i)."""
    times = np.asarray(times)
    t_i = times[i]
    return np.flatnonzero((times >= t_i - window_years) & (times < t_i))


def unexpectedness_score(
    i: int, sim: SimilarityMatrix, times: np.ndarray, config: UnexpectednessConfig
) -> float:
    """Score one artifact against its recent-past window.

    Empty window: 0.0 under the "zero" policy, NaN (marked missing) under
    "flag"; unexpectedness_vector surfaces the flag either way.
    """
    window = predecessor_window(i, times, config.window_years)
    if window.size == 0:
        return 0.0 if config.empty_window_policy == "zero" else math.nan
    sims = [float(sim.values[i, j]) for j in window]
    if config.measure == "max":
        return -max(sims)
    if config.measure == "mean":
        return -math.fsum(sims) / len(sims)
    t_i = int(times[i])
    weights = [1.0 / abs(t_i - int(times[j])) for j in window]
    # The window's strict upper bound excludes same-year predecessors, so
    # every |t(i) - t(j)| is at least one year.
    assert all(int(times[j]) != t_i for j in window)
    weighted = [w * s for w, s in zip(weights, sims)]
    return -math.fsum(weighted) / math.fsum(weights)


def unexpectedness_vector(
    sim: SimilarityMatrix, times: np.ndarray, config: UnexpectednessConfig
) -> tuple[np.ndarray, np.ndarray]:
    """Score every artifact; returns (scores, empty-window flags)."""
    times = np.asarray(times)
    m = sim.m
    if times.shape[0] != m:
        raise ValueError("time vector length disagrees with similarity matrix")
    scores = np.empty(m)
    empty = np.zeros(m, dtype=bool)
    for i in range(m):
        window = predecessor_window(i, times, config.window_years)
        empty[i] = window.size == 0
        scores[i] = unexpectedness_score(i, sim, times, config)
    return scores, empty
