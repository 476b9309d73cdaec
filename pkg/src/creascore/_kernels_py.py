"""Pure-numpy implementations of the hot kernels.

The compiled extension (``creascore._kernels``) implements the same two
functions with fused loops; this module is the fallback used when the
extension was not built. Both backends must return identical shapes and
agree numerically (bitwise for everything except the exponential kernel,
where the libm and numpy exp implementations may differ in the last ulp).
"""

import numpy as np

KIND_LINEAR = 0
KIND_EXPONENTIAL = 1


def pairwise_numeric(values: np.ndarray, kind: int) -> np.ndarray:
    """All-pairs similarity of a numeric attribute.

    kind 0: 1/(1+|a-b|), kind 1: exp(-|a-b|). Returns a dense m x m
    symmetric matrix with unit diagonal.
    """
    v = np.ascontiguousarray(values, dtype=np.float64)
    d = np.abs(v[:, None] - v[None, :])
    if kind == KIND_LINEAR:
        return 1.0 / (1.0 + d)
    if kind == KIND_EXPONENTIAL:
        return np.exp(-d)
    raise ValueError(f"unknown numeric kernel code {kind}")


def graph_edges(sim: np.ndarray, times: np.ndarray, tau: float):
    """Threshold-and-reverse the forward-in-time edges of a similarity matrix.

    Candidate edges are the ordered pairs (i, j) with t(i) < t(j). Each
    candidate's residual sim(i,j) - tau either stays at (i, j) when
    nonnegative (subsequent graph) or is reversed to (j, i) with negated
    weight (prior graph). Returns the two unnormalized matrices.
    """
    s = np.asarray(sim, dtype=np.float64)
    t = np.asarray(times)
    forward = t[:, None] < t[None, :]
    resid = s - tau
    subsequent = np.where(forward & (resid >= 0.0), resid, 0.0)
    prior = np.where(forward & (resid < 0.0), -resid, 0.0).T
    return np.ascontiguousarray(prior), subsequent
