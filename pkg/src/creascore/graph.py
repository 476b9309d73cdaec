"""Time-directed creativity graph and score propagation.

From one similarity matrix and the artifact years, two column-stochastic
graphs are built:

* subsequent graph: forward-in-time edges whose similarity cleared the
  threshold, entry (i, j) crediting the earlier artifact i from the later
  artifact j. Propagation over it yields influence.
* prior graph: edges reversed because their similarity fell below the
  threshold, entry (j, i) crediting the later, dissimilar artifact j from
  the earlier artifact i. Propagation over it yields novelty.

The aggregate score is the stationary vector of the damped combination of
both graphs, found by power iteration; novelty and influence are the two
graph contributions at the fixed point.
"""

from dataclasses import dataclass

import numpy as np

from .backend import active_backend
from .errors import ThresholdError
from .similarity import SimilarityMatrix


@dataclass(frozen=True)
class ThresholdRule:
    """Edge-weight threshold: a fixed value, or a percentile of the strictly
    positive forward-edge weights (adapts to each attribute's scale)."""

    kind: str
    value: float

    def __post_init__(self):
        if self.kind not in ("fixed", "percentile"):
            raise ValueError(f"unknown threshold rule {self.kind!r}")
        if self.kind == "percentile" and not 0.0 < self.value < 100.0:
            raise ValueError("percentile must be in (0, 100)")

    @classmethod
    def fixed(cls, tau: float) -> "ThresholdRule":
        return cls("fixed", float(tau))

    @classmethod
    def percentile(cls, p: float) -> "ThresholdRule":
        return cls("percentile", float(p))

    @classmethod
    def parse(cls, text: str) -> "ThresholdRule":
        """Parse the config form, e.g. "percentile(50)" or "fixed(0.4)"."""
        text = text.strip()
        for kind in ("fixed", "percentile"):
            prefix = kind + "("
            if text.startswith(prefix) and text.endswith(")"):
                return cls(kind, float(text[len(prefix):-1]))
        raise ValueError(f"cannot parse threshold rule {text!r}")

    def __str__(self) -> str:
        value = f"{self.value:g}"
        return f"{self.kind}({value})"


@dataclass(frozen=True)
class GraphConfig:
    alpha: float = 0.95
    beta: float = 0.2
    threshold_rule: ThresholdRule = ThresholdRule.percentile(50)
    convergence_tol: float = 1e-10
    max_iterations: int = 200

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must be in (0, 1)")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must be in [0, 1]")
        if not self.convergence_tol > 0.0:
            raise ValueError("convergence_tol must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")


@dataclass
class DirectedGraphPair:
    """Column-normalized prior and subsequent graphs plus their dangling columns.

    Dangling columns (no outgoing weight) are stored all-zero; the solver
    redistributes their mass uniformly.
    """

    prior: np.ndarray
    subsequent: np.ndarray
    dangling_prior: np.ndarray
    dangling_subsequent: np.ndarray
    threshold: float

    @property
    def m(self) -> int:
        return self.prior.shape[0]

    @property
    def fully_dangling(self) -> bool:
        return len(self.dangling_prior) == self.m and len(self.dangling_subsequent) == self.m


@dataclass
class CreativityScores:
    """Aggregate, novelty and influence vectors for one (attribute, kernel) graph.

    Elementwise, aggregate = (1-alpha)/m + novelty + influence +
    uniform_correction, where uniform_correction is the dangling-column mass
    redistributed uniformly at the fixed point (0 when nothing dangles).
    """

    aggregate: np.ndarray
    novelty: np.ndarray
    influence: np.ndarray
    uniform_correction: float
    iterations_used: int
    converged: bool


def forward_mask(times: np.ndarray) -> np.ndarray:
    """Boolean matrix, True at (i, j) iff t(i) < t(j)."""
    t = np.asarray(times)
    return t[:, None] < t[None, :]


def compute_threshold(sim_forward: np.ndarray, rule: ThresholdRule) -> float:
    """Resolve a threshold rule against the masked forward-edge weights."""
    if rule.kind == "fixed":
        return rule.value
    weights = np.asarray(sim_forward)
    positive = weights[weights > 0.0]
    if positive.size == 0:
        raise ThresholdError("percentile threshold needs at least one positive forward edge")
    return float(np.percentile(positive, rule.value))


def _column_normalize(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sums = matrix.sum(axis=0)
    dangling = np.flatnonzero(sums == 0.0)
    scale = np.where(sums == 0.0, 1.0, sums)
    return matrix / scale, dangling


def build_graph_pair(sim: SimilarityMatrix, times: np.ndarray, config: GraphConfig) -> DirectedGraphPair:
    """Run the edge pipeline: forward selection, thresholding, reversal,
    time split, column normalization.

    A corpus whose forward pairs have no positive similarity (for example a
    single-year corpus) produces two fully dangling graphs; the percentile
    rule has nothing to measure there, so thresholding is skipped.
    """
    times = np.asarray(times, dtype=np.int64)
    m = sim.m
    if m == 0:
        raise ValueError("empty corpus")
    if times.shape[0] != m:
        raise ValueError("time vector length disagrees with similarity matrix")
    values = sim.values
    if values.min() < 0.0:
        raise ValueError("similarity entries must be nonnegative; clamp cosine first")

    mask = forward_mask(times)
    forward = np.where(mask, values, 0.0)
    if not (forward > 0.0).any():
        zero = np.zeros((m, m))
        everything = np.arange(m)
        return DirectedGraphPair(
            prior=zero,
            subsequent=zero.copy(),
            dangling_prior=everything,
            dangling_subsequent=everything.copy(),
            threshold=0.0,
        )

    tau = compute_threshold(forward, config.threshold_rule)
    prior, subsequent = active_backend().graph_edges(values, times, tau)
    # A node must not credit itself; the construction never writes the
    # diagonal, this pins the stated contract.
    np.fill_diagonal(prior, 0.0)
    np.fill_diagonal(subsequent, 0.0)
    prior, dangling_prior = _column_normalize(prior)
    subsequent, dangling_subsequent = _column_normalize(subsequent)
    return DirectedGraphPair(
        prior=prior,
        subsequent=subsequent,
        dangling_prior=dangling_prior,
        dangling_subsequent=dangling_subsequent,
        threshold=tau,
    )


def solve_scores(graphs: DirectedGraphPair, config: GraphConfig) -> CreativityScores:
    """Power-iterate the damped two-graph propagation to its stationary vector.

    Starts uniform, renormalizes to sum 1 each step, and redistributes the
    mass sitting on dangling columns uniformly so the effective iteration
    matrix stays column-stochastic. Novelty and influence are the raw prior
    and subsequent graph products at the fixed point; the redistributed mass
    is reported separately as uniform_correction.
    """
    m = graphs.m
    alpha, beta = config.alpha, config.beta
    prior, subsequent = graphs.prior, graphs.subsequent
    dang_p, dang_q = graphs.dangling_prior, graphs.dangling_subsequent

    c = np.full(m, 1.0 / m)
    converged = False
    iterations = 0
    for iterations in range(1, config.max_iterations + 1):
        mass_p = c[dang_p].sum()
        mass_q = c[dang_q].sum()
        nxt = (
            (1.0 - alpha) / m
            + alpha * beta * (prior @ c + mass_p / m)
            + alpha * (1.0 - beta) * (subsequent @ c + mass_q / m)
        )
        nxt /= nxt.sum()
        change = np.abs(nxt - c).sum()
        c = nxt
        if change < config.convergence_tol:
            converged = True
            break

    # Publish one exact application of the update so the returned vector
    # decomposes as (1-alpha)/m + novelty + influence + correction with no
    # iteration lag between the sum and its parts. Column-stochasticity
    # makes the published vector sum to 1 up to rounding.
    novelty = alpha * beta * (prior @ c)
    influence = alpha * (1.0 - beta) * (subsequent @ c)
    correction = (alpha * beta * c[dang_p].sum() + alpha * (1.0 - beta) * c[dang_q].sum()) / m
    aggregate = (1.0 - alpha) / m + novelty + influence + correction
    return CreativityScores(
        aggregate=aggregate,
        novelty=novelty,
        influence=influence,
        uniform_correction=float(correction),
        iterations_used=iterations,
        converged=converged,
    )


def effective_matrix(graphs: DirectedGraphPair, config: GraphConfig) -> np.ndarray:
    """Materialize the dense column-stochastic iteration matrix.

    Quadratic in memory; the solver never builds it. Exposed for oracle
    checks and the chronology probe.
    """
    m = graphs.m
    repaired_p = graphs.prior.copy()
    repaired_p[:, graphs.dangling_prior] = 1.0 / m
    repaired_q = graphs.subsequent.copy()
    repaired_q[:, graphs.dangling_subsequent] = 1.0 / m
    return (
        (1.0 - config.alpha) / m * np.ones((m, m))
        + config.alpha * config.beta * repaired_p
        + config.alpha * (1.0 - config.beta) * repaired_q
    )
