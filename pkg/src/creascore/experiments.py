"""The two analyses: per-attribute correlation of creativity measures with
labels, and the feature-combination RMSE benchmark, plus the synthetic
corpus generator used to verify both ends.
"""

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .dataset import (
    ArtifactRecord,
    AttributeSpec,
    Corpus,
    LabelSpec,
    ValueFeatures,
    pca_value_features,
)
from .errors import IntegrityError, UndefinedCorrelationError
from .graph import CreativityScores, GraphConfig, ThresholdRule, build_graph_pair, effective_matrix, solve_scores
from .regression import LabeledDesign, SplitSpec, fit_knn, fit_ridge, normalize_labels, predict, rmse, split
from .similarity import SimilarityMatrix, build_similarity_matrix, clamp_nonnegative, kernels_for
from .unexpectedness import MEASURES, UnexpectednessConfig, unexpectedness_vector

SCORE_KINDS = ("unexpectedness", "novelty", "influence", "aggregate")
MODELS = ("ridge", "knn")


@dataclass(frozen=True)
class FeatureCombination:
    """A named feature subset; every combination includes the PCA block."""

    code: str
    included: frozenset

    def __post_init__(self):
        if "PCA" not in self.included:
            raise ValueError("every combination includes the PCA features")


COMBINATIONS = {
    code: FeatureCombination(code, frozenset(members))
    for code, members in [
        ("Baseline", {"PCA"}),
        ("PN", {"PCA", "novelty"}),
        ("PI", {"PCA", "influence"}),
        ("PU", {"PCA", "unexpectedness"}),
        ("PUN", {"PCA", "unexpectedness", "novelty"}),
        ("PUI", {"PCA", "unexpectedness", "influence"}),
        ("PUNI", {"PCA", "unexpectedness", "novelty", "influence"}),
        ("PUNIA", {"PCA", "unexpectedness", "novelty", "influence", "aggregate"}),
    ]
}
ALL_COMBINATIONS = tuple(COMBINATIONS)


def combination(code: str) -> FeatureCombination:
    try:
        return COMBINATIONS[code]
    except KeyError:
        raise ValueError(f"unknown feature combination {code!r}") from None


@dataclass
class PairScores:
    """Everything computed for one (attribute, kernel) graph."""

    attribute: str
    kernel: str
    creativity: CreativityScores
    unexpectedness: dict[str, np.ndarray]
    empty_window: np.ndarray
    threshold: float


@dataclass
class EngineScores:
    pairs: tuple[tuple[str, str], ...]
    by_pair: dict[tuple[str, str], PairScores]

    def vector(self, kind: str, pair: tuple[str, str], measure: str) -> np.ndarray:
        ps = self.by_pair[pair]
        if kind == "novelty":
            return ps.creativity.novelty
        if kind == "influence":
            return ps.creativity.influence
        if kind == "aggregate":
            return ps.creativity.aggregate
        if kind == "unexpectedness":
            return ps.unexpectedness[measure]
        raise ValueError(f"unknown score kind {kind!r}")

    def all_converged(self) -> bool:
        return all(ps.creativity.converged for ps in self.by_pair.values())


def attribute_kernel_pairs(corpus: Corpus) -> tuple[tuple[str, str], ...]:
    """(attribute, kernel) pairs in schema order, linear before exponential."""
    return tuple(
        (spec.name, kernel) for spec in corpus.attributes for kernel in kernels_for(spec)
    )


def compute_scores(
    corpus: Corpus,
    graph_config: GraphConfig,
    unexp_config: UnexpectednessConfig,
    measures: tuple[str, ...] = MEASURES,
    threads: int = 1,
    sim_provider=None,
) -> EngineScores:
    """Score every (attribute, kernel) graph of the corpus.

    sim_provider, when given, supplies raw similarity matrices (the CLI uses
    it for its on-disk cache); otherwise matrices are built in place. Pairs
    are independent, so they fan out across the worker pool; results land in
    per-pair slots and the output does not depend on thread count.
    """
    years = corpus.years
    pairs = attribute_kernel_pairs(corpus)

    def one(pair: tuple[str, str]) -> PairScores:
        attr, kernel = pair
        raw = sim_provider(attr, kernel) if sim_provider else build_similarity_matrix(corpus, attr, kernel)
        sim = clamp_nonnegative(raw)
        graphs = build_graph_pair(sim, years, graph_config)
        creativity = solve_scores(graphs, graph_config)
        unexp = {}
        empty = np.zeros(corpus.m, dtype=bool)
        for measure in measures:
            vec, empty = unexpectedness_vector(sim, years, replace(unexp_config, measure=measure))
            unexp[measure] = vec
        return PairScores(
            attribute=attr,
            kernel=kernel,
            creativity=creativity,
            unexpectedness=unexp,
            empty_window=empty,
            threshold=graphs.threshold,
        )

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, pairs))
    else:
        results = [one(pair) for pair in pairs]
    return EngineScores(pairs=pairs, by_pair={(r.attribute, r.kernel): r for r in results})


def assemble_features(
    value: ValueFeatures,
    scores: EngineScores,
    combo: FeatureCombination,
    unexp_measure: str = "mean",
) -> tuple[np.ndarray, tuple[str, ...]]:
    """Concatenate the PCA block with one column per (attribute, kernel) for
    each included measure: measures in code order, attributes in schema
    order, linear before exponential."""
    m = value.matrix.shape[0]
    blocks = [value.matrix]
    names = list(value.feature_names)
    for kind in SCORE_KINDS:
        if kind not in combo.included:
            continue
        for pair in scores.pairs:
            column = scores.vector(kind, pair, unexp_measure)
            if column.shape[0] != m:
                raise IntegrityError(
                    f"{kind} column for {pair} has {column.shape[0]} rows, expected {m}"
                )
            blocks.append(column[:, None])
            names.append(f"{kind}:{pair[0]}:{pair[1]}")
    return np.hstack(blocks), tuple(names)


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Sample Pearson correlation; constant input has no defined correlation."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise ValueError("pearson needs two equal-length vectors of at least 2 samples")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = math.sqrt(float(xc @ xc))
    sy = math.sqrt(float(yc @ yc))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("correlation is undefined for a constant input")
    r = float(xc @ yc) / (sx * sy)
    return min(1.0, max(-1.0, r))


def improvement_percent(baseline: float, best: float) -> float:
    """Percent RMSE improvement of the best combination over the baseline."""
    return (baseline - best) / baseline * 100.0


def compute_correlations(
    scores: EngineScores,
    normalized: dict[str, np.ndarray],
    measure: str,
) -> dict[tuple[str, str, str, str], float | None]:
    """Full-corpus Pearson table: (attribute, kernel, score kind, label).

    A constant score or label vector has no defined correlation; the cell
    is None and stays blank in the emitted CSVs.
    """
    table = {}
    for pair in scores.pairs:
        for kind in SCORE_KINDS:
            vec = scores.vector(kind, pair, measure)
            for label, y in normalized.items():
                try:
                    r = pearson(vec, y)
                except UndefinedCorrelationError:
                    r = None
                table[(pair[0], pair[1], kind, label)] = r
    return table


@dataclass
class ImprovementRow:
    baseline_rmse: float
    best_rmse: float
    best_combination: str
    percent: float


@dataclass
class ExperimentReport:
    rmse_table: dict[tuple[str, str, str], float]
    improvements: dict[tuple[str, str], ImprovementRow]
    correlation_table: dict[tuple[str, str, str, str], float | None]
    labels: tuple[str, ...]
    combinations: tuple[str, ...]
    pairs: tuple[tuple[str, str], ...]
    seed: int
    config_hash: str
    convergence: dict[tuple[str, str], dict]
    backend: str
    chronology: dict


def run_benchmark(
    corpus: Corpus,
    graph_config: GraphConfig = GraphConfig(),
    unexp_config: UnexpectednessConfig = UnexpectednessConfig(),
    combinations: tuple[str, ...] = ALL_COMBINATIONS,
    labels: tuple[str, ...] | None = None,
    ridge_lambda: float = 1.0,
    knn_k: int = 5,
    seed: int = 0,
    train_fraction: float = 0.8,
    variance_fraction: float = 0.90,
    threads: int = 1,
    config_hash: str = "",
    scores: EngineScores | None = None,
    value: ValueFeatures | None = None,
) -> ExperimentReport:
    """Fit every (combination, model) per label and collect test RMSE,
    improvement rows and the full-corpus correlation table.

    The split permutation depends only on (seed, row count), so every
    combination and model of a label sees the same partition, which is what
    makes the RMSE cells comparable. Precomputed scores/value features may
    be passed in (the CLI reuses its stage cache that way).
    """
    if not corpus.labels:
        raise ValueError("benchmark needs a corpus with at least one label")
    label_names = tuple(labels) if labels else tuple(corpus.labels)
    for name in label_names:
        if name not in corpus.labels:
            raise ValueError(f"unknown label {name!r}")
    combos = tuple(combinations)
    for code in combos:
        combination(code)

    if value is None:
        value = pca_value_features(corpus, variance_fraction)
    if scores is None:
        scores = compute_scores(
            corpus,
            graph_config,
            unexp_config,
            measures=(unexp_config.measure,),
            threads=threads,
        )

    max_by_label = {spec.name: spec.max_value for spec in corpus.label_specs}
    normalized = {
        name: normalize_labels(corpus.labels[name], max_by_label.get(name, 1.0))
        for name in label_names
    }

    designs = {
        code: assemble_features(value, scores, combination(code), unexp_config.measure)
        for code in combos
    }
    split_spec = SplitSpec(train_fraction=train_fraction, seed=seed)

    def fit_cell(task):
        label, code = task
        features, names = designs[code]
        design = LabeledDesign(features, normalized[label], names)
        train, test = split(design, split_spec)
        cells = {}
        for model_kind in MODELS:
            if model_kind == "ridge":
                model = fit_ridge(train, ridge_lambda=ridge_lambda)
            else:
                model = fit_knn(train, k=knn_k)
            cells[(label, code, model_kind)] = rmse(predict(model, test.features), test.labels)
        return cells

    tasks = [(label, code) for label in label_names for code in combos]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(fit_cell, tasks))
    else:
        results = [fit_cell(task) for task in tasks]
    rmse_table = {}
    for cells in results:
        rmse_table.update(cells)

    improvements = {}
    if "Baseline" in combos:
        for label in label_names:
            for model_kind in MODELS:
                baseline = rmse_table[(label, "Baseline", model_kind)]
                best_code = min(combos, key=lambda c: rmse_table[(label, c, model_kind)])
                best = rmse_table[(label, best_code, model_kind)]
                improvements[(label, model_kind)] = ImprovementRow(
                    baseline_rmse=baseline,
                    best_rmse=best,
                    best_combination=best_code,
                    percent=improvement_percent(baseline, best),
                )

    correlation_table = compute_correlations(scores, normalized, unexp_config.measure)

    convergence = {
        pair: {
            "iterations": ps.creativity.iterations_used,
            "converged": ps.creativity.converged,
            "threshold": ps.threshold,
        }
        for pair, ps in scores.by_pair.items()
    }

    from .backend import backend_name

    return ExperimentReport(
        rmse_table=rmse_table,
        improvements=improvements,
        correlation_table=correlation_table,
        labels=label_names,
        combinations=combos,
        pairs=scores.pairs,
        seed=seed,
        config_hash=config_hash,
        convergence=convergence,
        backend=backend_name(),
        chronology=chronology_probe(alpha=graph_config.alpha, beta=graph_config.beta),
    )


def generate_synthetic_corpus(
    m: int,
    attributes: int,
    seed: int,
    label_rule: str = "value_only",
    dimension: int = 6,
    noise_fraction: float = 0.05,
) -> Corpus:
    """Seed-deterministic verification corpus: random years over four
    decades, random vector attributes, and a rating label planted on the
    chosen signal.

    value_only labels are linear in the raw vector entries; novelty_driven
    and unexpectedness_driven labels lean on the engine-computed score (so
    a model that sees that score column can explain what the value features
    alone cannot). Noise is Gaussian with sigma = noise_fraction of the
    0..10 label range.
    """
    if m < 10:
        raise ValueError("synthetic corpus needs at least 10 artifacts")
    if label_rule not in ("value_only", "novelty_driven", "unexpectedness_driven"):
        raise ValueError(f"unknown label rule {label_rule!r}")
    rng = np.random.default_rng(seed)
    years = rng.integers(1980, 2020, size=m)
    specs = tuple(
        AttributeSpec(name=f"topic{k}", kind="vector", dimension=dimension, similarity_kind="cosine")
        for k in range(attributes)
    )
    blocks = [rng.standard_normal((m, dimension)) for _ in range(attributes)]

    records = tuple(
        ArtifactRecord(
            id=f"art{idx:04d}",
            time=int(years[idx]),
            values=tuple(block[idx] for block in blocks),
        )
        for idx in range(m)
    )
    base = Corpus(attributes=specs, artifacts=records)

    def zscore(v: np.ndarray) -> np.ndarray:
        sd = v.std()
        return (v - v.mean()) / sd if sd > 0 else np.zeros_like(v)

    flat = np.hstack(blocks)
    value_signal = zscore(flat @ rng.standard_normal(flat.shape[1]))

    if label_rule == "value_only":
        raw = 5.0 + 1.2 * value_signal
    else:
        engine = compute_scores(
            base,
            GraphConfig(),
            UnexpectednessConfig(measure="mean"),
            measures=("mean",),
        )
        kind = "novelty" if label_rule == "novelty_driven" else "unexpectedness"
        planted = np.sum(
            [zscore(engine.vector(kind, pair, "mean")) for pair in engine.pairs], axis=0
        )
        raw = 5.0 + 1.5 * zscore(planted) + 0.3 * value_signal

    raw = raw + rng.normal(0.0, noise_fraction * 10.0, size=m)
    ratings = np.clip(raw, 0.0, 10.0)
    return replace(
        base,
        labels={"rating": ratings},
        label_specs=(LabelSpec(name="rating", max_value=10.0),),
    )


def chronology_probe(k: int = 5, alpha: float = 0.95, beta: float = 0.2) -> dict:
    """Score k identical artifacts at consecutive years and compare the
    aggregate ordering against a dense fixed-point solve.

    Identical artifacts make every forward weight equal, which a percentile
    threshold would erase entirely, so the probe pins a fixed threshold of
    0.5 to keep the edges alive. The observed ordering is recorded, not
    presumed.
    """
    years = np.arange(2000, 2000 + k, dtype=np.int64)
    sim = SimilarityMatrix("probe", "linear", np.ones((k, k)))
    config = GraphConfig(alpha=alpha, beta=beta, threshold_rule=ThresholdRule.fixed(0.5))
    graphs = build_graph_pair(sim, years, config)
    scores = solve_scores(graphs, config)

    dense = effective_matrix(graphs, config)
    x = np.full(k, 1.0 / k)
    for _ in range(200000):
        nxt = dense @ x
        nxt /= nxt.sum()
        if np.abs(nxt - x).sum() < 1e-12:
            x = nxt
            break
        x = nxt

    engine_order = np.argsort(-scores.aggregate, kind="stable")
    oracle_order = np.argsort(-x, kind="stable")
    return {
        "k": k,
        "years": [int(y) for y in years],
        "alpha": alpha,
        "beta": beta,
        "threshold_rule": str(config.threshold_rule),
        "engine_order": [int(i) for i in engine_order],
        "oracle_order": [int(i) for i in oracle_order],
        "orders_match": bool((engine_order == oracle_order).all()),
        "aggregate": [float(v) for v in scores.aggregate],
    }


def _fmt(x: float) -> str:
    return repr(float(x))


def write_rmse_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "combination", "model", "rmse"])
        for label in report.labels:
            for code in report.combinations:
                for model_kind in MODELS:
                    writer.writerow(
                        [label, code, model_kind, _fmt(report.rmse_table[(label, code, model_kind)])]
                    )


def write_improvements_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(
            ["label", "model", "baseline_rmse", "best_rmse", "best_combination", "improvement_percent"]
        )
        for label in report.labels:
            for model_kind in MODELS:
                row = report.improvements.get((label, model_kind))
                if row is None:
                    continue
                writer.writerow(
                    [
                        label,
                        model_kind,
                        _fmt(row.baseline_rmse),
                        _fmt(row.best_rmse),
                        row.best_combination,
                        _fmt(row.percent),
                    ]
                )


def write_correlations_csv(report: ExperimentReport, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["attribute", "kernel", "measure", "label", "pearson_r"])
        for attr, kernel in report.pairs:
            for kind in SCORE_KINDS:
                for label in report.labels:
                    r = report.correlation_table[(attr, kernel, kind, label)]
                    writer.writerow([attr, kernel, kind, label, "" if r is None else _fmt(r)])


def write_heatmap_csvs(report: ExperimentReport, directory) -> list:
    """One CSV matrix per score kind: attribute-kernel rows, label columns."""
    paths = []
    for kind in SCORE_KINDS:
        path = directory / f"heatmap_{kind}.csv"
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["attribute_kernel", *report.labels])
            for attr, kernel in report.pairs:
                row = [f"{attr}:{kernel}"]
                for label in report.labels:
                    r = report.correlation_table[(attr, kernel, kind, label)]
                    row.append("" if r is None else _fmt(r))
                writer.writerow(row)
        paths.append(path)
    return paths
