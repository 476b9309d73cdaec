"""creascore: creativity criteria scoring and evaluation for timestamped
artifact corpora.

Pipeline: ingest a corpus (scalar and vector attributes), build per-attribute
similarity graphs split by time direction, solve a propagation fixed point
for novelty/influence/aggregate scores, measure unexpectedness against the
recent past, then evaluate everything by rating-prediction regressions and
correlation tables.
"""

from .backend import active_backend, backend_name, compiled_available
from .config import ConfigError, EngineConfig, apply_overrides, load_config
from .dataset import (
    MISSING,
    ArtifactRecord,
    AttributeSpec,
    Corpus,
    LabelSpec,
    ValueFeatures,
    impute,
    load_corpus,
    load_schema,
    normalize_numeric,
    pca_value_features,
    write_corpus_files,
)
from .errors import (
    ConvergenceError,
    EngineError,
    ImputationError,
    IntegrityError,
    ParseError,
    SchemaError,
    ThresholdError,
    UndefinedCorrelationError,
)
from .experiments import (
    ALL_COMBINATIONS,
    COMBINATIONS,
    MODELS,
    SCORE_KINDS,
    EngineScores,
    ExperimentReport,
    FeatureCombination,
    ImprovementRow,
    PairScores,
    assemble_features,
    attribute_kernel_pairs,
    chronology_probe,
    combination,
    compute_correlations,
    compute_scores,
    generate_synthetic_corpus,
    improvement_percent,
    pearson,
    run_benchmark,
    write_correlations_csv,
    write_heatmap_csvs,
    write_improvements_csv,
    write_rmse_csv,
)
from .graph import (
    CreativityScores,
    DirectedGraphPair,
    GraphConfig,
    ThresholdRule,
    build_graph_pair,
    compute_threshold,
    effective_matrix,
    solve_scores,
)
from .regression import (
    FittedModel,
    LabeledDesign,
    SplitSpec,
    fit_knn,
    fit_ridge,
    normalize_labels,
    predict,
    rmse,
    split,
)
from .similarity import (
    SimilarityMatrix,
    build_similarity_matrix,
    clamp_nonnegative,
    cosine_similarity,
    exponential_similarity,
    kernels_for,
    linear_similarity,
)
from .unexpectedness import (
    EMPTY_WINDOW_POLICIES,
    MEASURES,
    UnexpectednessConfig,
    predecessor_window,
    unexpectedness_score,
    unexpectedness_vector,
)

__version__ = "0.1.0"

__all__ = [
    "ALL_COMBINATIONS",
    "COMBINATIONS",
    "ArtifactRecord",
    "AttributeSpec",
    "ConfigError",
    "ConvergenceError",
    "Corpus",
    "CreativityScores",
    "DirectedGraphPair",
    "EngineConfig",
    "EMPTY_WINDOW_POLICIES",
    "EngineError",
    "EngineScores",
    "ExperimentReport",
    "MEASURES",
    "FeatureCombination",
    "FittedModel",
    "GraphConfig",
    "ImprovementRow",
    "ImputationError",
    "IntegrityError",
    "LabelSpec",
    "LabeledDesign",
    "MISSING",
    "MODELS",
    "PairScores",
    "ParseError",
    "SCORE_KINDS",
    "SchemaError",
    "SimilarityMatrix",
    "SplitSpec",
    "ThresholdError",
    "ThresholdRule",
    "UndefinedCorrelationError",
    "UnexpectednessConfig",
    "ValueFeatures",
    "active_backend",
    "apply_overrides",
    "assemble_features",
    "attribute_kernel_pairs",
    "backend_name",
    "build_graph_pair",
    "build_similarity_matrix",
    "chronology_probe",
    "clamp_nonnegative",
    "combination",
    "compiled_available",
    "compute_correlations",
    "compute_scores",
    "compute_threshold",
    "cosine_similarity",
    "effective_matrix",
    "exponential_similarity",
    "fit_knn",
    "fit_ridge",
    "generate_synthetic_corpus",
    "improvement_percent",
    "impute",
    "kernels_for",
    "linear_similarity",
    "load_config",
    "load_corpus",
    "load_schema",
    "normalize_labels",
    "normalize_numeric",
    "pca_value_features",
    "pearson",
    "predecessor_window",
    "predict",
    "rmse",
    "run_benchmark",
    "solve_scores",
    "split",
    "unexpectedness_score",
    "unexpectedness_vector",
    "write_corpus_files",
    "write_correlations_csv",
    "write_heatmap_csvs",
    "write_improvements_csv",
    "write_rmse_csv",
]
