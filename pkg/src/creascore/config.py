"""Run configuration: one JSON file covering every pipeline stage, with
CLI flag overrides layered on top. A minimal (empty) config runs end to
end on defaults.
"""

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .experiments import ALL_COMBINATIONS, combination
from .graph import GraphConfig, ThresholdRule
from .unexpectedness import UnexpectednessConfig


class ConfigError(ValueError):
    """Bad config file or flag value; the CLI reports these as usage errors."""


@dataclass(frozen=True)
class EngineConfig:
    schema: Path | None = None
    table: Path | None = None
    vectors: Path | None = None
    cache_dir: Path = Path("cache")
    output_dir: Path = Path("out")
    graph: GraphConfig = field(default_factory=GraphConfig)
    unexpectedness: UnexpectednessConfig = field(default_factory=UnexpectednessConfig)
    ridge_lambda: float = 1.0
    knn_k: int = 5
    seed: int = 0
    train_fraction: float = 0.8
    variance_fraction: float = 0.90
    combinations: tuple[str, ...] = ALL_COMBINATIONS
    labels: tuple[str, ...] = ()
    threads: int = 1
    strict: bool = False

    def __post_init__(self):
        for code in self.combinations:
            try:
                combination(code)
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if self.knn_k < 1:
            raise ConfigError("knn_k must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError("train_fraction must be in (0, 1)")
        if not 0.0 < self.variance_fraction <= 1.0:
            raise ConfigError("variance_fraction must be in (0, 1]")
        if self.ridge_lambda < 0.0:
            raise ConfigError("ridge_lambda must be >= 0")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def canonical_dict(self) -> dict:
        """Plain-JSON form; the basis for config hashing and the manifest."""
        return {
            "paths": {
                "schema": str(self.schema) if self.schema else None,
                "table": str(self.table) if self.table else None,
                "vectors": str(self.vectors) if self.vectors else None,
            },
            "graph": {
                "alpha": self.graph.alpha,
                "beta": self.graph.beta,
                "threshold_rule": str(self.graph.threshold_rule),
                "tol": self.graph.convergence_tol,
                "max_iters": self.graph.max_iterations,
            },
            "unexpectedness": {
                "window_years": self.unexpectedness.window_years,
                "measure": self.unexpectedness.measure,
                "empty_window_policy": self.unexpectedness.empty_window_policy,
            },
            "regression": {
                "ridge_lambda": self.ridge_lambda,
                "knn_k": self.knn_k,
                "seed": self.seed,
                "train_fraction": self.train_fraction,
            },
            "variance_fraction": self.variance_fraction,
            "combinations": list(self.combinations),
            "labels": list(self.labels),
            "strict": self.strict,
        }

    def config_hash(self) -> str:
        payload = json.dumps(self.canonical_dict(), sort_keys=True).encode()
        return hashlib.sha256(payload).hexdigest()

    def scoring_hash_material(self) -> str:
        """The config subset that determines score-stage outputs."""
        subset = {
            "graph": self.canonical_dict()["graph"],
            "unexpectedness": self.canonical_dict()["unexpectedness"],
        }
        return json.dumps(subset, sort_keys=True)


_GRAPH_KEYS = {"alpha", "beta", "threshold_rule", "tol", "max_iters"}
_UNEXP_KEYS = {"window_years", "measure", "empty_window_policy"}
_REGRESSION_KEYS = {"ridge_lambda", "knn_k", "seed", "train_fraction"}
_PATH_KEYS = {"schema", "table", "vectors", "cache_dir", "output_dir"}
_TOP_KEYS = _PATH_KEYS | {
    "graph",
    "unexpectedness",
    "regression",
    "variance_fraction",
    "combinations",
    "labels",
    "threads",
    "strict",
}


def _check_keys(section: dict, allowed: set, where: str) -> None:
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} config keys: {', '.join(unknown)}")


def load_config(path=None) -> EngineConfig:
    """Build an EngineConfig from a JSON file (every key optional)."""
    if path is None:
        return EngineConfig()
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ConfigError(f"config {path} must be a JSON object")
    _check_keys(payload, _TOP_KEYS, "top-level")

    graph_section = payload.get("graph", {})
    _check_keys(graph_section, _GRAPH_KEYS, "graph")
    unexp_section = payload.get("unexpectedness", {})
    _check_keys(unexp_section, _UNEXP_KEYS, "unexpectedness")
    reg_section = payload.get("regression", {})
    _check_keys(reg_section, _REGRESSION_KEYS, "regression")

    try:
        graph = GraphConfig(
            alpha=float(graph_section.get("alpha", 0.95)),
            beta=float(graph_section.get("beta", 0.2)),
            threshold_rule=ThresholdRule.parse(
                str(graph_section.get("threshold_rule", "percentile(50)"))
            ),
            convergence_tol=float(graph_section.get("tol", 1e-10)),
            max_iterations=int(graph_section.get("max_iters", 200)),
        )
        unexp = UnexpectednessConfig(
            window_years=int(unexp_section.get("window_years", 5)),
            measure=str(unexp_section.get("measure", "mean")),
            empty_window_policy=str(unexp_section.get("empty_window_policy", "zero")),
        )
        return EngineConfig(
            schema=Path(payload["schema"]) if payload.get("schema") else None,
            table=Path(payload["table"]) if payload.get("table") else None,
            vectors=Path(payload["vectors"]) if payload.get("vectors") else None,
            cache_dir=Path(payload.get("cache_dir", "cache")),
            output_dir=Path(payload.get("output_dir", "out")),
            graph=graph,
            unexpectedness=unexp,
            ridge_lambda=float(reg_section.get("ridge_lambda", 1.0)),
            knn_k=int(reg_section.get("knn_k", 5)),
            seed=int(reg_section.get("seed", 0)),
            train_fraction=float(reg_section.get("train_fraction", 0.8)),
            variance_fraction=float(payload.get("variance_fraction", 0.90)),
            combinations=tuple(payload.get("combinations", ALL_COMBINATIONS)),
            labels=tuple(payload.get("labels", ())),
            threads=int(payload.get("threads", 1)),
            strict=bool(payload.get("strict", False)),
        )
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"config {path}: {exc}") from exc


def apply_overrides(
    config: EngineConfig,
    schema=None,
    table=None,
    vectors=None,
    cache_dir=None,
    output_dir=None,
    seed=None,
    beta=None,
    threads=None,
    strict=None,
    combinations=None,
    measure=None,
) -> EngineConfig:
    """Layer CLI flags over a loaded config; flags win."""
    updates = {}
    if schema is not None:
        updates["schema"] = Path(schema)
    if table is not None:
        updates["table"] = Path(table)
    if vectors is not None:
        updates["vectors"] = Path(vectors)
    if cache_dir is not None:
        updates["cache_dir"] = Path(cache_dir)
    if output_dir is not None:
        updates["output_dir"] = Path(output_dir)
    if seed is not None:
        updates["seed"] = int(seed)
    if beta is not None:
        try:
            updates["graph"] = replace(config.graph, beta=float(beta))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    if threads is not None:
        updates["threads"] = int(threads)
    if strict:
        updates["strict"] = True
    if combinations is not None:
        codes = tuple(c.strip() for c in combinations.split(",") if c.strip())
        if not codes:
            raise ConfigError("--combinations must name at least one combination")
        updates["combinations"] = codes
    if measure is not None:
        try:
            updates["unexpectedness"] = replace(config.unexpectedness, measure=measure)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        return replace(config, **updates) if updates else config
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
