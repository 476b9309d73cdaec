"""Batch CLI: ingest -> scores -> benchmark/correlate, with content-hash
caching between stages, plus synth for generating verification corpora.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure in
strict mode.
"""

import argparse
import csv
import hashlib
import json
import sys
import time
from pathlib import Path

import numpy as np

from .backend import backend_name
from .config import ConfigError, EngineConfig, apply_overrides, load_config
from .dataset import (
    impute,
    load_corpus,
    load_corpus_npz,
    load_schema,
    normalize_numeric,
    save_corpus_npz,
    write_corpus_files,
)
from .errors import ConvergenceError, EngineError
from .experiments import (
    EngineScores,
    ExperimentReport,
    PairScores,
    compute_correlations,
    compute_scores,
    generate_synthetic_corpus,
    run_benchmark,
    write_correlations_csv,
    write_heatmap_csvs,
    write_improvements_csv,
    write_rmse_csv,
)
from .graph import CreativityScores
from .regression import normalize_labels
from .similarity import dump_matrix, load_matrix
from .unexpectedness import MEASURES


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on usage errors; this CLI reserves 2
    for data errors, so usage problems are remapped to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file")
    common.add_argument("--schema", type=Path, help="attribute/label schema JSON")
    common.add_argument("--table", type=Path, help="artifact table CSV")
    common.add_argument("--vectors", type=Path, help="vector store JSON Lines")
    common.add_argument("--cache-dir", type=Path, help="stage cache directory")
    common.add_argument("--out", type=Path, dest="output_dir", help="report output directory")
    common.add_argument("--seed", type=int, help="random seed override")
    common.add_argument("--beta", type=float, help="novelty/influence mix override")
    common.add_argument("--threads", type=int, help="worker pool size")
    common.add_argument("--strict", action="store_true", help="fail on non-convergence")
    common.add_argument("--combinations", help="comma-separated combination codes")
    common.add_argument("--measure", choices=MEASURES, help="unexpectedness measure")

    parser = _Parser(prog="creascore", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="load, impute and normalize the corpus")
    p.set_defaults(func=cmd_ingest)
    p = sub.add_parser("scores", parents=[common], help="compute creativity score CSVs")
    p.set_defaults(func=cmd_scores)
    p = sub.add_parser("benchmark", parents=[common], help="rating-prediction benchmark report")
    p.set_defaults(func=cmd_benchmark)
    p = sub.add_parser("correlate", parents=[common], help="correlation tables only")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("synth", parents=[common], help="emit a synthetic corpus")
    p.add_argument("--m", type=int, default=200, help="number of artifacts")
    p.add_argument("--attributes", type=int, default=2, help="number of vector attributes")
    p.add_argument(
        "--label-rule",
        choices=("value_only", "novelty_driven", "unexpectedness_driven"),
        default="value_only",
    )
    p.set_defaults(func=cmd_synth)
    return parser


def _config_from_args(args) -> EngineConfig:
    config = load_config(args.config)
    return apply_overrides(
        config,
        schema=args.schema,
        table=args.table,
        vectors=args.vectors,
        cache_dir=args.cache_dir,
        output_dir=args.output_dir,
        seed=args.seed,
        beta=args.beta,
        threads=args.threads,
        strict=args.strict,
        combinations=args.combinations,
        measure=args.measure,
    )


def _file_digest(path: Path, h) -> None:
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)


def _ingest_hash(config: EngineConfig) -> str:
    h = hashlib.sha256()
    for path in (config.schema, config.table, config.vectors):
        if path is None:
            h.update(b"\x00absent")
        else:
            h.update(b"\x00file")
            _file_digest(Path(path), h)
    return h.hexdigest()


def stage_ingest(config: EngineConfig):
    """Load + impute + normalize, cached by input content hash.

    Returns (corpus, ingest_hash, reused).
    """
    if config.schema is None or config.table is None:
        raise ConfigError("ingest needs --schema and --table (or config paths)")
    ingest_hash = _ingest_hash(config)
    config.cache_dir.mkdir(parents=True, exist_ok=True)
    npz = config.cache_dir / f"corpus-{ingest_hash[:16]}.npz"
    if npz.exists():
        return load_corpus_npz(npz), ingest_hash, True
    attributes, label_specs = load_schema(config.schema)
    if any(a.kind == "vector" for a in attributes) and config.vectors is None:
        raise ConfigError("schema declares vector attributes; --vectors is required")
    vectors = config.vectors if config.vectors is not None else _empty_vector_store(config)
    corpus = load_corpus(config.table, vectors, attributes, label_specs)
    corpus = normalize_numeric(impute(corpus))
    save_corpus_npz(corpus, npz)
    return corpus, ingest_hash, False


def _empty_vector_store(config: EngineConfig) -> Path:
    path = config.cache_dir / "no-vectors.jsonl"
    if not path.exists():
        path.write_text("")
    return path


def _scores_hash(config: EngineConfig, ingest_hash: str) -> str:
    h = hashlib.sha256()
    h.update(ingest_hash.encode())
    h.update(config.scoring_hash_material().encode())
    return h.hexdigest()


def _sim_provider(config: EngineConfig, corpus, ingest_hash: str):
    """Similarity matrices cached as binary dumps keyed by corpus content."""
    from .similarity import build_similarity_matrix

    def provide(attribute: str, kernel: str):
        idx = corpus.attribute_index(attribute)
        path = config.cache_dir / f"sim-{ingest_hash[:16]}-a{idx}-{kernel}.csim"
        if path.exists():
            return load_matrix(path, attribute, kernel)
        sim = build_similarity_matrix(corpus, attribute, kernel)
        dump_matrix(path, sim)
        return sim

    return provide


def _save_scores_npz(path: Path, scores: EngineScores) -> None:
    meta = {
        "pairs": [list(p) for p in scores.pairs],
        "measures": list(MEASURES),
        "thresholds": [scores.by_pair[p].threshold for p in scores.pairs],
        "iterations": [scores.by_pair[p].creativity.iterations_used for p in scores.pairs],
        "converged": [scores.by_pair[p].creativity.converged for p in scores.pairs],
        "corrections": [scores.by_pair[p].creativity.uniform_correction for p in scores.pairs],
    }
    arrays = {}
    for idx, pair in enumerate(scores.pairs):
        ps = scores.by_pair[pair]
        arrays[f"nov_{idx}"] = ps.creativity.novelty
        arrays[f"inf_{idx}"] = ps.creativity.influence
        arrays[f"agg_{idx}"] = ps.creativity.aggregate
        arrays[f"emp_{idx}"] = ps.empty_window
        for measure in MEASURES:
            arrays[f"unx_{idx}_{measure}"] = ps.unexpectedness[measure]
    np.savez(path, meta=json.dumps(meta, sort_keys=True), **arrays)


def _load_scores_npz(path: Path) -> EngineScores:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        pairs = tuple((p[0], p[1]) for p in meta["pairs"])
        by_pair = {}
        for idx, pair in enumerate(pairs):
            creativity = CreativityScores(
                aggregate=data[f"agg_{idx}"],
                novelty=data[f"nov_{idx}"],
                influence=data[f"inf_{idx}"],
                uniform_correction=float(meta["corrections"][idx]),
                iterations_used=int(meta["iterations"][idx]),
                converged=bool(meta["converged"][idx]),
            )
            by_pair[pair] = PairScores(
                attribute=pair[0],
                kernel=pair[1],
                creativity=creativity,
                unexpectedness={m: data[f"unx_{idx}_{m}"] for m in meta["measures"]},
                empty_window=data[f"emp_{idx}"],
                threshold=float(meta["thresholds"][idx]),
            )
    return EngineScores(pairs=pairs, by_pair=by_pair)


def stage_scores(config: EngineConfig, corpus, ingest_hash: str):
    """All-measure score set, cached by (corpus content, scoring config).

    Returns (scores, scores_hash, reused).
    """
    scores_hash = _scores_hash(config, ingest_hash)
    npz = config.cache_dir / f"scores-{scores_hash[:16]}.npz"
    if npz.exists():
        return _load_scores_npz(npz), scores_hash, True
    scores = compute_scores(
        corpus,
        config.graph,
        config.unexpectedness,
        measures=MEASURES,
        threads=config.threads,
        sim_provider=_sim_provider(config, corpus, ingest_hash),
    )
    _save_scores_npz(npz, scores)
    return scores, scores_hash, False


def _convergence_gate(scores: EngineScores, strict: bool) -> bool:
    """Report non-converged graphs on stderr; True means strict failure."""
    stale = [
        pair for pair in scores.pairs if not scores.by_pair[pair].creativity.converged
    ]
    for pair in stale:
        ps = scores.by_pair[pair]
        print(
            f"warning: graph {pair[0]}:{pair[1]} did not converge within "
            f"{ps.creativity.iterations_used} iterations",
            file=sys.stderr,
        )
    if stale and strict:
        print("error: strict mode: power iteration failed to converge", file=sys.stderr)
        return True
    return False


def _fmt(x: float) -> str:
    return repr(float(x))


def _write_scores_csv(path: Path, corpus, scores: EngineScores) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "attribute", "kernel", "novelty", "influence", "aggregate"])
        for pair in scores.pairs:
            ps = scores.by_pair[pair]
            for i, artifact_id in enumerate(corpus.ids):
                writer.writerow(
                    [
                        artifact_id,
                        pair[0],
                        pair[1],
                        _fmt(ps.creativity.novelty[i]),
                        _fmt(ps.creativity.influence[i]),
                        _fmt(ps.creativity.aggregate[i]),
                    ]
                )


def _write_unexpectedness_csv(path: Path, corpus, scores: EngineScores, measure: str) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "attribute", "kernel", "measure", "unexpectedness", "empty_window"])
        for pair in scores.pairs:
            ps = scores.by_pair[pair]
            vec = ps.unexpectedness[measure]
            for i, artifact_id in enumerate(corpus.ids):
                writer.writerow(
                    [
                        artifact_id,
                        pair[0],
                        pair[1],
                        measure,
                        _fmt(vec[i]),
                        "true" if ps.empty_window[i] else "false",
                    ]
                )


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _convergence_manifest(scores: EngineScores) -> dict:
    return {
        f"{pair[0]}:{pair[1]}": {
            "iterations": scores.by_pair[pair].creativity.iterations_used,
            "converged": scores.by_pair[pair].creativity.converged,
            "threshold": scores.by_pair[pair].threshold,
        }
        for pair in scores.pairs
    }


def cmd_ingest(args, config: EngineConfig) -> int:
    t0 = time.perf_counter()
    corpus, ingest_hash, reused = stage_ingest(config)
    elapsed = time.perf_counter() - t0
    npz = config.cache_dir / f"corpus-{ingest_hash[:16]}.npz"
    print(
        f"ingest: {corpus.m} artifacts, {len(corpus.attributes)} attributes, "
        f"{len(corpus.labels)} labels, {corpus.dropped_missing_year} rows dropped (missing year)"
    )
    state = "cache reused" if reused else "cache written"
    print(f"ingest: {state} at {npz} ({elapsed:.2f}s)")
    return 0


def cmd_scores(args, config: EngineConfig) -> int:
    timings = {}
    t0 = time.perf_counter()
    corpus, ingest_hash, _ = stage_ingest(config)
    timings["ingest_seconds"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    scores, scores_hash, reused = stage_scores(config, corpus, ingest_hash)
    timings["scores_seconds"] = time.perf_counter() - t0

    config.output_dir.mkdir(parents=True, exist_ok=True)
    _write_json(
        config.output_dir / "scores_manifest.json",
        {
            "config_hash": config.config_hash(),
            "ingest_hash": ingest_hash,
            "scores_hash": scores_hash,
            "backend": backend_name(),
            "cache_reused": reused,
            "timings": timings,
            "convergence": _convergence_manifest(scores),
        },
    )
    if _convergence_gate(scores, config.strict):
        return 3

    paths = [config.output_dir / "scores.csv"]
    _write_scores_csv(paths[0], corpus, scores)
    for measure in MEASURES:
        path = config.output_dir / f"unexpectedness_{measure}.csv"
        _write_unexpectedness_csv(path, corpus, scores, measure)
        paths.append(path)
    print(f"scores: {len(scores.pairs)} graphs, backend={backend_name()}")
    print("scores: wrote " + " ".join(str(p) for p in paths))
    return 0


def _normalized_labels(corpus) -> dict:
    max_by_label = {spec.name: spec.max_value for spec in corpus.label_specs}
    return {
        name: normalize_labels(values, max_by_label.get(name, 1.0))
        for name, values in corpus.labels.items()
    }


def cmd_benchmark(args, config: EngineConfig) -> int:
    timings = {}
    t0 = time.perf_counter()
    corpus, ingest_hash, _ = stage_ingest(config)
    timings["ingest_seconds"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    scores, scores_hash, _ = stage_scores(config, corpus, ingest_hash)
    timings["scores_seconds"] = time.perf_counter() - t0
    if _convergence_gate(scores, config.strict):
        return 3

    t0 = time.perf_counter()
    report = run_benchmark(
        corpus,
        graph_config=config.graph,
        unexp_config=config.unexpectedness,
        combinations=config.combinations,
        labels=config.labels or None,
        ridge_lambda=config.ridge_lambda,
        knn_k=config.knn_k,
        seed=config.seed,
        train_fraction=config.train_fraction,
        variance_fraction=config.variance_fraction,
        threads=config.threads,
        config_hash=config.config_hash(),
        scores=scores,
    )
    timings["benchmark_seconds"] = time.perf_counter() - t0

    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_rmse_csv(report, out / "rmse.csv")
    write_improvements_csv(report, out / "improvements.csv")
    write_correlations_csv(report, out / "correlations.csv")
    heatmaps = write_heatmap_csvs(report, out)
    _write_json(
        out / "run_manifest.json",
        {
            "config_hash": report.config_hash,
            "ingest_hash": ingest_hash,
            "scores_hash": scores_hash,
            "seed": report.seed,
            "backend": report.backend,
            "labels": list(report.labels),
            "combinations": list(report.combinations),
            "timings": timings,
            "convergence": _convergence_manifest(scores),
            "chronology_probe": report.chronology,
        },
    )
    print(
        f"benchmark: {len(report.labels)} labels x {len(report.combinations)} combinations, "
        f"backend={report.backend}"
    )
    print(
        "benchmark: wrote "
        + " ".join(str(p) for p in [out / "rmse.csv", out / "improvements.csv", out / "correlations.csv", *heatmaps])
    )
    return 0


def cmd_correlate(args, config: EngineConfig) -> int:
    timings = {}
    t0 = time.perf_counter()
    corpus, ingest_hash, _ = stage_ingest(config)
    timings["ingest_seconds"] = time.perf_counter() - t0
    t0 = time.perf_counter()
    scores, scores_hash, _ = stage_scores(config, corpus, ingest_hash)
    timings["correlate_seconds"] = time.perf_counter() - t0
    if _convergence_gate(scores, config.strict):
        return 3

    normalized = _normalized_labels(corpus)
    if config.labels:
        normalized = {name: normalized[name] for name in config.labels}
    if not normalized:
        raise ValueError("correlate needs a corpus with at least one label")
    table = compute_correlations(scores, normalized, config.unexpectedness.measure)
    report = ExperimentReport(
        rmse_table={},
        improvements={},
        correlation_table=table,
        labels=tuple(normalized),
        combinations=(),
        pairs=scores.pairs,
        seed=config.seed,
        config_hash=config.config_hash(),
        convergence=_convergence_manifest(scores),
        backend=backend_name(),
        chronology={},
    )
    out = config.output_dir
    out.mkdir(parents=True, exist_ok=True)
    write_correlations_csv(report, out / "correlations.csv")
    heatmaps = write_heatmap_csvs(report, out)
    _write_json(
        out / "correlate_manifest.json",
        {
            "config_hash": config.config_hash(),
            "ingest_hash": ingest_hash,
            "scores_hash": scores_hash,
            "backend": backend_name(),
            "timings": timings,
            "convergence": _convergence_manifest(scores),
        },
    )
    print("correlate: wrote " + " ".join(str(p) for p in [out / "correlations.csv", *heatmaps]))
    return 0


def cmd_synth(args, config: EngineConfig) -> int:
    out = config.output_dir
    corpus = generate_synthetic_corpus(
        m=args.m,
        attributes=args.attributes,
        seed=config.seed,
        label_rule=args.label_rule,
    )
    paths = write_corpus_files(corpus, out)
    print(
        f"synth: {corpus.m} artifacts, {len(corpus.attributes)} attributes, "
        f"rule={args.label_rule}, seed={config.seed}"
    )
    print(
        "synth: wrote "
        + " ".join(str(paths[k]) for k in ("schema", "table", "vectors"))
    )
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = _config_from_args(args)
        return args.func(args, config)
    except ConfigError as exc:
        print(f"creascore: usage error: {exc}", file=sys.stderr)
        return 1
    except ConvergenceError as exc:
        print(f"creascore: numeric error: {exc}", file=sys.stderr)
        return 3
    except (EngineError, FileNotFoundError, ValueError) as exc:
        print(f"creascore: data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
