"""Corpus ingest and value-feature extraction.

A corpus is a timestamped set of artifacts, each carrying one payload per
declared attribute (scalar, vector, or missing). Ingest keeps missing
markers; impute() fills them (attribute mean for numerics, zero vector for
vectors); normalize_numeric() standardizes numeric attributes; and
pca_value_features() reduces every vector attribute to the smallest
principal-component block that retains the configured variance fraction.
"""

import csv
import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path

import numpy as np

from .errors import ImputationError, IntegrityError, ParseError, SchemaError

MISSING = None

ATTRIBUTE_KINDS = ("numeric", "vector")
SIMILARITY_KINDS = ("linear", "exponential", "cosine")


@dataclass(frozen=True)
class AttributeSpec:
    """One declared attribute: its payload kind and compatible similarity kernel."""

    name: str
    kind: str
    dimension: int = 1
    similarity_kind: str = "linear"

    def __post_init__(self):
        if self.kind not in ATTRIBUTE_KINDS:
            raise SchemaError(f"attribute {self.name!r}: unknown kind {self.kind!r}")
        if self.similarity_kind not in SIMILARITY_KINDS:
            raise SchemaError(
                f"attribute {self.name!r}: unknown similarity kind {self.similarity_kind!r}"
            )
        if self.dimension < 1:
            raise SchemaError(f"attribute {self.name!r}: dimension must be >= 1")
        if self.kind == "numeric" and self.dimension != 1:
            raise SchemaError(f"numeric attribute {self.name!r} must have dimension 1")
        if self.similarity_kind == "cosine" and self.kind != "vector":
            raise SchemaError(f"attribute {self.name!r}: cosine pairs with vector payloads")
        if self.similarity_kind in ("linear", "exponential") and self.kind != "numeric":
            raise SchemaError(
                f"attribute {self.name!r}: {self.similarity_kind} pairs with numeric payloads"
            )


@dataclass(frozen=True)
class LabelSpec:
    """A prediction target and the maximum used to normalize it to [0, 1]."""

    name: str
    max_value: float

    def __post_init__(self):
        if not self.max_value > 0:
            raise SchemaError(f"label {self.name!r}: max must be positive")


@dataclass(frozen=True)
class ArtifactRecord:
    """One artifact: unique id, integer year, and one payload per attribute."""

    id: str
    time: int
    values: tuple


@dataclass
class Corpus:
    attributes: tuple[AttributeSpec, ...]
    artifacts: tuple[ArtifactRecord, ...]
    labels: dict[str, np.ndarray] = field(default_factory=dict)
    label_specs: tuple[LabelSpec, ...] = ()
    dropped_missing_year: int = 0

    def __post_init__(self):
        self.attributes = tuple(self.attributes)
        self.artifacts = tuple(self.artifacts)
        seen = set()
        for rec in self.artifacts:
            if rec.id in seen:
                raise IntegrityError(f"duplicate artifact id {rec.id!r}")
            seen.add(rec.id)
            if len(rec.values) != len(self.attributes):
                raise SchemaError(
                    f"artifact {rec.id!r} has {len(rec.values)} payloads, "
                    f"expected {len(self.attributes)}"
                )
            for spec, value in zip(self.attributes, rec.values):
                if value is MISSING:
                    continue
                if spec.kind == "vector" and len(value) != spec.dimension:
                    raise SchemaError(
                        f"artifact {rec.id!r}, attribute {spec.name!r}: vector of "
                        f"length {len(value)}, declared dimension {spec.dimension}"
                    )
        for name, values in self.labels.items():
            if len(values) != len(self.artifacts):
                raise IntegrityError(f"label {name!r} length disagrees with artifact count")

    @property
    def m(self) -> int:
        return len(self.artifacts)

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(rec.id for rec in self.artifacts)

    @cached_property
    def years(self) -> np.ndarray:
        return np.array([rec.time for rec in self.artifacts], dtype=np.int64)

    def attribute_index(self, name: str) -> int:
        for k, spec in enumerate(self.attributes):
            if spec.name == name:
                return k
        raise KeyError(f"unknown attribute {name!r}")

    def attribute(self, name: str) -> AttributeSpec:
        return self.attributes[self.attribute_index(name)]

    def numeric_values(self, name: str) -> np.ndarray:
        """Column of a numeric attribute, NaN where missing."""
        k = self.attribute_index(name)
        if self.attributes[k].kind != "numeric":
            raise SchemaError(f"attribute {name!r} is not numeric")
        return np.array(
            [np.nan if rec.values[k] is MISSING else float(rec.values[k]) for rec in self.artifacts]
        )

    def vector_block(self, name: str) -> np.ndarray:
        """(m, dim) block of a vector attribute, NaN rows where missing."""
        k = self.attribute_index(name)
        spec = self.attributes[k]
        if spec.kind != "vector":
            raise SchemaError(f"attribute {name!r} is not a vector attribute")
        block = np.full((self.m, spec.dimension), np.nan)
        for i, rec in enumerate(self.artifacts):
            if rec.values[k] is not MISSING:
                block[i] = rec.values[k]
        return block

    def has_missing(self) -> bool:
        return any(v is MISSING for rec in self.artifacts for v in rec.values)


def load_schema(path) -> tuple[tuple[AttributeSpec, ...], tuple[LabelSpec, ...]]:
    """Read the schema JSON: a bare list of attribute entries, or an object
    with "attributes" and optional "labels" (name + max for normalization)."""
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid schema JSON: {exc}", path=str(path)) from exc
    if isinstance(payload, list):
        attr_entries, label_entries = payload, []
    elif isinstance(payload, dict):
        attr_entries = payload.get("attributes", [])
        label_entries = payload.get("labels", [])
    else:
        raise ParseError("schema must be a JSON list or object", path=str(path))
    try:
        attributes = tuple(
            AttributeSpec(
                name=e["name"],
                kind=e["kind"],
                dimension=int(e.get("dimension", 1)),
                similarity_kind=e["similarity_kind"],
            )
            for e in attr_entries
        )
        labels = tuple(
            LabelSpec(name=e["name"], max_value=float(e["max"])) for e in label_entries
        )
    except KeyError as exc:
        raise ParseError(f"schema entry missing key {exc}", path=str(path)) from exc
    names = [a.name for a in attributes]
    if len(set(names)) != len(names):
        raise SchemaError("duplicate attribute names in schema")
    return attributes, labels


def _parse_year(raw: str, path: str, line: int):
    raw = raw.strip()
    if raw == "":
        return MISSING
    try:
        return int(raw)
    except ValueError as exc:
        raise ParseError(f"unparseable year {raw!r}", path=path, line=line) from exc


def _parse_cell(raw: str, column: str, path: str, line: int):
    raw = raw.strip()
    if raw == "":
        return MISSING
    try:
        return float(raw)
    except ValueError as exc:
        raise ParseError(f"unparseable value {raw!r} in column {column!r}", path=path, line=line) from exc


def load_corpus(
    artifact_table,
    vector_store,
    schema,
    label_specs: tuple[LabelSpec, ...] = (),
) -> Corpus:
    """Ingest the artifact table (CSV) and vector store (JSON Lines).

    Rows without a year are dropped and counted (dropped_missing_year on the
    returned corpus). Missing cells and absent vector records stay MISSING.
    Vector rows for dropped artifacts are skipped; rows referencing ids or
    attributes that never existed are integrity errors.
    """
    attributes = tuple(schema)
    table_path = Path(artifact_table)
    numeric_names = [a.name for a in attributes if a.kind == "numeric"]
    vector_names = {a.name for a in attributes if a.kind == "vector"}
    label_names = [l.name for l in label_specs]

    rows = []
    dropped_ids: set[str] = set()
    dropped = 0
    with open(table_path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty artifact table", path=str(table_path), line=1)
        header = [h.strip() for h in header]
        if header[:2] != ["id", "year"]:
            raise SchemaError(f"{table_path}: artifact table must start with columns id, year")
        expected = set(numeric_names) | set(label_names)
        got = set(header[2:])
        if got != expected:
            missing = sorted(expected - got)
            extra = sorted(got - expected)
            raise SchemaError(
                f"{table_path}: table columns disagree with schema"
                + (f"; missing {missing}" if missing else "")
                + (f"; unexpected {extra}" if extra else "")
            )
        col = {name: header.index(name) for name in header}
        for lineno, raw in enumerate(reader, start=2):
            if len(raw) != len(header):
                raise ParseError(
                    f"row has {len(raw)} cells, header has {len(header)}",
                    path=str(table_path),
                    line=lineno,
                )
            artifact_id = raw[col["id"]].strip()
            if artifact_id == "":
                raise ParseError("empty artifact id", path=str(table_path), line=lineno)
            year = _parse_year(raw[col["year"]], str(table_path), lineno)
            if year is MISSING:
                dropped += 1
                dropped_ids.add(artifact_id)
                continue
            numerics = {
                name: _parse_cell(raw[col[name]], name, str(table_path), lineno)
                for name in numeric_names
            }
            labels = {}
            for name in label_names:
                value = _parse_cell(raw[col[name]], name, str(table_path), lineno)
                if value is MISSING:
                    raise ParseError(f"missing label {name!r}", path=str(table_path), line=lineno)
                labels[name] = value
            rows.append((artifact_id, year, numerics, labels))

    kept_ids = set()
    for artifact_id, *_ in rows:
        if artifact_id in kept_ids:
            raise IntegrityError(f"{table_path}: duplicate artifact id {artifact_id!r}")
        kept_ids.add(artifact_id)

    vectors: dict[tuple[str, str], np.ndarray] = {}
    store_path = Path(vector_store)
    dim_by_name = {a.name: a.dimension for a in attributes}
    with open(store_path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                artifact_id = obj["id"]
                attr_name = obj["attribute"]
                vec = obj["vector"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ParseError(f"malformed vector record: {exc}", path=str(store_path), line=lineno) from exc
            if artifact_id in dropped_ids:
                continue
            if artifact_id not in kept_ids:
                raise IntegrityError(
                    f"{store_path}:{lineno}: vector record for unknown artifact {artifact_id!r}"
                )
            if attr_name not in vector_names:
                raise SchemaError(
                    f"{store_path}:{lineno}: attribute {attr_name!r} is not a vector attribute"
                )
            arr = np.asarray(vec, dtype=np.float64)
            if arr.ndim != 1 or arr.shape[0] != dim_by_name[attr_name]:
                raise SchemaError(
                    f"{store_path}:{lineno}: vector of length {arr.shape[0] if arr.ndim == 1 else arr.shape} "
                    f"for attribute {attr_name!r}, declared dimension {dim_by_name[attr_name]}"
                )
            key = (artifact_id, attr_name)
            if key in vectors:
                raise IntegrityError(f"{store_path}:{lineno}: duplicate vector record for {key}")
            vectors[key] = arr

    records = []
    for artifact_id, year, numerics, _labels in rows:
        values = []
        for spec in attributes:
            if spec.kind == "numeric":
                values.append(numerics[spec.name])
            else:
                values.append(vectors.get((artifact_id, spec.name), MISSING))
        records.append(ArtifactRecord(id=artifact_id, time=year, values=tuple(values)))

    labels = {
        name: np.array([row[3][name] for row in rows], dtype=np.float64) for name in label_names
    }
    return Corpus(
        attributes=attributes,
        artifacts=tuple(records),
        labels=labels,
        label_specs=tuple(label_specs),
        dropped_missing_year=dropped,
    )


def impute(corpus: Corpus) -> Corpus:
    """Fill missing payloads: attribute mean for numerics, zero vector for vectors.

    Idempotent. A numeric attribute with no observed values has no mean and
    raises ImputationError.
    """
    fills = {}
    for k, spec in enumerate(corpus.attributes):
        if spec.kind == "numeric":
            observed = [rec.values[k] for rec in corpus.artifacts if rec.values[k] is not MISSING]
            if any(rec.values[k] is MISSING for rec in corpus.artifacts):
                if not observed:
                    raise ImputationError(f"attribute {spec.name!r} has no observed values")
                fills[k] = float(np.mean(observed))
        else:
            fills[k] = np.zeros(spec.dimension)

    records = []
    for rec in corpus.artifacts:
        if all(v is not MISSING for v in rec.values):
            records.append(rec)
            continue
        values = tuple(
            fills[k] if v is MISSING else v for k, v in enumerate(rec.values)
        )
        records.append(replace(rec, values=values))
    return replace(corpus, artifacts=tuple(records))


def normalize_numeric(corpus: Corpus) -> Corpus:
    """Rescale each numeric attribute to zero mean, unit standard deviation.

    Constant attributes map to all-zeros instead of dividing by zero,
    which keeps them inert downstream.
    """
    if corpus.has_missing():
        raise ValueError("corpus has missing payloads; impute before normalizing")
    scaled = {}
    for k, spec in enumerate(corpus.attributes):
        if spec.kind != "numeric":
            continue
        column = np.array([float(rec.values[k]) for rec in corpus.artifacts])
        mean = column.mean()
        std = column.std()
        scaled[k] = np.zeros_like(column) if std == 0.0 else (column - mean) / std
    records = []
    for i, rec in enumerate(corpus.artifacts):
        values = tuple(
            float(scaled[k][i]) if k in scaled else v for k, v in enumerate(rec.values)
        )
        records.append(replace(rec, values=values))
    return replace(corpus, artifacts=tuple(records))


@dataclass
class ValueFeatures:
    """Per-artifact value features: numeric passthrough columns plus one
    PCA-reduced block per vector attribute."""

    matrix: np.ndarray
    per_attribute_spans: dict[str, tuple[int, int]]
    explained_variance: dict[str, float]
    feature_names: tuple[str, ...]
    components: dict[str, np.ndarray]
    means: dict[str, np.ndarray]


def _dominant_eigenpair(cov: np.ndarray, seed: int, tol: float = 1e-10, max_iter: int = 1000):
    """Leading eigenpair of a symmetric PSD matrix by power iteration."""
    n = cov.shape[0]
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(n)
    v /= np.linalg.norm(v)
    for _ in range(max_iter):
        w = cov @ v
        norm = np.linalg.norm(w)
        if norm <= 1e-300:
            return 0.0, v
        w /= norm
        delta = np.linalg.norm(w - v)
        v = w
        if delta < tol:
            break
    return float(v @ cov @ v), v


def pca_value_features(corpus: Corpus, variance_fraction: float = 0.90) -> ValueFeatures:
    """Project every vector attribute onto its leading principal components.

    Components are found by power iteration with deflation on the sample
    covariance; the block keeps the smallest component count whose cumulative
    explained variance reaches variance_fraction. Numeric attributes pass
    through as single columns.
    """
    if not 0.0 < variance_fraction <= 1.0:
        raise ValueError("variance_fraction must be in (0, 1]")
    if corpus.has_missing():
        raise ValueError("corpus has missing payloads; impute before extracting features")

    blocks = []
    spans = {}
    explained = {}
    names = []
    components = {}
    means = {}
    start = 0
    for spec in corpus.attributes:
        if spec.kind == "numeric":
            column = corpus.numeric_values(spec.name)[:, None]
            blocks.append(column)
            spans[spec.name] = (start, start + 1)
            explained[spec.name] = 1.0
            names.append(spec.name)
            start += 1
            continue

        block = corpus.vector_block(spec.name)
        mean = block.mean(axis=0)
        centered = block - mean
        m, dim = centered.shape
        cov = centered.T @ centered / max(m - 1, 1)
        total = float(np.trace(cov))
        max_components = max(min(m - 1, dim), 1)

        comp = []
        eigvals = []
        if total <= 1e-300:
            # Zero-variance block (e.g. every record imputed to the zero
            # vector): emit a single inert column.
            comp.append(np.zeros(dim))
            eigvals.append(0.0)
            ratio = 1.0
        else:
            work = cov.copy()
            ratio = 0.0
            while True:
                lam, vec = _dominant_eigenpair(work, seed=len(comp))
                if lam <= total * 1e-12 and comp:
                    break
                comp.append(vec)
                eigvals.append(max(lam, 0.0))
                work = work - lam * np.outer(vec, vec)
                ratio = min(1.0, sum(eigvals) / total)
                if ratio >= variance_fraction or len(comp) >= max_components:
                    break
            if len(comp) >= max_components:
                ratio = 1.0

        basis = np.column_stack(comp)
        projected = centered @ basis
        blocks.append(projected)
        spans[spec.name] = (start, start + basis.shape[1])
        explained[spec.name] = ratio
        names.extend(f"{spec.name}:pc{i}" for i in range(basis.shape[1]))
        components[spec.name] = basis
        means[spec.name] = mean
        start += basis.shape[1]

    matrix = np.hstack(blocks) if blocks else np.empty((corpus.m, 0))
    return ValueFeatures(
        matrix=matrix,
        per_attribute_spans=spans,
        explained_variance=explained,
        feature_names=tuple(names),
        components=components,
        means=means,
    )


def write_corpus_files(corpus: Corpus, directory) -> dict:
    """Emit a corpus as the three ingest inputs: schema.json, artifacts.csv,
    vectors.jsonl. Floats are written with repr so values round-trip exactly."""
    if corpus.has_missing():
        raise ValueError("cannot emit a corpus with missing payloads")
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    schema_path = directory / "schema.json"
    table_path = directory / "artifacts.csv"
    vectors_path = directory / "vectors.jsonl"

    schema = {
        "attributes": [
            {
                "name": a.name,
                "kind": a.kind,
                "dimension": a.dimension,
                "similarity_kind": a.similarity_kind,
            }
            for a in corpus.attributes
        ],
        "labels": [{"name": l.name, "max": l.max_value} for l in corpus.label_specs],
    }
    schema_path.write_text(json.dumps(schema, indent=2, sort_keys=True) + "\n")

    numeric_names = [a.name for a in corpus.attributes if a.kind == "numeric"]
    label_names = [l.name for l in corpus.label_specs]
    with open(table_path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "year", *numeric_names, *label_names])
        for i, rec in enumerate(corpus.artifacts):
            row = [rec.id, str(rec.time)]
            for name in numeric_names:
                row.append(repr(float(rec.values[corpus.attribute_index(name)])))
            for name in label_names:
                row.append(repr(float(corpus.labels[name][i])))
            writer.writerow(row)

    with open(vectors_path, "w") as fh:
        for rec in corpus.artifacts:
            for k, spec in enumerate(corpus.attributes):
                if spec.kind != "vector":
                    continue
                payload = {
                    "id": rec.id,
                    "attribute": spec.name,
                    "vector": [float(v) for v in rec.values[k]],
                }
                fh.write(json.dumps(payload) + "\n")

    return {"schema": schema_path, "table": table_path, "vectors": vectors_path}


def save_corpus_npz(corpus: Corpus, path) -> None:
    """Serialize a fully-imputed corpus to .npz (used by the CLI stage cache)."""
    if corpus.has_missing():
        raise ValueError("only imputed corpora are cached")
    meta = {
        "ids": list(corpus.ids),
        "dropped_missing_year": corpus.dropped_missing_year,
        "attributes": [
            {
                "name": a.name,
                "kind": a.kind,
                "dimension": a.dimension,
                "similarity_kind": a.similarity_kind,
            }
            for a in corpus.attributes
        ],
        "labels": [{"name": l.name, "max": l.max_value} for l in corpus.label_specs],
    }
    arrays = {"years": corpus.years}
    for spec in corpus.attributes:
        if spec.kind == "numeric":
            arrays[f"num_{spec.name}"] = corpus.numeric_values(spec.name)
        else:
            arrays[f"vec_{spec.name}"] = corpus.vector_block(spec.name)
    for name, values in corpus.labels.items():
        arrays[f"label_{name}"] = values
    np.savez(path, meta=json.dumps(meta, sort_keys=True), **arrays)


def load_corpus_npz(path) -> Corpus:
    with np.load(path, allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        years = data["years"]
        attributes = tuple(AttributeSpec(**entry) for entry in meta["attributes"])
        label_specs = tuple(LabelSpec(name=e["name"], max_value=e["max"]) for e in meta["labels"])
        columns = {}
        for spec in attributes:
            key = f"num_{spec.name}" if spec.kind == "numeric" else f"vec_{spec.name}"
            columns[spec.name] = data[key]
        labels = {l.name: data[f"label_{l.name}"] for l in label_specs}
    records = []
    for i, artifact_id in enumerate(meta["ids"]):
        values = tuple(
            float(columns[a.name][i]) if a.kind == "numeric" else columns[a.name][i]
            for a in attributes
        )
        records.append(ArtifactRecord(id=artifact_id, time=int(years[i]), values=values))
    return Corpus(
        attributes=attributes,
        artifacts=tuple(records),
        labels=labels,
        label_specs=label_specs,
        dropped_missing_year=int(meta["dropped_missing_year"]),
    )
