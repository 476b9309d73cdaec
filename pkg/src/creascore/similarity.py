"""Pairwise attribute similarity.

Numeric attributes get a linear kernel 1/(1+|a-b|) and an exponential kernel
exp(-|a-b|); vector attributes get cosine. A numeric attribute yields one
independent graph per kernel downstream, so both matrices are first-class.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from .backend import KIND_EXPONENTIAL, KIND_LINEAR, active_backend
from .errors import ParseError, SchemaError

KERNELS = ("linear", "exponential", "cosine")
_NUMERIC_KIND_CODE = {"linear": KIND_LINEAR, "exponential": KIND_EXPONENTIAL}

# Binary dump header: magic, u32 matrix order, u32 reserved, zero padding.
_DUMP_MAGIC = b"CSIM"
_DUMP_HEADER = struct.Struct("<4sII4x")


@dataclass
class SimilarityMatrix:
    """Dense m x m symmetric similarity matrix for one (attribute, kernel)."""

    attribute: str
    kernel: str
    values: np.ndarray

    def __post_init__(self):
        if self.kernel not in KERNELS:
            raise ValueError(f"unknown kernel {self.kernel!r}")
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != self.values.shape[1]:
            raise ValueError("similarity matrix must be square")

    @property
    def m(self) -> int:
        return self.values.shape[0]


def linear_similarity(a: float, b: float) -> float:
    """1/(1+|a-b|), in (0, 1]."""
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("linear similarity needs finite inputs")
    return 1.0 / (1.0 + abs(a - b))


def exponential_similarity(a: float, b: float) -> float:
    """exp(-|a-b|), in (0, 1]."""
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("exponential similarity needs finite inputs")
    return math.exp(-abs(a - b))


def cosine_similarity(u, v) -> float:
    """Cosine of the angle between two equal-length vectors.

    A zero vector has no direction; pairs involving one score 0 (imputed
    missing embeddings must not create strong edges).
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape or u.ndim != 1:
        raise ValueError("cosine similarity needs two equal-length vectors")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


def pairwise_cosine(block: np.ndarray) -> np.ndarray:
    """Cosine similarity of all row pairs of an (m, dim) block via one gram product."""
    x = np.asarray(block, dtype=np.float64)
    norms = np.sqrt(np.einsum("ij,ij->i", x, x))
    safe = np.where(norms > 0.0, norms, 1.0)
    xn = x / safe[:, None]
    xn[norms == 0.0] = 0.0
    return xn @ xn.T


def build_similarity_matrix(corpus, attribute: str, kernel: str) -> SimilarityMatrix:
    """Full m x m similarity for one attribute; the diagonal is computed like any pair."""
    spec = corpus.attribute(attribute)
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    if spec.kind == "numeric" and kernel == "cosine":
        raise SchemaError(f"cosine kernel is not valid for numeric attribute {attribute!r}")
    if spec.kind == "vector" and kernel != "cosine":
        raise SchemaError(f"{kernel} kernel is not valid for vector attribute {attribute!r}")
    if spec.kind == "numeric":
        values = corpus.numeric_values(attribute)
        if not np.isfinite(values).all():
            raise ValueError(f"attribute {attribute!r} has missing or non-finite values; impute first")
        mat = active_backend().pairwise_numeric(values, _NUMERIC_KIND_CODE[kernel])
    else:
        block = corpus.vector_block(attribute)
        if not np.isfinite(block).all():
            raise ValueError(f"attribute {attribute!r} has missing or non-finite vectors; impute first")
        mat = pairwise_cosine(block)
    return SimilarityMatrix(attribute=attribute, kernel=kernel, values=mat)


def clamp_nonnegative(sim: SimilarityMatrix) -> SimilarityMatrix:
    """Clamp negative (cosine) entries to 0 so downstream edge weights stay nonnegative."""
    return SimilarityMatrix(sim.attribute, sim.kernel, np.maximum(sim.values, 0.0))


def kernels_for(spec) -> tuple[str, ...]:
    """Kernels computed for an attribute: both numeric kernels, or cosine."""
    if spec.kind == "numeric":
        return ("linear", "exponential")
    return ("cosine",)


def dump_matrix(path, sim: SimilarityMatrix) -> None:
    """Write the matrix as little-endian float64, row-major, with a 16-byte header."""
    with open(path, "wb") as fh:
        fh.write(_DUMP_HEADER.pack(_DUMP_MAGIC, sim.m, 0))
        fh.write(np.ascontiguousarray(sim.values, dtype="<f8").tobytes())


def load_matrix(path, attribute: str, kernel: str) -> SimilarityMatrix:
    """Read a matrix written by dump_matrix."""
    with open(path, "rb") as fh:
        header = fh.read(_DUMP_HEADER.size)
        if len(header) != _DUMP_HEADER.size:
            raise ParseError("truncated similarity dump header", path=str(path))
        magic, m, _reserved = _DUMP_HEADER.unpack(header)
        if magic != _DUMP_MAGIC:
            raise ParseError("bad magic in similarity dump", path=str(path))
        payload = fh.read()
    expected = 8 * m * m
    if len(payload) != expected:
        raise ParseError(
            f"similarity dump payload is {len(payload)} bytes, expected {expected}",
            path=str(path),
        )
    values = np.frombuffer(payload, dtype="<f8").reshape(m, m).astype(np.float64)
    return SimilarityMatrix(attribute=attribute, kernel=kernel, values=values)
