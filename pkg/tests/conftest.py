"""Shared corpus builders for the test suite."""

import numpy as np
import pytest

from creascore import ArtifactRecord, AttributeSpec, Corpus, LabelSpec, SimilarityMatrix


def numeric_corpus(values, years, name="score"):
    """Corpus with a single numeric attribute."""
    spec = AttributeSpec(name=name, kind="numeric", dimension=1, similarity_kind="linear")
    records = tuple(
        ArtifactRecord(id=f"a{i}", time=int(t), values=(float(v),))
        for i, (v, t) in enumerate(zip(values, years))
    )
    return Corpus(attributes=(spec,), artifacts=records)


def vector_corpus(block, years, name="embed"):
    """Corpus with a single vector attribute given as an (m, dim) block."""
    block = np.asarray(block, dtype=np.float64)
    spec = AttributeSpec(
        name=name, kind="vector", dimension=block.shape[1], similarity_kind="cosine"
    )
    records = tuple(
        ArtifactRecord(id=f"a{i}", time=int(t), values=(block[i],))
        for i, t in enumerate(years)
    )
    return Corpus(attributes=(spec,), artifacts=records)


def random_similarity(m, rng, attribute="attr", kernel="linear"):
    """Symmetric matrix with entries in (0, 1] and unit diagonal."""
    raw = rng.uniform(0.01, 1.0, size=(m, m))
    sym = (raw + raw.T) / 2.0
    np.fill_diagonal(sym, 1.0)
    return SimilarityMatrix(attribute=attribute, kernel=kernel, values=sym)


def labeled(corpus, label_values, max_value):
    from dataclasses import replace

    return replace(
        corpus,
        labels={"rating": np.asarray(label_values, dtype=np.float64)},
        label_specs=(LabelSpec(name="rating", max_value=max_value),),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
