"""Similarity kernels and matrix construction."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from creascore import (
    SchemaError,
    SimilarityMatrix,
    build_similarity_matrix,
    clamp_nonnegative,
    cosine_similarity,
    exponential_similarity,
    kernels_for,
    linear_similarity,
)
from creascore.dataset import AttributeSpec
from creascore.errors import ParseError
from creascore.similarity import dump_matrix, load_matrix

from conftest import numeric_corpus, vector_corpus


class TestLinear:
    def test_zero_distance(self):
        assert linear_similarity(2.0, 2.0) == 1.0

    def test_unit_distance(self):
        assert linear_similarity(0.0, 1.0) == 0.5

    def test_distance_three(self):
        assert linear_similarity(0.0, 3.0) == 0.25

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            linear_similarity(math.nan, 0.0)
        with pytest.raises(ValueError):
            linear_similarity(0.0, math.inf)

    @given(
        st.floats(-1e3, 1e3),
        st.floats(-1e3, 1e3),
        st.floats(-1e3, 1e3),
    )
    def test_monotone_in_distance(self, a, b, c):
        # A strict distance gap keeps the strictness testable in floats:
        # adjacent distances can round to the same similarity.
        assume(abs(a - c) - abs(a - b) > 1e-6)
        assert linear_similarity(a, b) > linear_similarity(a, c)


class TestExponential:
    def test_zero_distance(self):
        assert exponential_similarity(5.0, 5.0) == 1.0

    def test_unit_distance(self):
        assert exponential_similarity(0.0, 1.0) == pytest.approx(0.36788, abs=1e-5)

    def test_distance_two(self):
        assert exponential_similarity(-1.0, 1.0) == pytest.approx(math.exp(-2), abs=1e-12)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            exponential_similarity(math.inf, 0.0)

    @given(st.floats(-100, 100), st.floats(-100, 100), st.floats(-100, 100))
    def test_monotone_in_distance(self, a, b, c):
        assume(abs(a - c) - abs(a - b) > 1e-9)
        assert exponential_similarity(a, b) > exponential_similarity(a, c)


class TestCosine:
    def test_identical(self):
        assert cosine_similarity([1, 0], [1, 0]) == 1.0

    def test_orthogonal(self):
        assert cosine_similarity([1, 0], [0, 1]) == 0.0

    def test_zero_vector_convention(self):
        assert cosine_similarity([0, 0], [1, 2]) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            cosine_similarity([1, 0], [1, 0, 0])

    def test_antiparallel(self):
        assert cosine_similarity([1.0, 1.0], [-1.0, -1.0]) == pytest.approx(-1.0, abs=1e-12)


class TestBuildMatrix:
    def test_single_artifact_linear(self):
        corpus = numeric_corpus([3.0], [1990])
        sim = build_similarity_matrix(corpus, "score", "linear")
        assert sim.values.shape == (1, 1)
        assert sim.values[0, 0] == 1.0

    def test_identical_vectors_cosine(self):
        corpus = vector_corpus([[1.0, 2.0], [1.0, 2.0]], [1990, 1991])
        sim = build_similarity_matrix(corpus, "embed", "cosine")
        assert np.allclose(sim.values, 1.0, atol=1e-12)

    def test_matches_scalar_kernel_oracle(self, rng):
        # Entrywise recomputation through the scalar kernels, not the
        # vectorized path.
        values = rng.uniform(-5, 5, size=4)
        corpus = numeric_corpus(values, [1990, 1991, 1992, 1993])
        for kernel, fn in (("linear", linear_similarity), ("exponential", exponential_similarity)):
            sim = build_similarity_matrix(corpus, "score", kernel)
            expected = np.array([[fn(a, b) for b in values] for a in values])
            assert np.abs(sim.values - expected).max() == 0.0

    def test_cosine_matches_scalar_oracle(self, rng):
        block = rng.standard_normal((5, 3))
        corpus = vector_corpus(block, [1990 + i for i in range(5)])
        sim = build_similarity_matrix(corpus, "embed", "cosine")
        expected = np.array([[cosine_similarity(u, v) for v in block] for u in block])
        assert np.abs(sim.values - expected).max() < 1e-12

    def test_kernel_kind_mismatch(self):
        corpus = numeric_corpus([1.0, 2.0], [1990, 1991])
        with pytest.raises(SchemaError):
            build_similarity_matrix(corpus, "score", "cosine")
        vcorpus = vector_corpus([[1.0, 0.0]], [1990])
        with pytest.raises(SchemaError):
            build_similarity_matrix(vcorpus, "embed", "linear")

    def test_symmetry_and_bounds(self, rng):
        values = rng.uniform(-10, 10, size=12)
        corpus = numeric_corpus(values, rng.integers(1950, 2020, size=12))
        for kernel in ("linear", "exponential"):
            sim = build_similarity_matrix(corpus, "score", kernel)
            assert np.abs(sim.values - sim.values.T).max() < 1e-12
            assert sim.values.min() > 0.0
            assert sim.values.max() <= 1.0
            assert np.allclose(np.diag(sim.values), 1.0, atol=1e-12)

    def test_cosine_bounds(self, rng):
        block = rng.standard_normal((10, 4))
        corpus = vector_corpus(block, rng.integers(1950, 2020, size=10))
        sim = build_similarity_matrix(corpus, "embed", "cosine")
        assert np.abs(sim.values - sim.values.T).max() < 1e-12
        assert sim.values.min() >= -1.0 - 1e-12
        assert sim.values.max() <= 1.0 + 1e-12
        assert np.allclose(np.diag(sim.values), 1.0, atol=1e-12)


def test_clamp_nonnegative():
    sim = SimilarityMatrix("a", "cosine", np.array([[1.0, -0.5], [-0.5, 1.0]]))
    clamped = clamp_nonnegative(sim)
    assert clamped.values[0, 1] == 0.0
    assert clamped.values[0, 0] == 1.0


def test_kernels_for_pairing():
    num = AttributeSpec(name="n", kind="numeric", similarity_kind="linear")
    vec = AttributeSpec(name="v", kind="vector", dimension=3, similarity_kind="cosine")
    assert kernels_for(num) == ("linear", "exponential")
    assert kernels_for(vec) == ("cosine",)


class TestDump:
    def test_round_trip(self, tmp_path, rng):
        sim = SimilarityMatrix("a", "linear", np.eye(3) * 0.5 + 0.5)
        path = tmp_path / "m.csim"
        dump_matrix(path, sim)
        back = load_matrix(path, "a", "linear")
        assert np.array_equal(back.values, sim.values)

    def test_header_layout(self, tmp_path):
        sim = SimilarityMatrix("a", "linear", np.ones((2, 2)))
        path = tmp_path / "m.csim"
        dump_matrix(path, sim)
        blob = path.read_bytes()
        assert blob[:4] == b"CSIM"
        assert int.from_bytes(blob[4:8], "little") == 2
        assert len(blob) == 16 + 8 * 4

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "m.csim"
        path.write_bytes(b"NOPE" + b"\x00" * 12)
        with pytest.raises(ParseError):
            load_matrix(path, "a", "linear")

    def test_truncated_payload(self, tmp_path):
        sim = SimilarityMatrix("a", "linear", np.ones((2, 2)))
        path = tmp_path / "m.csim"
        dump_matrix(path, sim)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ParseError):
            load_matrix(path, "a", "linear")
