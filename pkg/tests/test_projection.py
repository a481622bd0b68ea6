import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from grpcoll import projection
from grpcoll.errors import (
    DegenerateMatrixError,
    FramingError,
    InvalidDimensionError,
    UnachievableConditionError,
)
from grpcoll.projection import (
    GaussianRandomProjector,
    ProjectionKey,
    compression_ratio,
    condition_number,
    generate_conditioned_matrix,
    generate_projection,
    key_from_bytes,
    key_to_bytes,
    project,
    project_dataset,
)


class TestGenerateProjection:
    def test_shape_and_dtype(self):
        key = generate_projection(5, 12, seed=3)
        assert key.matrix.shape == (5, 12)
        assert key.matrix.dtype == np.float64
        assert key.k == 5 and key.d == 12 and key.scaled

    def test_entries_standard_normal(self):
        # Law-of-large-numbers bands at 78,400 samples (5-sigma).
        key = generate_projection(100, 784, seed=7)
        entries = key.matrix.ravel()
        assert abs(entries.mean()) < 0.02
        assert 0.95 < entries.var() < 1.05

    def test_deterministic_in_seed(self):
        a = generate_projection(8, 20, seed=42)
        b = generate_projection(8, 20, seed=42)
        c = generate_projection(8, 20, seed=43)
        assert np.array_equal(a.matrix, b.matrix)
        assert not np.array_equal(a.matrix, c.matrix)

    @pytest.mark.parametrize("k,d", [(0, 10), (11, 10), (-1, 5)])
    def test_invalid_dimensions(self, k, d):
        with pytest.raises(InvalidDimensionError):
            generate_projection(k, d, seed=0)

    def test_effective_matrix_scaling(self):
        key = generate_projection(4, 9, seed=0, scaled=True)
        raw = ProjectionKey(matrix=key.matrix, k=4, d=9, seed=0, scaled=False)
        assert np.allclose(key.effective_matrix, raw.effective_matrix / 2.0)


class TestProject:
    def test_single_vector(self):
        key = generate_projection(3, 6, seed=1)
        x = np.arange(6, dtype=np.float64)
        y = project(key, x)
        assert y.shape == (3,)
        assert np.allclose(y, key.matrix @ x / np.sqrt(3))

    def test_batch(self):
        key = generate_projection(3, 6, seed=1)
        X = np.random.default_rng(0).standard_normal((10, 6))
        Y = project(key, X)
        assert Y.shape == (10, 3)
        assert np.allclose(Y[4], project(key, X[4]))

    def test_linearity(self):
        key = generate_projection(4, 8, seed=2)
        rng = np.random.default_rng(1)
        a, b = rng.standard_normal(8), rng.standard_normal(8)
        assert np.allclose(project(key, 2 * a - 3 * b), 2 * project(key, a) - 3 * project(key, b))

    def test_dimension_mismatch(self):
        key = generate_projection(3, 6, seed=1)
        with pytest.raises(InvalidDimensionError):
            project(key, np.zeros(7))

    def test_project_dataset(self):
        from grpcoll.datasets import synth_gaussian_two_class

        ds = synth_gaussian_two_class(6, 1.0, 5, seed=0)
        key = generate_projection(3, 6, seed=1)
        out = project_dataset(key, ds)
        assert out.dimension == 3
        assert len(out) == len(ds)
        assert np.array_equal(out.labels, ds.labels)

    def test_project_empty_dataset(self):
        from grpcoll.datasets import Dataset

        ds = Dataset(
            vectors=np.zeros((0, 6)),
            labels=np.zeros(0, dtype=np.int64),
            class_count=2,
            domain_bounds=np.zeros((2, 6)),
        )
        key = generate_projection(3, 6, seed=1)
        out = project_dataset(key, ds)
        assert len(out) == 0 and out.dimension == 3


class TestCompressionRatio:
    @pytest.mark.parametrize(
        "k,d,expected", [(784, 784, 1.0), (392, 784, 2.0), (336, 784, 784 / 336)]
    )
    def test_values(self, k, d, expected):
        key = generate_projection(k, d, seed=0)
        assert compression_ratio(key) == pytest.approx(expected)

    def test_paper_sweep_endpoint(self):
        key = generate_projection(336, 784, seed=0)
        assert compression_ratio(key) == pytest.approx(2.333, abs=5e-3)


class TestConditionNumber:
    def test_identity(self):
        report = condition_number(np.eye(7))
        assert report.condition_number == pytest.approx(7.0)

    def test_diag_1_2(self):
        # Frobenius norms: ||M||_F = sqrt(5), ||M+||_F = sqrt(1 + 1/4).
        report = condition_number(np.diag([1.0, 2.0]))
        assert report.condition_number == pytest.approx(2.5)

    def test_all_zero(self):
        with pytest.raises(DegenerateMatrixError):
            condition_number(np.zeros((3, 3)))

    def test_lower_bound_is_rank(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            M = rng.standard_normal((6, 6))
            assert condition_number(M).condition_number >= 6.0 - 1e-9


class TestConditionedMatrix:
    @pytest.mark.parametrize("target", [10.0, 30.0, 100.0, 300.0])
    def test_achieves_target(self, target):
        M = generate_conditioned_matrix(10, target, seed=0)
        assert M.shape == (10, 10)
        kappa = condition_number(M).condition_number
        assert target * 0.99 <= kappa <= target * 1.01

    def test_below_rank_rejected(self):
        with pytest.raises(UnachievableConditionError):
            generate_conditioned_matrix(10, 9.0, seed=0)

    def test_deterministic(self):
        a = generate_conditioned_matrix(8, 50.0, seed=9)
        b = generate_conditioned_matrix(8, 50.0, seed=9)
        assert np.array_equal(a, b)


class TestKeySerialization:
    def test_round_trip(self):
        key = generate_projection(5, 12, seed=11)
        blob = key_to_bytes(key)
        back = key_from_bytes(blob, seed=11)
        assert back.k == key.k and back.d == key.d
        assert np.array_equal(back.matrix, key.matrix)

    def test_bad_magic(self):
        blob = bytearray(key_to_bytes(generate_projection(2, 3, seed=0)))
        blob[:4] = b"XXXX"
        with pytest.raises(FramingError):
            key_from_bytes(bytes(blob))

    def test_truncated(self):
        blob = key_to_bytes(generate_projection(2, 3, seed=0))
        with pytest.raises(FramingError):
            key_from_bytes(blob[:-1])


class TestEstimatorFacade:
    def test_fit_transform_matches_functional(self):
        X = np.random.default_rng(3).standard_normal((20, 10))
        est = GaussianRandomProjector(n_components=4, seed=5)
        Y = est.fit_transform(X)
        key = generate_projection(4, 10, seed=5)
        assert np.allclose(Y, project(key, X))

    def test_get_params_round_trip(self):
        est = GaussianRandomProjector(n_components=4, seed=5, scaled=False)
        params = est.get_params()
        clone = GaussianRandomProjector(**params)
        assert clone.get_params() == params


@settings(max_examples=30, deadline=None)
@given(
    k=st.integers(min_value=1, max_value=12),
    extra=st.integers(min_value=0, max_value=12),
    seed=st.integers(min_value=0, max_value=2**31 - 1),
)
def test_projection_shape_property(k, extra, seed):
    d = k + extra
    key = generate_projection(k, d, seed=seed)
    x = np.random.default_rng(seed).standard_normal(d)
    assert project(key, x).shape == (k,)
    assert compression_ratio(key) == pytest.approx(d / k)
