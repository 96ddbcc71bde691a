import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from iilasso import (Dataset, GroupPartition, PenaltySpec, SimilarityMatrix,
                     build_similarity, penalty_value)
from conftest import standardize_cols


def pair_with_correlation(r, n=200, seed=0):
    """Two exactly standardized columns whose sample correlation is r."""
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((n, 2))
    A -= A.mean(axis=0)
    u = A[:, 0]
    v = A[:, 1] - (A[:, 1] @ u) / (u @ u) * u
    u = u / np.sqrt((u**2).mean())
    v = v / np.sqrt((v**2).mean())
    x2 = r * u + np.sqrt(1 - r**2) * v
    return np.column_stack([u, x2])


def dataset_for(X, seed=1):
    y = np.random.default_rng(seed).standard_normal(X.shape[0])
    return Dataset.from_standardized(X, y - y.mean())


def manual_similarity(matrix, variant="absolute", clamp=1e-4):
    matrix = np.asarray(matrix, dtype=np.float64)
    return SimilarityMatrix(variant=variant, clamp=clamp, p=matrix.shape[0],
                            diag=matrix.diagonal().copy(), matrix=matrix,
                            source=None)


class TestVariants:
    def test_orthogonal_columns_zero_offdiag(self):
        X = pair_with_correlation(0.0)
        ds = dataset_for(X)
        for variant in ("squared", "absolute", "ratio"):
            R = build_similarity(ds, variant)
            assert abs(R.matrix[0, 1]) < 1e-12

    def test_ratio_half_correlation(self):
        ds = dataset_for(pair_with_correlation(0.5))
        R = build_similarity(ds, "ratio")
        assert R.matrix[0, 1] == pytest.approx(1.0, abs=1e-12)
        assert R.matrix[0, 0] == 0.0 and R.matrix[1, 1] == 0.0

    def test_ratio_duplicate_clamped(self):
        X = pair_with_correlation(0.0)
        X = np.column_stack([X[:, 0], X[:, 0]])
        ds = dataset_for(X)
        R = build_similarity(ds, "ratio", clamp=1e-4)
        assert R.matrix[0, 1] == pytest.approx(9999.0, rel=1e-9)

    def test_squared_and_absolute_values(self):
        ds = dataset_for(pair_with_correlation(-0.6))
        Rs = build_similarity(ds, "squared")
        Ra = build_similarity(ds, "absolute")
        assert Rs.matrix[0, 1] == pytest.approx(0.36, abs=1e-12)
        assert Ra.matrix[0, 1] == pytest.approx(0.6, abs=1e-12)
        assert Rs.matrix[0, 0] == 1.0 and Ra.matrix[0, 0] == 1.0

    def test_monotone_in_absolute_correlation(self):
        grid = [0.0, 0.1, 0.3, 0.5, 0.7, 0.9]
        for variant in ("squared", "absolute", "ratio"):
            vals = []
            for r in grid:
                ds = dataset_for(pair_with_correlation(r))
                vals.append(build_similarity(ds, variant).matrix[0, 1])
            assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_symmetric_nonnegative_finite(self, rng):
        X = standardize_cols(rng.standard_normal((40, 12)))
        ds = dataset_for(X)
        for variant in ("squared", "absolute", "ratio"):
            R = build_similarity(ds, variant)
            assert np.array_equal(R.matrix, R.matrix.T)
            assert (R.matrix >= 0).all()
            assert np.isfinite(R.matrix).all()

    def test_squared_variant_psd(self, rng):
        X = standardize_cols(rng.standard_normal((50, 20)))
        R = build_similarity(dataset_for(X), "squared")
        assert np.linalg.eigvalsh(R.matrix).min() >= -1e-8

    def test_group_indicator(self, rng):
        X = standardize_cols(rng.standard_normal((30, 6)))
        part = GroupPartition(((0, 1), (2, 3, 4), (5,)))
        R = build_similarity(dataset_for(X), "group_indicator", partition=part)
        expected = np.zeros((6, 6))
        for g in part.groups:
            for j in g:
                for k in g:
                    expected[j, k] = 1.0
        assert np.array_equal(R.matrix, expected)

    def test_group_partition_validation(self):
        with pytest.raises(ValueError, match="overlap"):
            GroupPartition(((0, 1), (1, 2)))
        with pytest.raises(ValueError, match="empty group"):
            GroupPartition(((0, 1), ()))
        part = GroupPartition(((0, 1),))
        with pytest.raises(ValueError, match="cover"):
            part.validate_covering(3)

    def test_build_errors(self, rng):
        X = standardize_cols(rng.standard_normal((20, 4)))
        ds = dataset_for(X)
        raw = Dataset.from_raw(X, rng.standard_normal(20), standardize=False)
        with pytest.raises(ValueError, match="standardized"):
            build_similarity(raw, "ratio")
        with pytest.raises(ValueError, match="clamp"):
            build_similarity(ds, "ratio", clamp=0.0)
        with pytest.raises(ValueError, match="needs a partition"):
            build_similarity(ds, "group_indicator")
        with pytest.raises(ValueError, match="only applies"):
            build_similarity(ds, "ratio", partition=GroupPartition(((0, 1, 2, 3),)))
        with pytest.raises(ValueError, match="variant"):
            build_similarity(ds, "cosine")


class TestLazyMode:
    def test_matches_dense(self, rng):
        X = standardize_cols(rng.standard_normal((30, 8)))
        ds = dataset_for(X)
        for variant in ("squared", "absolute", "ratio"):
            dense = build_similarity(ds, variant)
            lazy = build_similarity(ds, variant, dense_threshold=4)
            assert not lazy.is_dense
            assert np.allclose(lazy.toarray(), dense.matrix, atol=1e-14)
            beta = rng.standard_normal(8)
            assert np.allclose(lazy.matvec_abs(beta), dense.matvec_abs(beta),
                               atol=1e-12)
            rows = np.array([1, 5])
            cols = np.array([0, 2, 7])
            assert np.allclose(lazy.submatrix(rows, cols),
                               dense.matrix[np.ix_(rows, cols)], atol=1e-14)


class TestPenaltyValue:
    def test_zero_vector(self):
        R = manual_similarity(np.eye(3))
        assert penalty_value(np.zeros(3), PenaltySpec(2.0, 5.0, R)) == 0.0

    def test_hand_expansion(self):
        R = manual_similarity([[0.0, 2.0], [2.0, 0.0]])
        value = penalty_value([1.0, 1.0], PenaltySpec(1.0, 1.0, R))
        assert value == pytest.approx(4.0, abs=1e-12)

    def test_alpha_zero_is_l1(self, rng):
        R = manual_similarity(rng.uniform(0, 2, (5, 5)))
        beta = rng.standard_normal(5)
        assert penalty_value(beta, PenaltySpec(0.7, 0.0, R)) == pytest.approx(
            0.7 * np.abs(beta).sum(), rel=1e-14)

    def test_group_matches_exclusive_group_form(self, rng):
        groups = ((0, 1), (2,))
        part = GroupPartition(groups)
        X = standardize_cols(rng.standard_normal((25, 3)))
        R = build_similarity(dataset_for(X), "group_indicator", partition=part)
        lam, alpha = 1.0, 2.0
        for _ in range(20):
            beta = rng.standard_normal(3)
            direct = lam * (np.abs(beta).sum()) + (lam * alpha / 2) * (
                (abs(beta[0]) + abs(beta[1]))**2 + beta[2]**2)
            assert penalty_value(beta, PenaltySpec(lam, alpha, R)) == pytest.approx(
                direct, rel=1e-13)

    def test_dimension_mismatch(self):
        R = manual_similarity(np.eye(3))
        with pytest.raises(ValueError, match="length 2"):
            penalty_value(np.ones(2), PenaltySpec(1.0, 1.0, R))

    def test_penalty_spec_validation(self):
        R = manual_similarity(np.eye(2))
        with pytest.raises(ValueError, match="lambda"):
            PenaltySpec(-0.1, 0.0, R)
        with pytest.raises(ValueError, match="alpha"):
            PenaltySpec(0.1, -1.0, R)

    @given(st.floats(-5, 5), st.floats(-5, 5))
    @settings(max_examples=60, deadline=None)
    def test_sign_invariance(self, b1, b2):
        # the penalty only sees |beta|
        R = manual_similarity([[1.0, 0.5], [0.5, 1.0]])
        pen = PenaltySpec(1.3, 0.7, R)
        base = penalty_value([b1, b2], pen)
        assert penalty_value([-b1, b2], pen) == pytest.approx(base, rel=1e-12, abs=1e-12)
        assert penalty_value([b1, -b2], pen) == pytest.approx(base, rel=1e-12, abs=1e-12)


class TestContourShape:
    """Level-set geometry: off-diagonal entries pinch the diagonal direction,
    diagonal entries round the axis directions."""

    def penalty(self, R, beta):
        return penalty_value(beta, PenaltySpec(1.0, 1.0, manual_similarity(R)))

    def test_offdiagonal_penalizes_joint_activity(self):
        t = 0.7
        vals = [self.penalty([[0.0, c], [c, 0.0]], [t, t]) for c in (0.0, 1.0, 2.0)]
        assert vals[0] < vals[1] < vals[2]

    def test_offdiagonal_leaves_axes_alone(self):
        for c in (0.0, 1.0, 2.0):
            assert self.penalty([[0.0, c], [c, 0.0]], [0.9, 0.0]) == pytest.approx(0.9)

    def test_diagonal_penalizes_axes(self):
        vals = [self.penalty([[d, 0.0], [0.0, d]], [0.9, 0.0]) for d in (0.0, 1.0, 2.0)]
        assert vals[0] < vals[1] < vals[2]
