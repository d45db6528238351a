"""Dense primitive tests: normalization, covariance, spectra, cosines."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gaplab.linalg import (
    EmbeddingMatrix,
    PairedEmbeddings,
    SpectralSummary,
    cosine,
    covariance,
    l2_normalize_rows,
    mean_pairwise_cosine,
    row_mean,
    spectral_summary,
)


def jacobi_eigenvalues(a, sweeps=100, tol=1e-14):
    """Cyclic Jacobi rotations; an eigensolver independent of LAPACK."""
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    for _ in range(sweeps):
        off = np.sqrt((a**2).sum() - (np.diag(a) ** 2).sum())
        if off < tol * max(1.0, np.abs(np.diag(a)).max()):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta**2 + 1.0))
                if theta == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(t**2 + 1.0)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
    return np.sort(np.diag(a))[::-1]


class TestNormalize:
    def test_three_four_five(self):
        out = l2_normalize_rows(np.array([[3.0, 4.0]]))
        np.testing.assert_allclose(out.values, [[0.6, 0.8]], rtol=0, atol=1e-15)
        assert out.unit_norm

    def test_idempotent(self):
        rng = np.random.default_rng(7)
        once = l2_normalize_rows(rng.standard_normal((40, 9)))
        twice = l2_normalize_rows(once)
        np.testing.assert_allclose(twice.values, once.values, rtol=0, atol=1e-12)

    def test_zero_row_rejected_with_index(self):
        m = np.ones((4, 3))
        m[2] = 0.0
        with pytest.raises(ValueError, match="index 2"):
            l2_normalize_rows(m)

    def test_direction_preserved(self):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((20, 5)) * 10
        out = l2_normalize_rows(m).values
        cos = np.einsum("ij,ij->i", out, m) / np.linalg.norm(m, axis=1)
        np.testing.assert_allclose(cos, 1.0, atol=1e-12)

    @given(st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_unit_norm_property(self, seed):
        rng = np.random.default_rng(seed)
        m = rng.standard_normal((8, 6)) * rng.uniform(0.1, 100)
        norms = np.linalg.norm(l2_normalize_rows(m).values, axis=1)
        assert np.abs(norms - 1.0).max() < 1e-12


class TestRowMean:
    def test_two_rows(self):
        np.testing.assert_array_equal(row_mean([[1.0, 0.0], [0.0, 1.0]]), [0.5, 0.5])

    def test_single_row(self):
        np.testing.assert_array_equal(row_mean([[2.5, -1.0, 3.0]]), [2.5, -1.0, 3.0])

    def test_large_sample_near_zero(self):
        rng = np.random.default_rng(11)
        m = rng.standard_normal((1000, 6))
        mean = row_mean(m)
        # oracle: plain accumulation, one dimension at a time
        direct = np.array([sum(m[i, j] for i in range(1000)) / 1000 for j in range(6)])
        np.testing.assert_allclose(mean, direct, rtol=0, atol=1e-12)
        assert np.abs(mean).max() < 0.15


class TestCovariance:
    def test_constant_rows_zero(self):
        m = np.tile([1.5, -2.0, 0.25], (6, 1))
        np.testing.assert_array_equal(covariance(m), np.zeros((3, 3)))

    def test_two_point_diag(self):
        np.testing.assert_allclose(
            covariance([[1.0, 0.0], [-1.0, 0.0]]), np.diag([1.0, 0.0]), atol=1e-15
        )

    def test_matches_brute_force(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal((50, 8))
        mean = m.mean(axis=0)
        brute = np.zeros((8, 8))
        for row in m:
            brute += np.outer(row - mean, row - mean)
        brute /= 50
        np.testing.assert_allclose(covariance(m), brute, atol=1e-10)

    def test_shift_invariance(self):
        rng = np.random.default_rng(9)
        m = rng.standard_normal((30, 5))
        shifted = m + rng.standard_normal(5) * 100
        np.testing.assert_allclose(covariance(m), covariance(shifted), atol=1e-10)

    def test_needs_two_rows(self):
        with pytest.raises(ValueError):
            covariance([[1.0, 2.0]])

    def test_symmetric(self):
        c = covariance(np.random.default_rng(1).standard_normal((40, 7)))
        assert np.abs(c - c.T).max() <= 1e-12


class TestSpectralSummary:
    def test_four_value_spectrum(self):
        s = spectral_summary(np.diag([4.0, 3.0, 2.0, 1.0]), gamma=0.9)
        assert s.effective_dim == 3
        np.testing.assert_allclose(s.singular_values, [4, 3, 2, 1], atol=1e-12)

    def test_identity_covariance(self):
        s = spectral_summary(np.eye(100), gamma=0.99)
        assert s.effective_dim == 99

    def test_eigenvalues_match_jacobi_oracle(self):
        rng = np.random.default_rng(21)
        a = rng.standard_normal((6, 6))
        c = a @ a.T / 6
        expected = jacobi_eigenvalues(c)
        got = spectral_summary(c, gamma=0.99).singular_values
        np.testing.assert_allclose(got, expected, rtol=1e-8)

    def test_sum_matches_trace(self):
        rng = np.random.default_rng(2)
        c = covariance(rng.standard_normal((200, 32)))
        s = spectral_summary(c)
        assert abs(s.total - np.trace(c)) <= 1e-8 * abs(np.trace(c))

    def test_rank_k_construction(self):
        rng = np.random.default_rng(13)
        for k in (3, 8):
            q, _ = np.linalg.qr(rng.standard_normal((40, k)))
            m = rng.standard_normal((500, k)) @ q.T + rng.standard_normal(40)
            c = covariance(m)
            for gamma in (0.99, 1.0 - 1e-9):
                assert spectral_summary(c, gamma).effective_dim == k

    def test_rejects_non_symmetric(self):
        c = np.array([[1.0, 0.5], [0.0, 1.0]])
        with pytest.raises(ValueError, match="symmetric"):
            spectral_summary(c)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            spectral_summary(np.array([[np.nan, 0.0], [0.0, 1.0]]))

    def test_rejects_zero_spectrum(self):
        with pytest.raises(ValueError, match="zero total"):
            spectral_summary(np.zeros((3, 3)))

    @given(st.integers(0, 5_000), st.floats(0.05, 1.0), st.floats(0.05, 1.0))
    @settings(max_examples=40, deadline=None)
    def test_effective_dim_monotone_in_gamma(self, seed, g1, g2):
        rng = np.random.default_rng(seed)
        a = rng.standard_normal((6, 6))
        c = a @ a.T
        lo, hi = sorted((g1, g2))
        s_lo = spectral_summary(c, lo)
        s_hi = spectral_summary(c, hi)
        assert 1 <= s_lo.effective_dim <= s_hi.effective_dim <= 6


class TestCosine:
    def test_self_is_one(self):
        v = np.array([0.3, -1.2, 4.0])
        assert cosine(v, v) == pytest.approx(1.0, abs=1e-15)

    def test_orthogonal_axes(self):
        assert cosine([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_forty_five_degrees(self):
        assert cosine([1.0, 1.0], [1.0, 0.0]) == pytest.approx(np.sqrt(2) / 2, abs=1e-15)

    def test_zero_vector_rejected(self):
        with pytest.raises(ValueError):
            cosine([0.0, 0.0], [1.0, 0.0])

    @given(st.integers(0, 10_000))
    @settings(max_examples=50, deadline=None)
    def test_clamped_to_unit_interval(self, seed):
        rng = np.random.default_rng(seed)
        u = rng.standard_normal(4) * rng.uniform(1e-6, 1e6)
        v = rng.standard_normal(4) * rng.uniform(1e-6, 1e6)
        assert -1.0 <= cosine(u, v) <= 1.0


class TestMeanPairwiseCosine:
    def test_identical_rows(self):
        m = np.tile([1.0, 2.0, 2.0], (5, 1))
        mean, std = mean_pairwise_cosine(m)
        assert mean == pytest.approx(1.0, abs=1e-12)
        assert std == pytest.approx(0.0, abs=1e-12)

    def test_standard_basis(self):
        mean, std = mean_pairwise_cosine(np.eye(6))
        assert mean == 0.0
        assert std == 0.0

    def test_isotropic_gaussian_near_zero(self):
        rng = np.random.default_rng(17)
        m = rng.standard_normal((1000, 512))
        mean, _ = mean_pairwise_cosine(m, seed=0)
        # oracle: full enumeration through the Gram matrix
        unit = m / np.linalg.norm(m, axis=1)[:, None]
        gram = unit @ unit.T
        full_mean = gram[np.triu_indices(1000, k=1)].mean()
        assert abs(full_mean) < 0.05
        assert abs(mean - full_mean) < 0.02

    def test_subsample_deterministic(self):
        rng = np.random.default_rng(23)
        m = rng.standard_normal((300, 8))
        assert mean_pairwise_cosine(m, seed=5) == mean_pairwise_cosine(m, seed=5)

    def test_rejects_zero_rows(self):
        m = np.ones((3, 2))
        m[1] = 0.0
        with pytest.raises(ValueError):
            mean_pairwise_cosine(m)


class TestContainers:
    def test_unit_norm_contract_enforced(self):
        with pytest.raises(ValueError, match="unit_norm"):
            EmbeddingMatrix(np.array([[1.0, 1.0]]), unit_norm=True)

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            EmbeddingMatrix(np.array([[np.inf, 0.0]]))

    def test_paired_shape_checks(self):
        a = EmbeddingMatrix(np.ones((3, 2)))
        b = EmbeddingMatrix(np.ones((4, 2)))
        with pytest.raises(ValueError):
            PairedEmbeddings(x=a, y=b)

    def test_spectral_summary_validates_order(self):
        with pytest.raises(ValueError):
            SpectralSummary(singular_values=np.array([1.0, 2.0]), gamma=0.9)
