import numpy as np
import pytest
from hypothesis import given, strategies as st

from cggm.errors import NonPositiveDefinite, SingletonCluster
from cggm.graphs import gen_band, precision_from_adjacency
from cggm.model import Partition, SampleMatrix, build_model, cluster_averages, sample

from conftest import band_model, partitions


def cofactor_inverse_3x3(M):
    M = np.asarray(M, dtype=float)
    cof = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            minor = np.delete(np.delete(M, i, 0), j, 1)
            cof[i, j] = (-1) ** (i + j) * (minor[0, 0] * minor[1, 1] - minor[0, 1] * minor[1, 0])
    det = M[0] @ cof[0]
    return cof.T / det


class TestPartition:
    def test_canonical_labels(self):
        p = Partition([7, 7, 3, 3, 9])
        assert p.labels.tolist() == [0, 0, 1, 1, 2]
        assert p.K == 3
        assert p.sizes.tolist() == [2, 2, 1]
        assert Partition([1, 1, 0, 0, 2]) == p

    @given(partitions())
    def test_sizes_sum_to_d(self, p):
        assert p.sizes.sum() == p.d
        assert np.all(p.sizes >= 1)
        assert set(p.labels.tolist()) == set(range(p.K))

    def test_round_robin_balanced(self):
        p = Partition.round_robin(23, 5)
        assert p.sizes.max() - p.sizes.min() <= 1
        assert p.labels[:5].tolist() == [0, 1, 2, 3, 4]

    def test_singleton_check(self):
        with pytest.raises(SingletonCluster):
            Partition([0, 0, 1]).require_min_size(2)


class TestBuildModel:
    def test_trivial_pairs(self):
        m = build_model(Partition([0, 0, 1, 1]), np.eye(2), np.ones(4))
        np.testing.assert_allclose(m.s_star, np.diag([1.5, 1.5]))
        np.testing.assert_allclose(m.omega_star, np.diag([2 / 3, 2 / 3]))

    def test_identity_theta_unit_blocks(self):
        p = Partition([0, 1, 0, 2, 1, 2])
        m = build_model(p, np.eye(3), np.full(6, 0.4))
        np.testing.assert_allclose(m.c_star, np.eye(3))
        same = p.labels[:, None] == p.labels[None, :]
        off = same & ~np.eye(6, dtype=bool)
        np.testing.assert_allclose(m.sigma_star[off], 1.0)
        np.testing.assert_allclose(m.sigma_star[~same], 0.0)

    def test_omega_matches_cofactor_oracle(self):
        theta = precision_from_adjacency(gen_band(3, 1), 0.3)
        m = build_model(Partition.from_sizes([2, 3, 4]), theta, np.linspace(0.3, 0.5, 9))
        np.testing.assert_allclose(m.omega_star, cofactor_inverse_3x3(m.s_star), atol=1e-8, rtol=0)

    @given(st.integers(2, 6), st.integers(2, 4), st.integers(0, 10_000))
    def test_inverse_identities(self, K, msize, seed):
        m = band_model(K=K, m=msize, seed=seed, bandwidth=1)
        np.testing.assert_allclose(m.theta_star @ m.c_star, np.eye(K), atol=1e-10)
        np.testing.assert_allclose(m.omega_star @ m.s_star, np.eye(K), atol=1e-10)
        off = ~np.eye(K, dtype=bool)
        np.testing.assert_allclose(m.s_star[off], m.c_star[off])
        g = m.partition
        for k in range(K):
            expect = m.c_star[k, k] + m.gamma_star[g.members(k)].sum() / g.sizes[k] ** 2
            assert m.s_star[k, k] == pytest.approx(expect)
        np.testing.assert_allclose(m.sigma_star, m.sigma_star.T)
        np.testing.assert_allclose(np.diag(m.sigma_star), np.diag(m.c_star)[g.labels] + m.gamma_star)

    def test_rejects_indefinite(self):
        with pytest.raises(NonPositiveDefinite):
            build_model(Partition([0, 0, 1, 1]), np.array([[1.0, 2.0], [2.0, 1.0]]), np.ones(4))

    def test_rejects_singleton(self):
        with pytest.raises(SingletonCluster):
            build_model(Partition([0, 0, 1]), np.eye(2), np.ones(3))

    def test_rejects_zero_noise(self):
        with pytest.raises(ValueError):
            build_model(Partition([0, 0, 1, 1]), np.eye(2), np.array([1.0, 0.0, 1.0, 1.0]))


class TestSample:
    def test_deterministic(self, small_model):
        a = sample(small_model, 50, 11).data
        b = sample(small_model, 50, 11).data
        assert np.array_equal(a, b)
        assert not np.array_equal(a, sample(small_model, 50, 12).data)

    def test_n_too_small(self, small_model):
        with pytest.raises(ValueError):
            sample(small_model, 1, 0)

    def test_covariance_converges(self):
        m = build_model(Partition([0, 0, 1, 1]), np.eye(2), np.array([0.3, 0.4, 0.5, 0.35]))
        x = sample(m, 100_000, 5).data
        emp = x.T @ x / x.shape[0]
        assert np.max(np.abs(emp - m.sigma_star)) < 0.05

    def test_averages_covariance_converges(self):
        m = band_model(K=4, m=3, c=0.3, seed=2)
        xbar = cluster_averages(sample(m, 100_000, 9), m.partition)
        assert np.max(np.abs(xbar.T @ xbar / xbar.shape[0] - m.s_star)) < 0.05


class TestClusterAverages:
    def test_hand_case(self):
        out = cluster_averages(np.array([[1.0, 3.0], [2.0, 4.0]]), Partition([0, 0]))
        np.testing.assert_allclose(out, [[2.0], [3.0]])

    def test_constant_rows(self):
        x = np.array([[2.0] * 4, [-1.0] * 4])
        out = cluster_averages(x, Partition([0, 1, 0, 1]))
        np.testing.assert_allclose(out, [[2.0, 2.0], [-1.0, -1.0]])

    def test_matches_double_loop(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(100, 6))
        p = Partition([0, 1, 2, 0, 1, 2])
        naive = np.zeros((100, 3))
        for i in range(100):
            for k in range(3):
                cols = [j for j in range(6) if p.labels[j] == k]
                naive[i, k] = sum(x[i, j] for j in cols) / len(cols)
        np.testing.assert_allclose(cluster_averages(x, p), naive, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            cluster_averages(np.zeros((3, 4)), Partition([0, 0, 1]))


def test_sample_matrix_validation():
    with pytest.raises(ValueError):
        SampleMatrix(np.zeros((1, 3)))
    with pytest.raises(ValueError):
        SampleMatrix(np.array([[0.0, np.nan], [1.0, 2.0]]))
