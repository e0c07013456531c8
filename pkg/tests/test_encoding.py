import inspect

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from segment_purify import (
    GmmModel,
    UnnormalizedFV,
    aggregate,
    fisher_vector,
    fit_gmm,
    fit_pca,
    frame_fisher_vectors,
    fv_length,
    mean_pool,
    power_l2_normalize,
)
from segment_purify.pipeline import fit_channel_models


def random_gmm(rng, d, k):
    """A valid mixture with random parameters (not fitted to anything)."""
    w = rng.random(k) + 0.1
    return GmmModel(
        weights=w / w.sum(),
        means=rng.normal(size=(k, d)),
        variances=rng.random((k, d)) + 0.2,
    )


def naive_fisher_vector(X, gmm):
    """Literal per-descriptor, per-component loop over the defining sums."""
    d, k = gmm.dim, gmm.k
    mean_block = np.zeros((k, d))
    var_block = np.zeros((k, d))
    for x in X:
        dens = np.array(
            [
                gmm.weights[c]
                * np.prod(
                    np.exp(-0.5 * (x - gmm.means[c]) ** 2 / gmm.variances[c])
                    / np.sqrt(2 * np.pi * gmm.variances[c])
                )
                for c in range(k)
            ]
        )
        resp = dens / dens.sum()
        for c in range(k):
            z = (x - gmm.means[c]) / np.sqrt(gmm.variances[c])
            mean_block[c] += resp[c] * z / np.sqrt(gmm.weights[c])
            var_block[c] += resp[c] * (z**2 - 1) / np.sqrt(2 * gmm.weights[c])
    return np.concatenate([mean_block.ravel(), var_block.ravel()])


class TestPca:
    def test_identical_rows_zero_variance(self):
        X = np.tile([3.0, -1.0, 2.0], (10, 1))
        model = fit_pca(X, dim=2)
        assert np.allclose(model.eigenvalues, 0.0)
        assert np.allclose(model.transform(X), 0.0)

    def test_line_component(self):
        # points on y = 2x: leading direction (1, 2)/sqrt(5), no residual
        t = np.linspace(-3, 3, 40)
        X = np.column_stack([t, 2 * t])
        model = fit_pca(X, dim=2)
        lead = model.components[0]
        expected = np.array([1.0, 2.0]) / np.sqrt(5.0)
        assert np.allclose(np.abs(lead @ expected), 1.0, atol=1e-12)
        assert model.eigenvalues[1] < 1e-20
        # hand oracle: eigendecomposition of the sample covariance
        evals = np.linalg.eigvalsh(np.cov(X.T))
        assert np.allclose(sorted(model.eigenvalues), sorted(evals), atol=1e-12)

    @pytest.mark.parametrize("D,expected", [(30, 15), (96, 48), (108, 54), (192, 96)])
    def test_half_dimension_default(self, D, expected, rng):
        X = rng.normal(size=(max(2 * D, 64), D))
        model = fit_pca(X)
        assert model.output_dim == expected

    def test_odd_dimension_rounds_down(self, rng):
        model = fit_pca(rng.normal(size=(30, 7)))
        assert model.output_dim == 3

    def test_errors(self, rng):
        with pytest.raises(ValueError):
            fit_pca(rng.normal(size=(1, 4)))
        with pytest.raises(ValueError):
            fit_pca(rng.normal(size=(10, 4)), dim=5)
        with pytest.raises(ValueError):
            fit_pca(rng.normal(size=(10, 4)), dim=0)

    def test_components_orthonormal(self, rng):
        model = fit_pca(rng.normal(size=(50, 8)), dim=5)
        gram = model.components @ model.components.T
        assert np.allclose(gram, np.eye(5), atol=1e-10)
        assert np.all(np.diff(model.eigenvalues) <= 1e-12)

    def test_mean_roundtrip(self, rng):
        model = fit_pca(rng.normal(size=(40, 6)), dim=3)
        z = model.transform(model.mean[None, :])
        assert np.allclose(z, 0.0, atol=1e-12)
        back = model.inverse_transform(z)
        assert np.allclose(back, model.mean, atol=1e-12)

    def test_whiten_unit_variance(self, rng):
        X = rng.normal(size=(500, 6)) * np.array([5.0, 2.0, 1.0, 0.5, 0.2, 0.1])
        model = fit_pca(X, dim=4)
        Z = model.transform(X, whiten=True)
        assert np.allclose(Z.var(axis=0, ddof=1), 1.0, atol=1e-8)


class TestGmm:
    def test_single_component_closed_form(self, rng):
        X = rng.normal(size=(200, 3)) * [1.0, 2.0, 0.5] + [1.0, -2.0, 0.0]
        model = fit_gmm(X, k=1, seed=0)
        assert np.allclose(model.weights, [1.0])
        assert np.allclose(model.means[0], X.mean(axis=0), atol=1e-9)
        assert np.allclose(model.variances[0], X.var(axis=0), atol=1e-9)

    def test_two_separated_clusters(self, rng):
        # generate-and-check: recover the known generating parameters
        a = rng.normal(size=(1000, 2)) + [5.0, 0.0]
        b = rng.normal(size=(1000, 2)) + [-5.0, 0.0]
        X = np.concatenate([a, b])
        model = fit_gmm(X, k=2, seed=0)
        order = np.argsort(model.means[:, 0])
        assert np.allclose(model.means[order][0], [-5.0, 0.0], atol=0.3)
        assert np.allclose(model.means[order][1], [5.0, 0.0], atol=0.3)
        assert np.allclose(model.weights, [0.5, 0.5], atol=0.1)

    def test_log_likelihood_monotone(self, rng):
        for _ in range(5):
            X = rng.normal(size=(150, 3)) * rng.random(3) + rng.normal(size=3)
            model = fit_gmm(X, k=3, seed=int(rng.integers(1000)))
            ll = np.array(model.fit_log_likelihoods)
            assert len(ll) >= 2
            assert np.all(np.diff(ll) >= -1e-10)

    def test_weights_floor_and_sum(self, rng):
        model = fit_gmm(rng.normal(size=(100, 2)), k=4, seed=1)
        assert abs(model.weights.sum() - 1.0) < 1e-9
        assert np.all(model.weights >= 1e-6)
        assert np.all(model.variances > 0)

    def test_errors(self, rng):
        with pytest.raises(ValueError):
            fit_gmm(rng.normal(size=(3, 2)), k=4)
        with pytest.raises(ValueError):
            fit_gmm(rng.normal(size=(10, 2)), k=0)

    def test_default_component_count_is_256(self):
        assert inspect.signature(fit_channel_models).parameters["k"].default == 256

    def test_deterministic_for_seed(self, rng):
        X = rng.normal(size=(200, 2))
        m1 = fit_gmm(X, k=3, seed=7)
        m2 = fit_gmm(X, k=3, seed=7)
        assert np.array_equal(m1.means, m2.means)
        assert np.array_equal(m1.weights, m2.weights)


class TestFisherVector:
    def test_empty_set(self, rng):
        gmm = random_gmm(rng, d=3, k=2)
        fv = fisher_vector(np.empty((0, 3)), gmm)
        assert fv.support_count == 0
        assert fv.dim == fv_length(3, 2)
        assert np.all(fv.values == 0.0)

    def test_single_descriptor_at_mean(self):
        # k=1, x = mu: first-order terms vanish, second-order hit -1/sqrt(2)
        gmm = GmmModel(
            weights=np.array([1.0]),
            means=np.array([[0.5, -1.0]]),
            variances=np.array([[2.0, 0.5]]),
        )
        fv = fisher_vector(gmm.means.copy(), gmm)
        assert np.allclose(fv.values[:2], 0.0, atol=1e-15)
        assert np.allclose(fv.values[2:], -1.0 / np.sqrt(2.0), atol=1e-15)
        assert fv.support_count == 1

    def test_paper_scale_length(self):
        # four descriptor types halve to 15+48+54+96 = 213 dims total
        assert fv_length(213, 256) == 109_056

    def test_matches_naive_oracle(self, rng):
        for _ in range(10):
            d = int(rng.integers(1, 5))
            k = int(rng.integers(1, 4))
            n = int(rng.integers(1, 30))
            gmm = random_gmm(rng, d, k)
            X = rng.normal(size=(n, d))
            fast = fisher_vector(X, gmm)
            assert fast.support_count == n
            assert np.allclose(fast.values, naive_fisher_vector(X, gmm), atol=1e-9)

    def test_dimension_mismatch(self, rng):
        gmm = random_gmm(rng, d=3, k=2)
        with pytest.raises(ValueError):
            fisher_vector(rng.normal(size=(5, 4)), gmm)

    def test_frame_encoding_matches_per_frame_sets(self, rng):
        gmm = random_gmm(rng, d=3, k=2)
        idx = rng.integers(1, 8, size=60)
        X = rng.normal(size=(60, 3))
        values, counts = frame_fisher_vectors(idx, X, gmm, n_frames=10)
        for f in range(1, 11):
            expected = fisher_vector(X[idx == f], gmm)
            assert counts[f - 1] == expected.support_count
            assert np.allclose(values[f - 1], expected.values, atol=1e-10)

    def test_frame_index_out_of_range(self, rng):
        gmm = random_gmm(rng, d=2, k=1)
        with pytest.raises(ValueError):
            frame_fisher_vectors([0], rng.normal(size=(1, 2)), gmm, n_frames=5)


class TestAggregate:
    def test_identity(self, rng):
        v = UnnormalizedFV(values=rng.normal(size=6), support_count=3)
        out = aggregate([v])
        assert np.array_equal(out.values, v.values)
        assert out.support_count == 3

    def test_disjoint_union(self, rng):
        gmm = random_gmm(rng, d=2, k=2)
        A = rng.normal(size=(12, 2))
        B = rng.normal(size=(7, 2))
        lhs = aggregate([fisher_vector(A, gmm), fisher_vector(B, gmm)])
        rhs = fisher_vector(np.concatenate([A, B]), gmm)
        assert lhs.support_count == rhs.support_count == 19
        assert np.allclose(lhs.values, rhs.values, atol=1e-9, rtol=0)

    def test_commutative_associative_with_zero(self, rng):
        gmm = random_gmm(rng, d=2, k=1)
        fvs = [fisher_vector(rng.normal(size=(4, 2)), gmm) for _ in range(3)]
        zero = UnnormalizedFV(values=np.zeros(fvs[0].dim), support_count=0)
        a = aggregate([fvs[0], aggregate([fvs[1], fvs[2]])])
        b = aggregate([aggregate([fvs[2], fvs[0]]), fvs[1], zero])
        assert np.allclose(a.values, b.values, atol=1e-12)
        assert a.support_count == b.support_count

    def test_errors(self, rng):
        with pytest.raises(ValueError):
            aggregate([])
        with pytest.raises(ValueError):
            aggregate(
                [
                    UnnormalizedFV(np.zeros(4), 1),
                    UnnormalizedFV(np.zeros(6), 1),
                ]
            )


class TestNormalize:
    def test_hand_case(self):
        out = power_l2_normalize(np.array([4.0, -9.0]))
        assert np.allclose(out, [2.0 / np.sqrt(13), -3.0 / np.sqrt(13)], atol=1e-12)

    def test_zero_maps_to_zero(self):
        assert np.all(power_l2_normalize(np.zeros(5)) == 0.0)

    def test_accepts_unnormalized_fv(self, rng):
        fv = UnnormalizedFV(values=rng.normal(size=4), support_count=2)
        assert np.allclose(
            power_l2_normalize(fv), power_l2_normalize(fv.values)
        )

    @given(st.floats(min_value=1e-6, max_value=1e6))
    @settings(max_examples=30)
    def test_scale_invariance(self, c):
        v = np.array([1.5, -2.0, 0.0, 3.25])
        assert np.allclose(
            power_l2_normalize(c * v), power_l2_normalize(v), atol=1e-9
        )

    def test_unit_norm(self, rng):
        for _ in range(10):
            v = rng.normal(size=8)
            assert abs(np.linalg.norm(power_l2_normalize(v)) - 1.0) < 1e-6


class TestMeanPool:
    def test_constant_vectors(self):
        v = np.array([3.0, 4.0])
        idx = np.arange(1, 11)
        vecs = np.tile(v, (10, 1))
        mask = np.ones(10, dtype=bool)
        assert np.allclose(mean_pool(idx, vecs, mask), v / 5.0)

    def test_two_halves_oracle(self):
        # frames 1-5 carry e1, frames 6-10 carry e2; mean is the bisector
        idx = np.arange(1, 11)
        vecs = np.zeros((10, 2))
        vecs[:5, 0] = 1.0
        vecs[5:, 1] = 1.0
        mask = np.ones(10, dtype=bool)
        expected = np.array([1.0, 1.0]) / np.linalg.norm([1.0, 1.0])
        assert np.allclose(mean_pool(idx, vecs, mask), expected)

    def test_sampling_stride_honored(self):
        # rows exist only at frames 1, 6, 11; frames 2-5 contribute nothing
        idx = np.array([1, 6, 11])
        vecs = np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        mask = np.zeros(15, dtype=bool)
        mask[0:5] = True  # frames 1..5
        out = mean_pool(idx, vecs, mask)
        assert np.allclose(out, [1.0, 0.0])

    def test_empty_intersection_is_zero(self):
        idx = np.array([1, 6])
        vecs = np.ones((2, 3))
        mask = np.zeros(10, dtype=bool)
        mask[2] = True  # frame 3 only, never sampled
        assert np.all(mean_pool(idx, vecs, mask) == 0.0)
