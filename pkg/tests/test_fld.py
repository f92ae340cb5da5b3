import copy

import numpy as np
import pytest

from fldmot import fld, linalg
from fldmot.errors import (
    DimensionMismatchError,
    EmptyQueueError,
    EmptySampleSetError,
    InsufficientClassesError,
    InsufficientSamplesError,
)

from conftest import make_cluster_queues


def queue_of(entries, identity=1, capacity=99):
    return fld.FeatureQueue(
        identity=identity,
        entries=[(a, np.asarray(f, dtype=np.float64)) for a, f in entries],
        capacity=capacity,
    )


class TestCentroids:
    def test_lambda_one_is_plain_mean(self):
        q = queue_of([(1, [1.0, 0.0]), (2, [0.0, 1.0])])
        assert np.array_equal(fld.weighted_centroid(q, 1.0), [0.5, 0.5])

    def test_lambda_one_matches_naive_bitwise(self, rng):
        for _ in range(20):
            depth = int(rng.integers(1, 9))
            q = queue_of(
                [(a + 1, rng.normal(size=5)) for a in range(depth)]
            )
            assert np.array_equal(
                fld.weighted_centroid(q, 1.0), fld.naive_centroid(q)
            )

    def test_geometric_weights(self):
        a = np.array([3.0, -1.0])
        b = np.array([0.5, 2.0])
        q = queue_of([(1, a), (2, b)])
        want = (0.9 * a + 0.81 * b) / (0.9 + 0.81)
        got = fld.weighted_centroid(q, 0.9)
        assert np.abs(got - want).max() <= 1e-15

    def test_single_entry_any_lambda(self):
        f = np.array([0.3, 0.4, 0.5])
        for lam in (0.1, 0.5, 0.9, 1.0):
            q = queue_of([(3, f)])
            assert np.allclose(fld.weighted_centroid(q, lam), f)

    def test_empty_queue(self):
        with pytest.raises(EmptyQueueError):
            fld.weighted_centroid(queue_of([]), 0.9)

    def test_global_mean_single(self):
        f = np.array([1.0, 2.0])
        assert np.allclose(fld.weighted_global_mean([queue_of([(1, f)])], 0.5), f)

    def test_global_mean_plain(self):
        qs = [
            queue_of([(1, [2.0, 0.0])], identity=1),
            queue_of([(1, [0.0, 2.0])], identity=2),
        ]
        assert np.array_equal(fld.weighted_global_mean(qs, 1.0), [1.0, 1.0])

    def test_global_mean_weighted(self):
        a = np.array([4.0, 0.0])
        b = np.array([0.0, 2.0])
        qs = [queue_of([(1, a)], identity=1), queue_of([(2, b)], identity=2)]
        want = (0.9 * a + 0.81 * b) / 1.71
        assert np.abs(fld.weighted_global_mean(qs, 0.9) - want).max() <= 1e-15

    def test_global_mean_empty(self):
        with pytest.raises(EmptySampleSetError):
            fld.weighted_global_mean([queue_of([])], 0.9)


class TestScatters:
    def test_within_hand_case(self):
        qs = [queue_of([(1, [1.0, 0.0]), (2, [-1.0, 0.0])])]
        cents = fld.CentroidSet({1: np.zeros(2)}, np.zeros(2), 1.0)
        assert np.array_equal(
            fld.scatter_within(qs, cents), [[2.0, 0.0], [0.0, 0.0]]
        )

    def test_within_zero_at_centroids(self):
        qs = [
            queue_of([(1, [1.0, 2.0])], identity=1),
            queue_of([(1, [3.0, 4.0])], identity=2),
        ]
        cents = fld.compute_centroids(qs, 0.9)
        assert np.array_equal(fld.scatter_within(qs, cents), np.zeros((2, 2)))

    def test_within_matches_naive_oracle_seed11(self):
        rng = np.random.default_rng(11)
        qs = make_cluster_queues(3, 6, 5, rng)
        cents = fld.compute_centroids(qs, 0.9)
        got = fld.scatter_within(qs, cents)
        acc = np.zeros((6, 6))
        for q in qs:
            m = cents.per_class[q.identity]
            for _, f in q.entries:
                d = f - m
                acc += np.outer(d, d)
        assert np.abs(got - acc).max() <= 1e-10

    def test_between_hand_case(self):
        qs = [
            queue_of([(1, [1.0, 0.0]), (2, [1.0, 0.0])], identity=1),
            queue_of([(1, [-1.0, 0.0]), (2, [-1.0, 0.0])], identity=2),
        ]
        cents = fld.CentroidSet(
            {1: np.array([1.0, 0.0]), 2: np.array([-1.0, 0.0])},
            np.zeros(2),
            1.0,
        )
        assert np.array_equal(
            fld.scatter_between(qs, cents), [[4.0, 0.0], [0.0, 0.0]]
        )

    def test_between_zero_if_means_equal(self):
        qs = [
            queue_of([(1, [1.0, 1.0])], identity=1),
            queue_of([(1, [1.0, 1.0])], identity=2),
        ]
        cents = fld.compute_centroids(qs, 0.9)
        assert np.array_equal(fld.scatter_between(qs, cents), np.zeros((2, 2)))

    def test_between_matches_naive_oracle_seed3(self):
        rng = np.random.default_rng(3)
        qs = make_cluster_queues(4, 5, 6, rng)
        cents = fld.compute_centroids(qs, 0.9)
        got = fld.scatter_between(qs, cents)
        acc = np.zeros((5, 5))
        for q in qs:
            d = cents.per_class[q.identity] - cents.global_mean
            acc += len(q.entries) * np.outer(d, d)
        assert np.abs(got - acc).max() <= 1e-10

    def test_bitwise_symmetric(self, rng):
        qs = make_cluster_queues(4, 7, 8, rng)
        cents = fld.compute_centroids(qs, 0.8)
        sw = fld.scatter_within(qs, cents)
        sb = fld.scatter_between(qs, cents)
        assert np.array_equal(sw, sw.T)
        assert np.array_equal(sb, sb.T)

    def test_between_rank_bound(self, rng):
        n_classes = 4
        qs = make_cluster_queues(n_classes, 9, 6, rng)
        cents = fld.compute_centroids(qs, 0.9)
        sb = fld.scatter_between(qs, cents)
        evals = linalg.sym_eig(sb).eigenvalues
        assert (np.abs(evals[n_classes - 1:]) <= 1e-8 * np.trace(sb)).all()

    def test_dim_mismatch(self):
        qs = [
            queue_of([(1, [1.0, 0.0])], identity=1),
            queue_of([(1, [1.0, 0.0, 0.0])], identity=2),
        ]
        cents = fld.CentroidSet(
            {1: np.zeros(2), 2: np.zeros(3)}, np.zeros(2), 1.0
        )
        with pytest.raises(DimensionMismatchError):
            fld.scatter_within(qs, cents)


class TestFitProjection:
    def test_two_class_matches_closed_form(self):
        for trial in range(20):
            rng = np.random.default_rng(200 + trial)
            qs = make_cluster_queues(2, 8, 10, rng, sep=1.0, noise=0.4)
            proj = fld.fit_projection(qs, 0.9, 1e-3)
            assert proj.output_dim == 1
            cents = fld.compute_centroids(qs, 0.9)
            sw_reg = fld.shrink_within(fld.scatter_within(qs, cents), 1e-3)
            m1 = cents.per_class[qs[0].identity]
            m2 = cents.per_class[qs[1].identity]
            oracle = np.linalg.solve(sw_reg, m1 - m2)
            assert abs(linalg.cosine(proj.w[:, 0], oracle)) >= 0.999

    def test_single_class_rejected(self, rng):
        qs = make_cluster_queues(1, 4, 5, rng)
        with pytest.raises(InsufficientClassesError):
            fld.fit_projection(qs, 0.9, 1e-3)

    def test_output_dim_capped_by_feature_dim(self, rng):
        qs = make_cluster_queues(5, 3, 6, rng)
        proj = fld.fit_projection(qs, 0.9, 1e-3)
        assert proj.output_dim == 3

    @pytest.mark.parametrize("n_classes,dim", [(2, 5), (3, 4), (6, 10), (4, 2)])
    def test_output_dim_rule(self, n_classes, dim, rng):
        qs = make_cluster_queues(n_classes, dim, 7, rng)
        proj = fld.fit_projection(qs, 0.9, 1e-3)
        assert proj.output_dim == min(n_classes - 1, dim)

    def test_too_few_samples(self):
        qs = [
            queue_of([(1, [1.0, 0.0])], identity=1),
            queue_of([(1, [0.0, 1.0])], identity=2),
        ]
        with pytest.raises(InsufficientSamplesError):
            fld.fit_projection(qs, 0.9, 1e-3)

    def test_columns_sw_orthonormal(self, rng):
        qs = make_cluster_queues(5, 8, 9, rng)
        proj = fld.fit_projection(qs, 0.9, 1e-3)
        cents = fld.compute_centroids(qs, 0.9)
        sw_reg = fld.shrink_within(fld.scatter_within(qs, cents), 1e-3)
        gram = proj.w.T @ sw_reg @ proj.w
        assert np.abs(gram - np.eye(proj.output_dim)).max() <= 1e-6

    def test_fisher_optimality_vs_random(self, rng):
        qs = make_cluster_queues(5, 10, 8, rng)
        proj = fld.fit_projection(qs, 0.9, 1e-3)
        cents = fld.compute_centroids(qs, 0.9)
        sw_reg = fld.shrink_within(fld.scatter_within(qs, cents), 1e-3)
        sb = fld.scatter_between(qs, cents)
        j_fit = fld.fisher_criterion(proj.w, sb, sw_reg)
        beaten = 0
        for _ in range(100):
            r = rng.normal(size=proj.w.shape)
            if j_fit >= fld.fisher_criterion(r, sb, sw_reg) - 1e-9:
                beaten += 1
        assert beaten >= 95


class TestProject:
    def test_identity_projection(self, rng):
        feats = rng.normal(size=(4, 3))
        proj = fld.ProjectionMatrix(np.eye(3), np.ones(3), 1e-3, 4, 12)
        assert np.array_equal(fld.project(feats, proj), feats)

    def test_zero_vector(self):
        proj = fld.ProjectionMatrix(np.eye(2), np.ones(2), 1e-3, 3, 9)
        assert np.array_equal(fld.project(np.zeros((1, 2)), proj), np.zeros((1, 2)))

    def test_matches_matvec_oracle_seed5(self):
        rng = np.random.default_rng(5)
        w = rng.normal(size=(6, 3))
        f = rng.normal(size=(2, 6))
        proj = fld.ProjectionMatrix(w, np.ones(3), 1e-3, 4, 10)
        got = fld.project(f, proj)
        for i in range(2):
            want = np.array([sum(f[i, k] * w[k, j] for k in range(6)) for j in range(3)])
            assert np.abs(got[i] - want).max() <= 1e-12

    def test_dim_mismatch(self):
        proj = fld.ProjectionMatrix(np.eye(3), np.ones(3), 1e-3, 4, 12)
        with pytest.raises(DimensionMismatchError):
            fld.project(np.zeros((2, 4)), proj)


class TestIntegratedSimilarity:
    @pytest.fixture
    def setup(self, rng):
        qs = make_cluster_queues(4, 6, 8, rng)
        proj = fld.fit_projection(qs, 0.9, 1e-3)
        dets = rng.normal(size=(3, 6))
        emas = rng.normal(size=(4, 6))
        return proj, dets, emas

    def test_alpha_zero_is_plain_cosine(self, setup):
        proj, dets, emas = setup
        got = fld.integrated_similarity(dets, emas, proj, 0.0)
        assert np.array_equal(got, linalg.cosine_matrix(dets, emas))

    def test_alpha_one_is_projected_cosine(self, setup):
        proj, dets, emas = setup
        got = fld.integrated_similarity(dets, emas, proj, 1.0)
        want = linalg.cosine_matrix(
            fld.project(dets, proj), fld.project(emas, proj)
        )
        assert np.array_equal(got, want)

    def test_blend_arithmetic(self):
        # cos' = 0.8 and cos = 0.6 at alpha = 0.9 blend to 0.78
        assert 0.9 * 0.8 + (1 - 0.9) * 0.6 == pytest.approx(0.78)
        proj = fld.ProjectionMatrix(
            np.array([[1.0], [0.0]]), np.ones(1), 1e-3, 2, 6
        )
        det = np.array([[0.6, 0.8]])
        ema = np.array([[1.0, 0.0]])
        got = fld.integrated_similarity(det, ema, proj, 0.9)
        assert got[0, 0] == pytest.approx(0.9 * 1.0 + 0.1 * 0.6, abs=1e-12)

    def test_absent_projection_behaves_as_alpha_zero(self, setup):
        _, dets, emas = setup
        got = fld.integrated_similarity(dets, emas, None, 0.9)
        assert np.array_equal(got, linalg.cosine_matrix(dets, emas))

    def test_column_sign_flip_invariance(self, setup):
        proj, dets, emas = setup
        base = fld.integrated_similarity(dets, emas, proj, 0.7)
        for j in range(proj.output_dim):
            flipped = copy.deepcopy(proj)
            flipped.w[:, j] = -flipped.w[:, j]
            assert np.array_equal(
                fld.integrated_similarity(dets, emas, flipped, 0.7), base
            )

    def test_parts_skip_unused_spaces(self, setup):
        proj, dets, emas = setup
        _, orig, projd = fld.similarity_parts(dets, emas, proj, 1.0)
        assert orig is None and projd is not None
        _, orig, projd = fld.similarity_parts(dets, emas, proj, 0.0)
        assert orig is not None and projd is None


class TestPca:
    def test_line_direction(self):
        direction = np.array([3.0, 4.0]) / 5.0
        qs = [
            queue_of(
                [(a + 1, t * direction) for a, t in enumerate([-2.0, -1.0, 1.0, 2.0])]
            )
        ]
        proj = fld.fit_pca_projection(qs, 0.9, 1)
        assert abs(linalg.cosine(proj.w[:, 0], direction)) >= 0.999

    def test_target_dim_capped(self, rng):
        qs = make_cluster_queues(3, 4, 5, rng)
        proj = fld.fit_pca_projection(qs, 0.9, 10)
        assert proj.output_dim == 4

    def test_matches_covariance_eigen_oracle_seed9(self):
        rng = np.random.default_rng(9)
        qs = make_cluster_queues(3, 5, 7, rng)
        proj = fld.fit_pca_projection(qs, 0.9, 3)
        x = np.concatenate([ [f for _, f in q.entries] for q in qs ])
        xc = x - x.mean(axis=0)
        want_vals, want_vecs = np.linalg.eigh(xc.T @ xc)
        want_vals = want_vals[::-1]
        assert np.abs(proj.eigenvalues - want_vals[:3]).max() <= 1e-8 * (
            1 + want_vals[0]
        )
        for j in range(3):
            c = abs(linalg.cosine(proj.w[:, j], want_vecs[:, -(j + 1)]))
            assert c >= 1 - 1e-8

    def test_insufficient_samples(self):
        with pytest.raises(InsufficientSamplesError):
            fld.fit_pca_projection([queue_of([(1, [1.0, 2.0])])], 0.9, 1)
