import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fldmot import linalg
from fldmot.errors import (
    DimensionMismatchError,
    NotPositiveDefiniteError,
    ZeroVectorError,
)

finite_floats = st.floats(
    min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False
)


class TestCosine:
    def test_orthogonal(self):
        assert linalg.cosine([1, 0], [0, 1]) == 0.0

    def test_parallel(self):
        assert linalg.cosine([1, 2], [2, 4]) == pytest.approx(1.0, abs=1e-15)

    def test_antiparallel(self):
        assert linalg.cosine([1, 0], [-1, 0]) == -1.0

    def test_zero_vector(self):
        with pytest.raises(ZeroVectorError):
            linalg.cosine([0, 0], [1, 0])

    def test_dim_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            linalg.cosine([1, 0], [1, 0, 0])

    def test_clamped(self, rng):
        for _ in range(50):
            u = rng.normal(size=4)
            assert -1.0 <= linalg.cosine(u, 3.7 * u) <= 1.0

    @given(
        st.lists(finite_floats, min_size=1, max_size=8),
        st.data(),
    )
    @settings(max_examples=100)
    def test_symmetry_exact(self, u, data):
        v = data.draw(st.lists(finite_floats, min_size=len(u), max_size=len(u)))
        if np.linalg.norm(u) == 0.0 or np.linalg.norm(v) == 0.0:
            return
        assert linalg.cosine(u, v) == linalg.cosine(v, u)


class TestCholesky:
    def test_identity(self):
        assert np.array_equal(linalg.cholesky_spd(np.eye(3)), np.eye(3))

    def test_hand_worked(self):
        lo = linalg.cholesky_spd([[4.0, 2.0], [2.0, 3.0]])
        assert np.allclose(lo, [[2.0, 0.0], [1.0, math.sqrt(2.0)]])

    def test_indefinite_reports_pivot(self):
        with pytest.raises(NotPositiveDefiniteError) as err:
            linalg.cholesky_spd([[1.0, 2.0], [2.0, 1.0]])
        assert err.value.pivot == 1

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            linalg.cholesky_spd([[1.0, 0.5], [0.0, 1.0]])

    def test_reconstruction_100_random_spd(self):
        rng = np.random.default_rng(17)
        for _ in range(100):
            n = int(rng.integers(1, 12))
            g = rng.normal(size=(n, n))
            m = g.T @ g + np.eye(n)
            m = (m + m.T) / 2
            lo = linalg.cholesky_spd(m)
            assert np.tril(lo, -1).sum() == np.tril(lo, -1).sum()  # finite
            assert np.triu(lo, 1).max(initial=0.0) == 0.0
            err = np.abs(lo @ lo.T - m).max()
            assert err <= 1e-8 * (1 + np.abs(m).max())


class TestSymEig:
    def test_diagonal(self):
        r = linalg.sym_eig(np.diag([3.0, 1.0]))
        assert np.array_equal(r.eigenvalues, [3.0, 1.0])
        assert np.array_equal(r.eigenvectors, np.eye(2))

    def test_exchange_matrix(self):
        r = linalg.sym_eig([[0.0, 1.0], [1.0, 0.0]])
        assert np.allclose(r.eigenvalues, [1.0, -1.0])

    def test_reconstruction_seed42(self):
        rng = np.random.default_rng(42)
        g = rng.normal(size=(8, 8))
        m = (g + g.T) / 2
        r = linalg.sym_eig(m)
        rec = r.eigenvectors @ np.diag(r.eigenvalues) @ r.eigenvectors.T
        assert np.abs(rec - m).max() <= 1e-7

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 13, 40])
    def test_residual_orthonormality_order(self, n):
        rng = np.random.default_rng(n)
        g = rng.normal(size=(n, n))
        m = (g + g.T) / 2
        r = linalg.sym_eig(m)
        fro = np.linalg.norm(m)
        for i in range(n):
            v = r.eigenvectors[:, i]
            resid = np.linalg.norm(m @ v - r.eigenvalues[i] * v)
            assert resid <= 1e-7 * (1 + fro)
        assert np.abs(r.eigenvectors.T @ r.eigenvectors - np.eye(n)).max() <= 1e-7
        assert (np.diff(r.eigenvalues) <= 1e-12).all()

    def test_trace_preserved(self, rng):
        for _ in range(20):
            n = int(rng.integers(1, 20))
            g = rng.normal(size=(n, n))
            m = (g + g.T) / 2
            r = linalg.sym_eig(m)
            tr = np.trace(m)
            assert abs(r.eigenvalues.sum() - tr) <= 1e-6 * (1 + abs(tr))

    def test_rank_deficient(self, rng):
        g = rng.normal(size=(30, 4))
        m = g @ g.T
        r = linalg.sym_eig(m)
        rec = r.eigenvectors @ np.diag(r.eigenvalues) @ r.eigenvectors.T
        assert np.abs(rec - m).max() <= 1e-7 * (1 + np.linalg.norm(m))
        assert (np.abs(r.eigenvalues[4:]) <= 1e-8 * np.trace(m)).all()

    def test_sign_convention(self, rng):
        for _ in range(10):
            g = rng.normal(size=(6, 6))
            r = linalg.sym_eig((g + g.T) / 2)
            for j in range(6):
                col = r.eigenvectors[:, j]
                lead = col[np.nonzero(col)[0][0]]
                assert lead >= 0.0


class TestGeneralizedEig:
    def test_identity_b_reduces_to_sym(self):
        r = linalg.generalized_eig(np.diag([2.0, 1.0]), np.eye(2))
        assert np.allclose(r.eigenvalues, [2.0, 1.0])

    def test_diagonal_ratio(self):
        r = linalg.generalized_eig(np.diag([4.0, 1.0]), np.diag([2.0, 1.0]))
        assert np.allclose(r.eigenvalues, [2.0, 1.0])

    def test_residual_seed7(self):
        rng = np.random.default_rng(7)
        g = rng.normal(size=(16, 16))
        a = (g + g.T) / 2
        h = rng.normal(size=(16, 16))
        b = h @ h.T + 16 * np.eye(16)
        r = linalg.generalized_eig(a, b)
        fro = np.linalg.norm(a)
        for i in range(16):
            w = r.eigenvectors[:, i]
            resid = np.linalg.norm(a @ w - r.eigenvalues[i] * (b @ w))
            assert resid <= 1e-6 * (1 + fro)

    def test_b_orthonormal(self, rng):
        g = rng.normal(size=(10, 10))
        a = (g + g.T) / 2
        h = rng.normal(size=(10, 10))
        b = h @ h.T + 10 * np.eye(10)
        r = linalg.generalized_eig(a, b)
        gram = r.eigenvectors.T @ b @ r.eigenvectors
        assert np.abs(gram - np.eye(10)).max() <= 1e-6

    def test_agrees_with_sym_eig_for_identity_b(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 15))
            g = rng.normal(size=(n, n))
            a = (g + g.T) / 2
            r1 = linalg.generalized_eig(a, np.eye(n))
            r2 = linalg.sym_eig(a)
            assert np.abs(r1.eigenvalues - r2.eigenvalues).max() <= 1e-8

    def test_congruence_invariance(self, rng):
        for _ in range(10):
            n = int(rng.integers(2, 10))
            g = rng.normal(size=(n, n))
            a = (g + g.T) / 2
            h = rng.normal(size=(n, n))
            b = h @ h.T + n * np.eye(n)
            c = rng.normal(size=(n, n)) + n * np.eye(n)
            r1 = linalg.generalized_eig(a, b)
            a2 = c.T @ a @ c
            b2 = c.T @ b @ c
            r2 = linalg.generalized_eig((a2 + a2.T) / 2, (b2 + b2.T) / 2)
            scale = 1 + np.abs(r1.eigenvalues).max()
            assert np.abs(r1.eigenvalues - r2.eigenvalues).max() <= 1e-6 * scale

    def test_not_positive_definite_b(self):
        with pytest.raises(NotPositiveDefiniteError):
            linalg.generalized_eig(np.eye(2), [[1.0, 2.0], [2.0, 1.0]])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            linalg.generalized_eig(np.eye(2), np.eye(3))
