import numpy as np
import pytest

from ifsim import linalg


class TestCholesky:
    def test_identity(self):
        low = linalg.cholesky(np.eye(2))
        assert np.allclose(low, np.eye(2))

    def test_hand_factor(self):
        a = np.array([[4.0, 2.0], [2.0, 3.0]])
        low = linalg.cholesky(a)
        expected = np.array([[2.0, 0.0], [1.0, np.sqrt(2.0)]])
        assert np.allclose(low, expected, atol=1e-12)

    def test_indefinite_rejected(self):
        with pytest.raises(linalg.NotPositiveDefinite):
            linalg.cholesky(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_asymmetric_rejected(self):
        with pytest.raises(ValueError):
            linalg.cholesky(np.array([[1.0, 0.5], [0.2, 1.0]]))

    def test_reconstruction_property(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            n = int(rng.integers(1, 9))
            g = rng.normal(size=(n, n))
            a = g.T @ g + 1e-6 * np.eye(n)
            low = linalg.cholesky(a)
            err = np.abs(low @ low.T - a).max() / np.abs(a).max()
            assert err < 1e-9
            assert np.allclose(np.triu(low, 1), 0.0)


class TestSolveSpd:
    def test_identity(self):
        b = np.array([[1.0, 2.0], [3.0, 4.0]])
        assert np.allclose(linalg.solve_spd(np.eye(2), b), b)

    def test_scaled_identity(self):
        assert np.allclose(linalg.solve_spd(2.0 * np.eye(2), np.eye(2)), 0.5 * np.eye(2))

    def test_residual_on_random_spd(self):
        rng = np.random.default_rng(11)
        g = rng.normal(size=(4, 4))
        a = g.T @ g + 0.1 * np.eye(4)
        b = rng.normal(size=(4, 3))
        x = linalg.solve_spd(a, b)
        assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) < 1e-8

    def test_vector_rhs(self):
        rng = np.random.default_rng(12)
        g = rng.normal(size=(3, 3))
        a = g.T @ g + np.eye(3)
        b = rng.normal(size=3)
        x = linalg.solve_spd(a, b)
        assert x.shape == (3,)
        assert np.allclose(a @ x, b)


class TestEigSym:
    def test_diagonal(self):
        vals, vecs = linalg.eig_sym(np.diag([1.0, 2.0]))
        assert np.allclose(vals, [1.0, 2.0])
        assert np.allclose(np.abs(vecs), np.eye(2))

    def test_exchange_matrix(self):
        vals, _ = linalg.eig_sym(np.array([[0.0, 1.0], [1.0, 0.0]]))
        assert np.allclose(vals, [-1.0, 1.0])

    def test_residual_random(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = rng.normal(size=(5, 5))
            a = 0.5 * (a + a.T)
            vals, vecs = linalg.eig_sym(a)
            assert np.abs(a @ vecs - vecs @ np.diag(vals)).max() < 1e-7
            assert np.abs(vecs.T @ vecs - np.eye(5)).max() < 1e-8
            assert np.all(np.diff(vals) >= 0)

    def test_matches_numpy(self):
        rng = np.random.default_rng(6)
        a = rng.normal(size=(6, 6))
        a = a + a.T
        vals, _ = linalg.eig_sym(a)
        assert np.allclose(vals, np.linalg.eigvalsh(a), atol=1e-9)


class TestMaxSingularValue:
    def test_identity(self):
        assert linalg.max_singular_value(np.eye(3)) == pytest.approx(1.0)

    def test_diagonal(self):
        assert linalg.max_singular_value(np.diag([3.0, 1.0])) == pytest.approx(3.0)

    def test_nilpotent(self):
        a = np.array([[0.0, 2.0], [0.0, 0.0]])
        assert linalg.max_singular_value(a) == pytest.approx(2.0)

    def test_consistent_with_eig(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            a = rng.normal(size=(int(rng.integers(1, 5)), int(rng.integers(1, 7))))
            vals, _ = linalg.eig_sym(a.T @ a)
            assert linalg.max_singular_value(a) == pytest.approx(
                np.sqrt(max(vals[-1], 0.0)), rel=1e-7)


class TestIntegerRank:
    def test_basis(self):
        assert linalg.integer_rank([(1, 0), (0, 1)]) == 2

    def test_collinear(self):
        assert linalg.integer_rank([(1, 2), (2, 4)]) == 1

    def test_dependent_triple(self):
        assert linalg.integer_rank([(2, 3, 5), (1, 1, 1), (3, 4, 6)]) == 2

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            linalg.integer_rank([(1, 0), (0, 1, 2)])

    def test_invariance_under_row_ops(self):
        rng = np.random.default_rng(9)
        for _ in range(100):
            rows = rng.integers(-5, 6, size=(int(rng.integers(1, 5)), int(rng.integers(1, 5))))
            base = linalg.integer_rank(rows)
            shuffled = rows[rng.permutation(rows.shape[0])]
            assert linalg.integer_rank(shuffled) == base
            if rows.shape[0] >= 2:
                added = rows.copy()
                added[0] = added[0] + int(rng.integers(-3, 4)) * added[-1]
                assert linalg.integer_rank(added) == base

    def test_near_parallel_exact(self):
        # Floating rank would need a tolerance; exact arithmetic does not.
        big = 10 ** 12
        assert linalg.integer_rank([(big, big - 1), (big - 1, big - 2)]) == 2
