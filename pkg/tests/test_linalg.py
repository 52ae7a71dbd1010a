import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from covelm.errors import InvalidInput
from covelm.linalg import least_squares_solve, pinv


def penrose_residuals(M, P):
    return (
        np.max(np.abs(M @ P @ M - M)),
        np.max(np.abs(P @ M @ P - P)),
        np.max(np.abs((M @ P).T - M @ P)),
        np.max(np.abs((P @ M).T - P @ M)),
    )


def random_matrix(rng, rows, cols, rank=None):
    if rank is None:
        return rng.normal(size=(rows, cols))
    return rng.normal(size=(rows, rank)) @ rng.normal(size=(rank, cols))


class TestPinv:
    def test_identity(self):
        np.testing.assert_allclose(pinv(np.eye(3)), np.eye(3), atol=1e-15)

    def test_singular_diagonal(self):
        np.testing.assert_array_equal(pinv([[1.0, 0.0], [0.0, 0.0]]), [[1.0, 0.0], [0.0, 0.0]])

    def test_zero_matrix(self):
        np.testing.assert_array_equal(pinv(np.zeros((3, 2))), np.zeros((2, 3)))

    @pytest.mark.parametrize("shape", [(50, 30), (30, 50), (20, 20)])
    def test_penrose_full_rank(self, rng, shape):
        M = random_matrix(rng, *shape)
        assert max(penrose_residuals(M, pinv(M))) <= 1e-8

    def test_penrose_rank_deficient(self, rng):
        M = random_matrix(rng, 40, 25, rank=7)
        assert max(penrose_residuals(M, pinv(M))) <= 1e-8

    def test_matches_normal_equations_when_full_column_rank(self, rng):
        M = random_matrix(rng, 30, 6)
        np.testing.assert_allclose(pinv(M), np.linalg.inv(M.T @ M) @ M.T, atol=1e-10)

    def test_double_pinv(self, rng):
        M = random_matrix(rng, 12, 8)
        np.testing.assert_allclose(pinv(pinv(M)), M, atol=1e-8)

    def test_rejects_empty_and_nonfinite(self):
        with pytest.raises(InvalidInput):
            pinv(np.zeros((0, 3)))
        with pytest.raises(InvalidInput):
            pinv([[np.nan]])

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 15), st.integers(1, 15), st.integers(0, 2**32 - 1))
    def test_penrose_property(self, rows, cols, seed):
        rng = np.random.default_rng(seed)
        rank = int(rng.integers(1, min(rows, cols) + 1))
        M = random_matrix(rng, rows, cols, rank)
        assert max(penrose_residuals(M, pinv(M))) <= 1e-8


class TestLeastSquares:
    def test_square_exact(self, rng):
        G = rng.normal(size=(6, 6)) + 6 * np.eye(6)
        T = rng.normal(size=(6, 3))
        beta = least_squares_solve(G, T)
        assert np.max(np.abs(G @ beta - T)) <= 1e-10
        np.testing.assert_allclose(beta, np.linalg.solve(G, T), atol=1e-10)

    def test_orthonormal_columns(self, rng):
        Q, _ = np.linalg.qr(rng.normal(size=(20, 5)))
        T = rng.normal(size=(20, 2))
        np.testing.assert_allclose(least_squares_solve(Q, T), Q.T @ T, atol=1e-12)

    def test_residual_orthogonal(self, rng):
        G = rng.normal(size=(40, 10))
        T = rng.normal(size=(40, 3))
        beta = least_squares_solve(G, T)
        assert np.max(np.abs(G.T @ (G @ beta - T))) <= 1e-8

    def test_minimiser(self, rng):
        G = random_matrix(rng, 30, 12, rank=9)
        T = rng.normal(size=(30, 3))
        beta = least_squares_solve(G, T)
        base = np.linalg.norm(G @ beta - T)
        for _ in range(100):
            delta = rng.normal(size=beta.shape) * rng.choice([1e-6, 1e-3, 1.0])
            assert np.linalg.norm(G @ (beta + delta) - T) >= base - 1e-12

    def test_minimum_norm(self, rng):
        # underdetermined: the solution must lie in the row space of G
        G = rng.normal(size=(5, 12))
        T = rng.normal(size=(5, 1))
        beta = least_squares_solve(G, T)
        _, _, Vt = np.linalg.svd(G)
        null = Vt[5:]
        assert np.max(np.abs(null @ beta)) <= 1e-10

    def test_dimension_mismatch(self):
        with pytest.raises(InvalidInput):
            least_squares_solve(np.ones((4, 2)), np.ones((3, 1)))
