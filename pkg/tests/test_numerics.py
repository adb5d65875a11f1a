import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from lenscran.numerics import (NotPositiveDefiniteError, dft, dft_matrix, hpd_solve, idft,
                               random_stream, sinc, solve_diag_plus_lowrank)


def gauss_jordan_inverse(a):
    """Plain elimination with partial pivoting, independent of LAPACK."""
    n = len(a)
    aug = [[complex(a[i][j]) for j in range(n)] + [1.0 + 0j if i == j else 0j for j in range(n)]
           for i in range(n)]
    for col in range(n):
        piv = max(range(col, n), key=lambda r: abs(aug[r][col]))
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [v / p for v in aug[col]]
        for r in range(n):
            if r != col:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    return np.array([row[n:] for row in aug])


def random_hpd(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return g.conj().T @ g + np.eye(n)


class TestSinc:
    def test_at_zero(self):
        assert sinc(0.0) == 1.0

    def test_integer_zero(self):
        assert abs(sinc(1.0)) < 1e-16

    def test_half(self):
        assert sinc(0.5) == pytest.approx(2 / np.pi, rel=1e-12)


class TestDft:
    def test_all_ones(self):
        np.testing.assert_allclose(dft(np.ones(4)), [2, 0, 0, 0], atol=1e-15)

    def test_delta(self):
        np.testing.assert_allclose(dft(np.array([1.0, 0, 0, 0])), [0.5] * 4, atol=1e-15)

    def test_round_trip(self):
        x = np.random.default_rng(1).standard_normal(8) + 1j
        assert np.linalg.norm(idft(dft(x)) - x) / np.linalg.norm(x) < 1e-12

    def test_matches_matrix_convention(self):
        x = np.random.default_rng(2).standard_normal(6) + 0.5j
        f = dft_matrix(6)
        # f_n[m] = exp(-2j pi n m / N) / sqrt(N); X[n] = f_n^T x
        np.testing.assert_allclose(dft(x), f.T @ x, atol=1e-12)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            dft(np.ones(4), n=8)
        with pytest.raises(ValueError):
            idft(np.ones(3), n=4)

    @settings(max_examples=60, deadline=None)
    @given(st.integers(1, 1024), st.integers(0, 2**32 - 1))
    def test_unitary(self, n, seed):
        rng = np.random.default_rng(seed)
        x = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        assert np.linalg.norm(dft(x)) == pytest.approx(np.linalg.norm(x), rel=1e-12)


class TestHpdSolve:
    def test_identity(self):
        b = np.array([1 + 2j, -3, 0.5j])
        np.testing.assert_allclose(hpd_solve(np.eye(3), b), b)

    def test_diag(self):
        np.testing.assert_allclose(hpd_solve(np.diag([2.0, 4.0]), np.array([2.0, 4.0])), [1, 1])

    def test_against_elimination_inverse(self):
        rng = np.random.default_rng(3)
        a = random_hpd(rng, 8)
        b = rng.standard_normal(8) + 1j * rng.standard_normal(8)
        ref = gauss_jordan_inverse(a.tolist()) @ b
        x = hpd_solve(a, b)
        assert np.linalg.norm(x - ref) / np.linalg.norm(ref) < 1e-10

    def test_residual_many(self):
        rng = np.random.default_rng(4)
        for _ in range(1000):
            n = int(rng.integers(1, 9))
            a = random_hpd(rng, n)
            b = rng.standard_normal(n) + 1j * rng.standard_normal(n)
            x = hpd_solve(a, b)
            assert np.linalg.norm(a @ x - b) / np.linalg.norm(b) < 1e-8

    def test_not_positive_definite(self):
        with pytest.raises(NotPositiveDefiniteError):
            hpd_solve(np.diag([1.0, -1.0]), np.ones(2))

    def test_not_hermitian(self):
        with pytest.raises(ValueError):
            hpd_solve(np.array([[2.0, 1.0], [0.0, 2.0]]), np.ones(2))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            hpd_solve(np.eye(3), np.ones(2))


class TestDiagPlusLowrank:
    @pytest.mark.parametrize("q,r", [(10, 3), (4, 7), (5, 5), (6, 0)])
    def test_matches_dense(self, q, r):
        rng = np.random.default_rng(q * 10 + r)
        noise = rng.uniform(0.5, 2.0, q)
        cols = rng.standard_normal((q, r)) + 1j * rng.standard_normal((q, r))
        b = rng.standard_normal(q) + 1j * rng.standard_normal(q)
        dense = np.diag(noise) + 3.0 * cols @ cols.conj().T
        np.testing.assert_allclose(solve_diag_plus_lowrank(noise, cols, 3.0, b),
                                   np.linalg.solve(dense, b), rtol=1e-9, atol=1e-12)

    def test_rejects_zero_noise(self):
        with pytest.raises(NotPositiveDefiniteError):
            solve_diag_plus_lowrank(np.array([1.0, 0.0]), np.ones((2, 1)), 1.0, np.ones(2))


class TestRandomStream:
    def test_reproducible(self):
        a = random_stream(7, "drop-3/channel").standard_normal(16)
        b = random_stream(7, "drop-3/channel").standard_normal(16)
        assert np.array_equal(a, b)

    def test_labels_differ(self):
        a = random_stream(7, "drop-3/channel").standard_normal(4096)
        b = random_stream(7, "drop-4/channel").standard_normal(4096)
        assert not np.array_equal(a, b)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.06

    def test_seed_differs(self):
        assert random_stream(1, "x").integers(1 << 62) != random_stream(2, "x").integers(1 << 62)

    def test_negative_seed(self):
        with pytest.raises(ValueError):
            random_stream(-1, "x")
