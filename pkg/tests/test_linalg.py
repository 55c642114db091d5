"""Tests for complex matrix primitives and the seeded random streams."""

import numpy as np
import pytest

from irs_chest.linalg import (
    SeededRng,
    frobenius_norm_sq,
    hermitian,
    matmul,
    sample_cscg,
    solve_hermitian,
)


def random_complex(rng, rows, cols):
    gen = rng.generator
    return gen.standard_normal((rows, cols)) + 1j * gen.standard_normal((rows, cols))


class TestMatmul:
    def test_identity(self):
        a = random_complex(SeededRng(1), 2, 2)
        assert np.allclose(matmul(np.eye(2), a), a)

    def test_forced_cancellation(self):
        # [1, j] @ [1, j]^T = 1 + j^2 = 0
        out = matmul(np.array([[1.0, 1j]]), np.array([[1.0], [1j]]))
        assert np.allclose(out, [[0.0]])

    def test_against_triple_loop(self):
        rng = SeededRng(2)
        a = random_complex(rng, 3, 4)
        b = random_complex(rng, 4, 2)
        expected = np.zeros((3, 2), dtype=complex)
        for i in range(3):
            for j in range(2):
                for k in range(4):
                    expected[i, j] += a[i, k] * b[k, j]
        assert np.allclose(matmul(a, b), expected, atol=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            matmul(np.eye(2), np.eye(3))

    def test_associativity(self):
        rng = SeededRng(3)
        for _ in range(20):
            a = random_complex(rng, 3, 4)
            b = random_complex(rng, 4, 5)
            c = random_complex(rng, 5, 2)
            left = matmul(matmul(a, b), c)
            right = matmul(a, matmul(b, c))
            assert np.linalg.norm(left - right) <= 1e-10 * np.linalg.norm(left)


class TestHermitian:
    def test_real_symmetric_fixed_point(self):
        a = np.array([[1.0, 2.0], [2.0, 3.0]])
        assert np.array_equal(hermitian(a), a)

    def test_scalar_conjugate(self):
        assert hermitian(np.array([[1j]]))[0, 0] == -1j

    def test_involution(self):
        a = random_complex(SeededRng(4), 3, 5)
        assert np.array_equal(hermitian(hermitian(a)), a)

    def test_product_reversal(self):
        rng = SeededRng(5)
        a = random_complex(rng, 3, 4)
        b = random_complex(rng, 4, 2)
        lhs = hermitian(matmul(a, b))
        rhs = matmul(hermitian(b), hermitian(a))
        assert np.allclose(lhs, rhs, atol=1e-12)


class TestSampleCscg:
    def test_zero_variance(self):
        out = sample_cscg(3, 4, 0.0, SeededRng(6))
        assert np.array_equal(out, np.zeros((3, 4)))

    def test_empirical_variance(self):
        out = sample_cscg(1000, 1000, 1.0, SeededRng(7))
        assert abs(np.mean(np.abs(out) ** 2) - 1.0) < 0.01

    def test_part_covariances(self):
        out = sample_cscg(1000, 1000, 1.0, SeededRng(8)).ravel()
        n = out.size
        # 5 sigma of the moment estimators at n samples
        tol_var = 5 * np.sqrt(2.0 / n) * 0.5
        assert abs(np.var(out.real) - 0.5) < tol_var
        assert abs(np.var(out.imag) - 0.5) < tol_var
        assert abs(np.mean(out.real * out.imag)) < 5 * 0.5 / np.sqrt(n)

    def test_determinism(self):
        a = sample_cscg(5, 7, 2.0, SeededRng(9, 3))
        b = sample_cscg(5, 7, 2.0, SeededRng(9, 3))
        assert np.array_equal(a, b)

    def test_negative_variance(self):
        with pytest.raises(ValueError, match="variance"):
            sample_cscg(2, 2, -1.0, SeededRng(10))


class TestFrobenius:
    def test_zero(self):
        assert frobenius_norm_sq(np.zeros((3, 2))) == 0.0

    def test_known_value(self):
        assert frobenius_norm_sq(np.array([[3.0, 4j]])) == pytest.approx(25.0)

    def test_against_loop(self):
        a = random_complex(SeededRng(11), 4, 6)
        expected = sum(abs(a[i, j]) ** 2 for i in range(4) for j in range(6))
        assert frobenius_norm_sq(a) == pytest.approx(expected, rel=1e-12)


class TestSolveHermitian:
    def test_identity_lhs_is_exact(self):
        b = random_complex(SeededRng(12), 4, 3)
        assert np.array_equal(solve_hermitian(np.eye(4), b), b)

    def test_scaled_identity(self):
        out = solve_hermitian(2.0 * np.eye(3), np.eye(3))
        assert np.allclose(out, 0.5 * np.eye(3), atol=1e-14)

    def test_random_pd_residual(self):
        rng = SeededRng(13)
        for _ in range(10):
            m = random_complex(rng, 5, 5)
            a = hermitian(m) @ m + np.eye(5)
            b = random_complex(rng, 5, 2)
            x = solve_hermitian(a, b)
            assert np.linalg.norm(a @ x - b) <= 1e-10 * np.linalg.norm(b)

    def test_non_pd_names_pivot(self):
        a = -np.eye(3)
        with pytest.raises(np.linalg.LinAlgError, match="minor"):
            solve_hermitian(a, np.eye(3))

    def test_shape_errors(self):
        with pytest.raises(ValueError, match="square"):
            solve_hermitian(np.ones((2, 3)), np.ones((3, 1)))
        with pytest.raises(ValueError, match="shape mismatch"):
            solve_hermitian(np.eye(3), np.ones((2, 1)))


class TestSeededRng:
    def test_same_key_same_stream(self):
        a = SeededRng(100, 5).generator.standard_normal(16)
        b = SeededRng(100, 5).generator.standard_normal(16)
        assert np.array_equal(a, b)

    def test_distinct_streams_differ(self):
        a = SeededRng(100, 5).generator.standard_normal(16)
        b = SeededRng(100, 6).generator.standard_normal(16)
        assert not np.array_equal(a, b)

    def test_substream_path_determinism(self):
        root = SeededRng(42)
        a = root.substream(1, 2, 3)
        b = SeededRng(42).substream(1, 2, 3)
        assert (a.master_seed, a.stream_id) == (b.master_seed, b.stream_id)

    def test_substream_paths_distinct(self):
        root = SeededRng(42)
        ids = {root.substream(i, j).stream_id for i in range(8) for j in range(8)}
        assert len(ids) == 64
