"""Complex dense-matrix arithmetic and reproducible random sampling.

All computation is double precision (complex128 / float64). Matrices are
plain 2-D numpy arrays; functions here validate shapes and keep the
numerics honest so the layers above do not have to.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    """One splitmix64 scrambling step (public-domain constants)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK64
    return x ^ (x >> 31)


class SeededRng:
    """Reproducible random stream keyed by (master_seed, stream_id).

    Backed by numpy's Philox counter-based bit generator with the 128-bit
    key ``(master_seed, stream_id)``. Equal keys give bitwise-equal sample
    sequences; distinct stream ids give statistically independent streams.
    Substreams are derived by splitmix64-mixing path indices into the
    stream id, so a Monte Carlo trial addressed by (point, trial) always
    sees the same draws no matter the thread that runs it.

    The generator algorithm is pinned deliberately: golden-value tests and
    the byte-identical-artifact guarantees depend on it. Do not swap the
    bit generator without regenerating every frozen expectation.
    """

    def __init__(self, master_seed: int, stream_id: int = 0):
        self.master_seed = master_seed & _MASK64
        self.stream_id = stream_id & _MASK64
        key = np.array([self.master_seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def substream(self, *path: int) -> "SeededRng":
        """Derive an independent stream for the given index path."""
        h = self.stream_id
        for part in path:
            h = _splitmix64(h ^ (int(part) & _MASK64))
        return SeededRng(self.master_seed, h)

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"SeededRng(master_seed={self.master_seed}, stream_id={self.stream_id})"


def _as_matrix(a, name: str) -> np.ndarray:
    a = np.asarray(a)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {a.shape}")
    return a


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Complex matrix product a @ b with explicit shape checking."""
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch for matmul: {a.shape} x {b.shape}")
    return a @ b


def hermitian(a: np.ndarray) -> np.ndarray:
    """Conjugate transpose."""
    return _as_matrix(a, "a").conj().T


def frobenius_norm_sq(a: np.ndarray) -> float:
    """Sum of squared entry magnitudes."""
    a = np.asarray(a)
    return float(np.sum(np.abs(a) ** 2))


def sample_cscg(rows: int, cols: int, variance: float, rng: SeededRng) -> np.ndarray:
    """I.i.d. zero-mean circularly symmetric complex Gaussian entries.

    Each entry has total variance ``variance``: real and imaginary parts
    are independent N(0, variance/2). The underlying stream is always
    advanced by rows*cols*2 normal draws, even for variance 0, so stream
    layouts do not depend on parameter values.
    """
    if variance < 0:
        raise ValueError(f"variance must be >= 0, got {variance}")
    gen = rng.generator
    scale = np.sqrt(variance / 2.0)
    re = gen.standard_normal((rows, cols))
    im = gen.standard_normal((rows, cols))
    return scale * (re + 1j * im)


def solve_hermitian(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Solve a @ X = b for Hermitian positive-definite a via Cholesky.

    Never forms an explicit inverse. Raises a numerical error naming the
    failing pivot when a is not positive definite within tolerance.
    """
    a = _as_matrix(a, "a")
    b = _as_matrix(b, "b")
    if a.shape[0] != a.shape[1]:
        raise ValueError(f"a must be square, got shape {a.shape}")
    if a.shape[0] != b.shape[0]:
        raise ValueError(f"shape mismatch for solve: {a.shape} vs {b.shape}")
    try:
        factor = scipy.linalg.cho_factor(a, lower=False, check_finite=False)
    except scipy.linalg.LinAlgError as exc:
        # scipy's message names the failing leading minor (the pivot)
        raise np.linalg.LinAlgError(f"hermitian solve failed: {exc}") from None
    return scipy.linalg.cho_solve(factor, b, check_finite=False)
