"""Shared numerical kernels: sinc, unitary DFT, Hermitian solves, seeded streams."""

import hashlib

import numpy as np
import scipy.linalg


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    """Raised when a covariance that must be HPD fails Cholesky factorization."""


def sinc(x):
    """Normalized sinc, ``sin(pi x) / (pi x)`` with ``sinc(0) = 1``."""
    return np.sinc(x)


def dft(x, n=None):
    """Unitary DFT along the last axis, ``X[n] = N**-0.5 * sum_m x[m] exp(-2j pi n m / N)``.

    Parameters
    ----------
    x : array_like
        Complex samples; the transform runs over the last axis.
    n : int, optional
        Expected length. A mismatch with ``x.shape[-1]`` raises ``ValueError``.
    """
    x = np.asarray(x)
    if n is not None and x.shape[-1] != n:
        raise ValueError(f"dft length mismatch: got {x.shape[-1]}, expected {n}")
    if x.shape[-1] < 1:
        raise ValueError("dft needs at least one sample")
    return np.fft.fft(x, axis=-1, norm="ortho")


def idft(x, n=None):
    """Inverse of :func:`dft`."""
    x = np.asarray(x)
    if n is not None and x.shape[-1] != n:
        raise ValueError(f"idft length mismatch: got {x.shape[-1]}, expected {n}")
    if x.shape[-1] < 1:
        raise ValueError("idft needs at least one sample")
    return np.fft.ifft(x, axis=-1, norm="ortho")


def dft_matrix(n):
    """Unitary DFT matrix ``F`` whose column ``f_k`` has entries ``exp(-2j pi k m / n) / sqrt(n)``."""
    m = np.arange(n)
    return np.exp(-2j * np.pi * np.outer(m, m) / n) / np.sqrt(n)


def hpd_solve(a, b, herm_tol=1e-10):
    """Solve ``a @ x = b`` for Hermitian positive-definite ``a`` via Cholesky.

    Parameters
    ----------
    a : (n, n) array_like
    b : (n,) or (n, r) array_like
    herm_tol : float
        Relative tolerance on ``||a - a^H|| / ||a||``.

    Raises
    ------
    ValueError
        Shapes disagree or ``a`` is not Hermitian within tolerance.
    NotPositiveDefiniteError
        Cholesky factorization fails.
    """
    a = np.asarray(a)
    b = np.asarray(b)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if b.shape[0] != a.shape[0]:
        raise ValueError(f"dimension mismatch: a is {a.shape}, b is {b.shape}")
    scale = np.linalg.norm(a)
    if scale == 0.0:
        raise NotPositiveDefiniteError("zero matrix")
    if np.linalg.norm(a - a.conj().T) > herm_tol * scale:
        raise ValueError("matrix is not Hermitian within tolerance")
    try:
        factor = scipy.linalg.cho_factor(a, lower=True, check_finite=False)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(str(exc)) from exc
    return scipy.linalg.cho_solve(factor, b, check_finite=False)


def solve_diag_plus_lowrank(noise, cols, power, b):
    """Solve ``(diag(noise) + power * cols @ cols^H) x = b``.

    Picks a dense Cholesky solve when ``cols`` is at least as wide as it is
    tall, otherwise the Woodbury identity with an ``r x r`` HPD core. Both
    routes factor matrices that are Hermitian positive definite whenever
    ``noise > 0``.
    """
    noise = np.asarray(noise, dtype=float)
    cols = np.asarray(cols)
    b = np.asarray(b)
    if np.any(noise <= 0):
        raise NotPositiveDefiniteError("noise floor must be strictly positive")
    q, r = cols.shape
    if r == 0:
        return b / (noise if b.ndim == 1 else noise[:, None])
    if r >= q:
        c = power * (cols @ cols.conj().T)
        c[np.diag_indices(q)] += noise
        c = 0.5 * (c + c.conj().T)
        return hpd_solve(c, b)
    inv_noise = 1.0 / noise
    dib = b * (inv_noise if b.ndim == 1 else inv_noise[:, None])
    dic = cols * inv_noise[:, None]
    core = cols.conj().T @ dic
    core[np.diag_indices(r)] += 1.0 / power
    core = 0.5 * (core + core.conj().T)
    y = hpd_solve(core, cols.conj().T @ dib)
    return dib - dic @ y


def random_stream(seed, label):
    """Return a ``numpy.random.Generator`` keyed by ``(seed, label)``.

    The label is hashed into the seed sequence, so distinct labels give
    independent streams and identical pairs reproduce bit-for-bit.
    """
    digest = hashlib.sha256(label.encode("utf-8")).digest()
    words = np.frombuffer(digest, dtype=np.uint32).tolist()
    seed = int(seed)
    if seed < 0:
        raise ValueError("seed must be non-negative")
    entropy = [seed & 0xFFFFFFFF, (seed >> 32) & 0xFFFFFFFF, *words]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))
