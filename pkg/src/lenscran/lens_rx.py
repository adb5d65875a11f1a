"""Receive chain at the central unit for RRHs with lens antenna arrays.

Streams are the forwarded (selected) antennas of all RRHs. Channels are
handled as tap tensors ``taps[i, k, d]`` (stream, user, delay). After
delay compensation with reference delays ``ref[i, k]`` a user ``k`` sees
the tensor ``hbar[i, k, k', nu]`` where ``nu`` runs over
``-d_max .. d_max`` and is stored at index ``nu + d_max``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .numerics import solve_diag_plus_lowrank


def zadoff_chu(length, root=1):
    """Zadoff-Chu sequence of ``length`` with ``root`` coprime to ``length``."""
    if length < 1:
        raise ValueError("length must be positive")
    if math.gcd(root, length) != 1:
        raise ValueError(f"root {root} is not coprime with {length}")
    n = np.arange(length)
    if length % 2 == 0:
        return np.exp(-1j * np.pi * root * n * n / length)
    return np.exp(-1j * np.pi * root * n * (n + 1) / length)


@dataclass(frozen=True, eq=False)
class PilotBlock:
    """Cyclically shifted Zadoff-Chu training block.

    ``symbols[k]`` is the unit-modulus sequence of user ``k``; the block is
    sent with a cyclic prefix of ``d_max`` symbols and power ``power``.
    """

    symbols: np.ndarray
    power: float
    d_max: int

    @property
    def n_users(self):
        return self.symbols.shape[0]

    @property
    def length(self):
        return self.symbols.shape[1]

    @property
    def n_taps(self):
        return self.d_max + 1

    def waveform(self):
        """Transmitted samples ``(K, d_max + T_p)`` including the cyclic prefix."""
        x = math.sqrt(self.power) * self.symbols
        if self.d_max == 0:
            return x
        return np.concatenate([x[:, -self.d_max:], x], axis=1)

    def matrix(self):
        """Circulant pilot matrix ``X[n, k D + d] = sqrt(P) s_k[(n - d) mod T_p]``."""
        n = np.arange(self.length)[:, None]
        d = np.arange(self.n_taps)[None, :]
        cols = self.symbols[:, (n - d) % self.length]           # (K, T_p, D)
        return math.sqrt(self.power) * cols.transpose(1, 0, 2).reshape(self.length, -1)


def make_pilots(n_users, d_max, length=None, power=1.0, root=1):
    """Pilot block where user ``k`` sends the root sequence shifted by ``k (d_max + 1)``.

    ``length`` defaults to ``K (d_max + 1)``.

    Raises
    ------
    ValueError
        ``length < K (d_max + 1)``, so shifted copies would overlap.
    """
    need = n_users * (d_max + 1)
    length = need if length is None else int(length)
    if length < need:
        raise ValueError(f"pilot length {length} below K (d_max + 1) = {need}")
    base = zadoff_chu(length, root)
    symbols = np.stack([np.roll(base, k * (d_max + 1)) for k in range(n_users)])
    return PilotBlock(symbols, float(power), int(d_max))


def transmit_pilots(pilots, taps):
    """Noiseless pilot observation ``(I, T_p)`` after CP removal.

    The CP-extended block is linearly convolved with the taps and the
    first ``d_max`` outputs are dropped.
    """
    x = pilots.waveform()
    taps = np.asarray(taps)
    n_streams, n_users, n_taps = taps.shape
    if n_taps != pilots.n_taps or n_users != pilots.n_users:
        raise ValueError("tap tensor does not match the pilot block")
    out = np.zeros((n_streams, x.shape[1]), dtype=complex)
    for d in range(n_taps):
        out[:, d:] += taps[:, :, d] @ x[:, :x.shape[1] - d]
    return out[:, pilots.d_max:]


def ls_estimate(y, pilots):
    """Correlator LS estimate ``X^H y / (P T_p)`` reshaped to ``(I, K, d_max + 1)``."""
    y = np.asarray(y)
    if y.shape[-1] != pilots.length:
        raise ValueError(f"expected {pilots.length} pilot samples, got {y.shape[-1]}")
    est = y @ pilots.matrix().conj() / (pilots.power * pilots.length)
    return est.reshape(y.shape[:-1] + (pilots.n_users, pilots.n_taps))


def estimate_strongest_delays(h_hat):
    """Index of the largest-magnitude tap per (stream, user); ties go to the smaller delay."""
    return np.argmax(np.abs(np.asarray(h_hat)), axis=-1)


def _ratio(values, power, noise):
    return power * np.abs(values) ** 2 / np.asarray(noise, dtype=float)


def select_streams(h_hat, d_hat, eta, power, noise):
    """Boolean ``(I, K)`` mask of the streams each user decodes from.

    A stream is kept for user ``k`` if ``P |h_hat[i, k, d_hat]|^2 /
    noise[i] >= eta``. A user with no such stream keeps the single stream
    with the largest estimated peak.
    """
    if eta <= 0:
        raise ValueError("threshold must be positive")
    noise = np.asarray(noise, dtype=float)
    peak = np.take_along_axis(h_hat, d_hat[..., None], axis=-1)[..., 0]      # (I, K)
    mask = _ratio(peak, power, noise[:, None]) >= eta
    for k in np.flatnonzero(~mask.any(axis=0)):
        mask[np.argmax(np.abs(peak[:, k])), k] = True
    return mask


def delay_compensate(taps, ref):
    """Re-index taps to offsets from per-(stream, user) reference delays.

    Returns ``hbar`` of shape ``(I, K, K, 2 d_max + 1)`` with
    ``hbar[i, k, k', nu + d_max] = taps[i, k', nu + ref[i, k]]`` and zero
    where that tap index falls outside ``0 .. d_max``.
    """
    taps = np.asarray(taps)
    ref = np.asarray(ref, dtype=int)
    n_streams, n_users, n_taps = taps.shape
    d_max = n_taps - 1
    nu = np.arange(-d_max, d_max + 1)
    src = ref[:, :, None] + nu[None, None, :]                       # (I, K, V)
    valid = (src >= 0) & (src <= d_max)
    src = np.clip(src, 0, d_max)
    gathered = np.take_along_axis(taps[:, None, :, :],                # (I, 1, K', D)
                                  src[:, :, None, :].repeat(n_users, axis=2), axis=3)
    return np.where(valid[:, :, None, :], gathered, 0.0)


def threshold_estimates(h_hat, d_hat, eta, power, noise, keep_own=True):
    """Delay-compensated LS estimates with sub-threshold entries zeroed.

    With ``keep_own`` the desired coefficient ``[i, k, k, 0]`` is never
    zeroed, so a stream chosen by the fallback rule still yields a usable
    beamformer.
    """
    comp = delay_compensate(h_hat, d_hat)
    noise = np.asarray(noise, dtype=float)
    keep = _ratio(comp, power, noise[:, None, None, None]) >= eta
    if keep_own:
        d_max = comp.shape[-1] // 2
        k = np.arange(comp.shape[1])
        keep[:, k, k, d_max] = True
    return np.where(keep, comp, 0.0)


def beamformer_sinr(u, cols, own, power, noise):
    """SINR of combiner ``u`` when the desired signal is column ``own`` of ``cols``.

    Every other column of ``cols`` (streams x interferers) is treated as
    interference with power ``power``; ``noise`` is the per-stream noise
    plus quantization variance. ``u`` may carry leading batch axes.
    """
    u = np.asarray(u)
    proj = np.abs(u.conj() @ cols) ** 2
    sig = power * proj[..., own]
    interf = power * (proj.sum(axis=-1) - proj[..., own])
    interf = np.maximum(interf, 0.0)
    noise_term = (np.abs(u) ** 2) @ np.asarray(noise, dtype=float)
    den = interf + noise_term
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, sig / np.where(den > 0, den, 1.0), 0.0)
    return np.where(np.any(u != 0, axis=-1), out, 0.0)


def _user_columns(hbar, k):
    """``(I, K V)`` interference-plus-signal matrix of user ``k`` and its own column index."""
    n_streams, n_users, _, width = hbar.shape
    cols = hbar[:, k].reshape(n_streams, n_users * width)
    return cols, k * width + width // 2


def mmse_combiner(cols, own, power, noise):
    """``C^{-1} h_own`` with ``C = P sum_{j != own} h_j h_j^H + diag(noise)``."""
    others = np.delete(cols, own, axis=1)
    others = others[:, np.any(others != 0, axis=0)]
    return solve_diag_plus_lowrank(noise, others, power, cols[:, own])


@dataclass
class LensResult:
    """Per-user SINR and rate for one lens receive mode."""

    sinr: np.ndarray
    rates: np.ndarray
    streams_per_user: np.ndarray
    combiners: list

    @property
    def sum_rate(self):
        return float(self.rates.sum())


def mmse_perfect(taps, ref, power, noise):
    """Full MMSE with perfect CSI after delay compensation.

    Parameters
    ----------
    taps : (I, K, d_max + 1) complex
        True stream taps.
    ref : (I, K) int
        Strongest-path delay of each user on each stream.
    power : float
        Per-user transmit power.
    noise : (I,) float
        ``sigma^2 + eps^2`` per stream.

    Returns
    -------
    LensResult
        ``gamma_k = P h^H C_k^{-1} h`` and rates ``log2(1 + gamma_k)``.
    """
    hbar = delay_compensate(taps, ref)
    noise = np.asarray(noise, dtype=float)
    n_users = hbar.shape[1]
    gammas, combs = np.zeros(n_users), []
    for k in range(n_users):
        cols, own = _user_columns(hbar, k)
        u = mmse_combiner(cols, own, power, noise)
        gammas[k] = max(power * float(np.real(np.vdot(cols[:, own], u))), 0.0)
        combs.append(u)
    streams = np.full(n_users, hbar.shape[0])
    return LensResult(gammas, np.log2(1.0 + gammas), streams, combs)


def mmse_reduced(h_hat, taps, power, noise, eta, overhead=1.0):
    """Reduced-size approximate MMSE from LS estimates.

    Streams and interference terms come from thresholded estimates; the
    resulting combiner is scored against the true channel compensated with
    the same estimated delays. Rates are scaled by ``overhead``.
    """
    noise = np.asarray(noise, dtype=float)
    d_hat = estimate_strongest_delays(h_hat)
    mask = select_streams(h_hat, d_hat, eta, power, noise)
    est = threshold_estimates(h_hat, d_hat, eta, power, noise)
    true = delay_compensate(taps, d_hat)
    n_users = h_hat.shape[1]
    gammas, combs = np.zeros(n_users), []
    for k in range(n_users):
        rows = np.flatnonzero(mask[:, k])
        cols_est, own = _user_columns(est[rows], k)
        cols_true, _ = _user_columns(true[rows], k)
        u = mmse_combiner(cols_est, own, power, noise[rows])
        gammas[k] = beamformer_sinr(u, cols_true, own, power, noise[rows])
        combs.append((rows, u))
    rates = overhead * np.log2(1.0 + gammas)
    return LensResult(gammas, rates, mask.sum(axis=0), combs)
