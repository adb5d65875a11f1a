"""UPA-OFDM benchmark: pilots, waveform path, LS estimation and per-subcarrier MMSE.

Frequency-domain symbols map to time samples through the unitary IDFT,
so a per-subcarrier entry of modulus ``sqrt(P)`` yields time samples of
average power ``P``. Channel frequency responses are the unnormalized
``N``-point DFT of the taps, ``h_freq = sqrt(N) F_0 h``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .lens_rx import zadoff_chu
from .numerics import dft, idft
from .quantizer import quantize

SUBCARRIER_CHUNK = 32


@dataclass(frozen=True, eq=False)
class OfdmPilots:
    """Frequency-domain pilots ``symbols[t, k, n]`` for ``tau_p`` OFDM symbols."""

    symbols: np.ndarray
    power: float
    d_max: int

    @property
    def tau_p(self):
        return self.symbols.shape[0]

    @property
    def n_users(self):
        return self.symbols.shape[1]

    @property
    def n_subcarriers(self):
        return self.symbols.shape[2]

    @property
    def n_taps(self):
        return self.d_max + 1


def make_ofdm_pilots(n_users, n_subcarriers, tau_p, d_max, power=1.0, root=1):
    """Kronecker-structured pilots built from a DFT matrix and a Zadoff-Chu diagonal.

    User ``k`` (zero based) has ``omega = k mod tau_p`` and
    ``kappa = k // tau_p`` and sends
    ``sqrt(P) V[t, omega] s[n] exp(-2j pi kappa (d_max + 1) n / N)`` in symbol ``t``,
    where ``V[t, w] = exp(-2j pi t w / tau_p)`` and ``s`` is a length-``N``
    Zadoff-Chu sequence. Users sharing ``omega`` are separated by
    ``d_max + 1`` taps in the delay domain.

    Raises
    ------
    ValueError
        The delay-domain shifts would wrap around ``N``.
    """
    groups = -(-n_users // tau_p)
    if groups * (d_max + 1) > n_subcarriers:
        raise ValueError("too many users for tau_p * N / (d_max + 1) orthogonal pilots")
    t = np.arange(tau_p)
    v = np.exp(-2j * np.pi * np.outer(t, t) / tau_p)
    s = zadoff_chu(n_subcarriers, root)
    n = np.arange(n_subcarriers)
    out = np.empty((tau_p, n_users, n_subcarriers), dtype=complex)
    for k in range(n_users):
        kappa, omega = divmod(k, tau_p)
        ramp = np.exp(-2j * np.pi * kappa * (d_max + 1) * n / n_subcarriers)
        out[:, k, :] = v[:, omega, None] * (s * ramp)[None, :]
    return OfdmPilots(math.sqrt(power) * out, float(power), int(d_max))


def stacked_pilot_matrix(pilots):
    """``(tau_p N, K (d_max + 1))`` matrix mapping stacked taps to stacked observations."""
    n = np.arange(pilots.n_subcarriers)[:, None]
    d = np.arange(pilots.n_taps)[None, :]
    f0 = np.exp(-2j * np.pi * n * d / pilots.n_subcarriers)           # sqrt(N) F_0
    blocks = pilots.symbols[:, :, :, None] * f0[None, None]           # (t, k, n, d)
    return blocks.transpose(0, 2, 1, 3).reshape(pilots.tau_p * pilots.n_subcarriers, -1)


def frequency_response(taps, n_subcarriers):
    """``sqrt(N) F_0 h`` for every stream and user: ``(..., N)``."""
    return np.fft.fft(np.asarray(taps), n=n_subcarriers, axis=-1)


def ofdm_modulate(symbols, cp):
    """Unitary IDFT and cyclic prefix; ``(..., tau, K, N)`` becomes ``(..., K, tau (N + cp))``."""
    x = idft(symbols)
    if cp:
        x = np.concatenate([x[..., -cp:], x], axis=-1)
    x = np.moveaxis(x, -3, -2)
    return x.reshape(x.shape[:-2] + (-1,))


def _convolve(x, taps):
    n_taps = taps.shape[-1]
    length = x.shape[-1]
    out = np.zeros((taps.shape[0], length), dtype=complex)
    for d in range(n_taps):
        out[:, d:] += taps[:, :, d] @ x[:, :length - d]
    return out


def ofdm_transmit_receive(symbols, taps, cp, noise_var=0.0, rng=None, rho=None, bits=None):
    """End-to-end waveform path for consecutive OFDM symbols.

    Parameters
    ----------
    symbols : (tau, K, N) complex
        Frequency-domain symbols of every user.
    taps : (I, K, D) complex
        Time-domain channel taps of every stream.
    cp : int
        Cyclic-prefix length.
    noise_var : float or (I,) array
        Receiver noise variance; requires ``rng`` when positive.
    rho, bits : (I,) arrays, optional
        Quantizer power and bit settings per stream. Omitted means no quantization.

    Returns
    -------
    (tau, I, N) complex
        Per-subcarrier observations after CP removal and the unitary DFT.
    """
    symbols = np.asarray(symbols)
    taps = np.asarray(taps)
    tau, _, n_sc = symbols.shape
    y = _convolve(ofdm_modulate(symbols, cp), taps)
    if np.any(np.asarray(noise_var) > 0):
        if rng is None:
            raise ValueError("noise requires an rng")
        nv = np.broadcast_to(np.asarray(noise_var, dtype=float), (y.shape[0],))
        y = y + np.sqrt(nv / 2.0)[:, None] * (rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape))
    if bits is not None:
        y = quantize(y, rho, bits)
    y = y.reshape(y.shape[0], tau, n_sc + cp)[:, :, cp:]
    return dft(y).transpose(1, 0, 2)


def frequency_model(symbols, taps):
    """Per-subcarrier product model ``sum_k h_freq[i, k, n] x[t, k, n]``: ``(tau, I, N)``."""
    symbols = np.asarray(symbols)
    h = frequency_response(taps, symbols.shape[-1])
    return np.einsum("ikn,tkn->tin", h, symbols)


def ofdm_ls_estimate(y, pilots):
    """LS estimate ``X_bar^H y / (tau_p N P)`` of the time-domain taps, ``(I, K, D)``.

    Evaluated per pilot symbol with an inverse FFT instead of forming the
    stacked matrix.
    """
    y = np.asarray(y)
    n_sc = pilots.n_subcarriers
    prod = pilots.symbols.conj()[:, None, :, :] * y[:, :, None, :]        # (t, I, K, N)
    corr = np.fft.ifft(prod, axis=-1)[..., :pilots.n_taps] * n_sc
    return corr.sum(axis=0) / (pilots.tau_p * n_sc * pilots.power)


def _gram_core(h, power, inv_noise):
    """``M = (I + P H^H D^-1 H)^-1`` per subcarrier for ``h`` of shape ``(n, I, K)``."""
    g = np.einsum("nik,i,nil->nkl", h.conj(), inv_noise, h)
    eye = np.eye(h.shape[-1])
    return np.linalg.inv(eye + power * g)


def mmse_subcarriers(h_freq, power, noise):
    """Closed-form MMSE SINR ``P h^H C^{-1} h`` for every user and subcarrier.

    ``h_freq`` is ``(I, K, N)``; returns ``(K, N)``. Uses
    ``gamma_k = 1 / M_kk - 1`` with ``M = (I + P H^H D^-1 H)^-1``.
    """
    h_freq = np.asarray(h_freq)
    inv_noise = 1.0 / np.asarray(noise, dtype=float)
    n_users, n_sc = h_freq.shape[1], h_freq.shape[2]
    out = np.empty((n_users, n_sc))
    for start in range(0, n_sc, SUBCARRIER_CHUNK):
        h = np.moveaxis(h_freq[:, :, start:start + SUBCARRIER_CHUNK], -1, 0)
        m = _gram_core(h, power, inv_noise)
        diag = np.real(np.diagonal(m, axis1=1, axis2=2))
        out[:, start:start + h.shape[0]] = (1.0 / diag - 1.0).T
    return np.maximum(out, 0.0)


def mmse_combiners(h_freq, power, noise):
    """MMSE combiners ``(N, I, K)``, column ``k`` proportional to ``C_k^{-1} h_k``."""
    h = np.moveaxis(np.asarray(h_freq), -1, 0)
    inv_noise = 1.0 / np.asarray(noise, dtype=float)
    m = _gram_core(h, power, inv_noise)
    return inv_noise[None, :, None] * (h @ m)


def combiner_sinr(u, h_true, power, noise):
    """SINR ``(K, N)`` of combiners ``u`` ``(N, I, K)`` on true channels ``(N, I, K)``."""
    a = np.abs(np.einsum("nik,nil->nkl", u.conj(), h_true)) ** 2
    sig = power * np.diagonal(a, axis1=1, axis2=2)
    interf = power * a.sum(axis=2) - sig
    noise_term = np.einsum("nik,i->nk", np.abs(u) ** 2, np.asarray(noise, dtype=float))
    den = np.maximum(interf, 0.0) + noise_term
    with np.errstate(divide="ignore", invalid="ignore"):
        g = np.where(den > 0, sig / np.where(den > 0, den, 1.0), 0.0)
    return g.T


def mmse_estimated(h_hat_freq, h_freq, power, noise):
    """SINR ``(K, N)`` of estimate-based MMSE combiners scored on the true channel."""
    noise = np.asarray(noise, dtype=float)
    n_users, n_sc = h_freq.shape[1], h_freq.shape[2]
    out = np.empty((n_users, n_sc))
    for start in range(0, n_sc, SUBCARRIER_CHUNK):
        sl = slice(start, start + SUBCARRIER_CHUNK)
        u = mmse_combiners(h_hat_freq[:, :, sl], power, noise)
        out[:, sl] = combiner_sinr(u, np.moveaxis(h_freq[:, :, sl], -1, 0), power, noise)
    return out


def subcarrier_rates(sinr, cp, overhead=1.0):
    """Per-user rate ``overhead / (N + cp) * sum_n log2(1 + sinr[k, n])``."""
    sinr = np.asarray(sinr)
    return overhead * np.log2(1.0 + sinr).sum(axis=-1) / (sinr.shape[-1] + cp)
