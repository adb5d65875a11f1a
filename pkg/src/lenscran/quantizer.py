"""Uniform scalar quantization and fronthaul-constrained bit allocation.

Each RRH measures the average received power ``rho`` on its antennas,
then splits a per-sample bit budget ``R / (2 W)`` across them to minimize
the total quantization noise ``sum(3 rho / 4**b)``. The relaxed problem is
solved by bisection on the dual variable; the integer allocation comes
from thresholded rounding with a second bisection.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9
UNCONSTRAINED_BITS = 16


def quantization_noise(rho, bits):
    """Error variance ``3 rho / 4**b``; zero where ``b == 0`` (antenna not forwarded)."""
    rho = np.asarray(rho, dtype=float)
    bits = np.asarray(bits)
    return np.where(bits > 0, 3.0 * rho / 4.0 ** bits, 0.0)


def fronthaul_budget_bits(capacity_per_sector_bps, n_sectors, bandwidth_hz):
    """Bits per complex sample per RRH, ``n_sectors * C / (2 W)``."""
    return n_sectors * capacity_per_sector_bps / (2.0 * bandwidth_hz)


def probe_power(samples, min_samples=None):
    """Mean received power per antenna over the probing window (last axis)."""
    samples = np.asarray(samples)
    if samples.size == 0 or samples.shape[-1] == 0:
        raise ValueError("no probing samples")
    if min_samples is not None and samples.shape[-1] < min_samples:
        raise ValueError(f"need at least {min_samples} probing samples, got {samples.shape[-1]}")
    return np.mean(np.abs(samples) ** 2, axis=-1)


def _relaxed_bits(rho_n, lam):
    with np.errstate(divide="ignore"):
        return np.maximum(0.5 * np.log2(rho_n / lam), 0.0)


def bisect_water_level(rho, budget, tol=DEFAULT_TOL):
    """Bisection for the normalized dual variable.

    Powers are scaled so that ``6 rho_max ln 2 = 1``; the search interval
    is then ``[0, 1]``. Returns ``(lam_lo, lam_hi, iterations)`` with the
    allocation at ``lam_hi`` feasible.
    """
    rho_n = np.asarray(rho, dtype=float) / np.max(rho)
    lo, hi, its = 0.0, 1.0, 0
    while hi - lo >= tol:
        lam = 0.5 * (lo + hi)
        if _relaxed_bits(rho_n, lam).sum() <= budget:
            hi = lam
        else:
            lo = lam
        its += 1
    return lo, hi, its


def solve_relaxed_allocation(rho, budget, tol=DEFAULT_TOL):
    """Optimal real-valued bit allocation ``b'_q = max(0.5 log2(6 rho_q ln2 / lam), 0)``.

    Bisection brackets the dual variable and fixes the active set; the
    water level is then solved in closed form on that set so the budget is
    met to floating-point accuracy rather than to ``tol``.

    Raises
    ------
    ValueError
        Non-positive budget, negative powers, or no antenna with positive power.
    """
    rho = np.asarray(rho, dtype=float)
    if budget <= 0:
        raise ValueError("bit budget must be positive")
    if np.any(rho < 0) or not np.any(rho > 0):
        raise ValueError("need non-negative powers with at least one positive entry")
    rho_n = rho / rho.max()
    _, hi, _ = bisect_water_level(rho_n, budget, tol)

    active = rho_n > hi
    if not active.any():
        active = rho_n == 1.0
    with np.errstate(divide="ignore"):
        log_rho = np.log2(rho_n)
    while True:
        log_lam = (log_rho[active].sum() - 2.0 * budget) / active.sum()
        grow = (~active) & (rho_n > 0) & (log_rho > log_lam)
        if not grow.any():
            break
        active |= grow
    bits = np.where(active, 0.5 * (np.where(active, log_rho, 0.0) - log_lam), 0.0)
    bits = np.maximum(bits, 0.0)
    near = np.abs(bits - np.rint(bits)) < 1e-9
    return np.where(near, np.rint(bits), bits)


def round_allocation(relaxed, budget, tol=DEFAULT_TOL):
    """Integer allocation by thresholded rounding of ``relaxed``.

    ``b_q = floor(b'_q)`` when the fractional part is at most ``beta``,
    otherwise ``ceil(b'_q)``; ``beta`` is the smallest threshold (found by
    bisection on ``[0, 1]``) that keeps ``sum(b) <= budget``. Entries with
    ``b'_q = 0`` stay at zero.
    """
    relaxed = np.asarray(relaxed, dtype=float)
    active = relaxed > 0
    floor = np.floor(relaxed)
    frac = relaxed - floor

    def rounded(beta):
        return np.where(active, np.where(frac <= beta, floor, floor + 1), 0).astype(int)

    lo, hi = 0.0, 1.0
    while hi - lo >= tol:
        beta = 0.5 * (lo + hi)
        if rounded(beta).sum() <= budget:
            hi = beta
        else:
            lo = beta
    return rounded(hi)


@dataclass
class BitAllocation:
    """Per-antenna bits and the resulting quantization noise at one RRH."""

    bits: np.ndarray
    rho: np.ndarray
    budget: float

    @property
    def eps2(self):
        return quantization_noise(self.rho, self.bits)

    @property
    def selected(self):
        return np.flatnonzero(self.bits > 0)

    @property
    def n_selected(self):
        return int(np.count_nonzero(self.bits))


def allocate_bits(rho, budget, tol=DEFAULT_TOL):
    """Relaxed solve followed by rounding; returns a :class:`BitAllocation`."""
    rho = np.asarray(rho, dtype=float)
    bits = round_allocation(solve_relaxed_allocation(rho, budget, tol), budget, tol)
    return BitAllocation(bits, rho, float(budget))


def uniform_allocation(rho, bits=UNCONSTRAINED_BITS):
    """Give every antenna with positive power the same number of bits."""
    rho = np.asarray(rho, dtype=float)
    b = np.where(rho > 0, bits, 0).astype(int)
    return BitAllocation(b, rho, float(b.sum()))


def quantize(y, rho, bits, rng=None):
    """Quantize complex samples with a ``bits``-per-dimension uniform mid-rise quantizer.

    Real and imaginary parts are quantized independently over
    ``[-3 sqrt(rho/2), 3 sqrt(rho/2)]`` with ``2**bits`` levels; samples
    beyond the range map to the outermost level. ``rho`` and ``bits`` may be
    arrays broadcasting against ``y.shape[:-1]`` (one value per antenna row).

    Passing ``rng`` enables subtractive uniform dither.
    """
    y = np.asarray(y)
    bits = np.asarray(bits)
    rho = np.asarray(rho, dtype=float)
    if np.any(bits < 1):
        raise ValueError("bits == 0 means the stream is dropped, not quantized")
    if np.any(rho <= 0):
        raise ValueError("quantizer needs a positive power estimate")
    if y.ndim > 0 and bits.ndim > 0:
        bits = bits[..., None]
        rho = rho[..., None]
    levels = 2 ** bits
    amp = 3.0 * np.sqrt(rho / 2.0)
    step = 2.0 * amp / levels

    def q(x, dither):
        idx = np.clip(np.floor((x + dither + amp) / step), 0, levels - 1)
        return -amp + (idx + 0.5) * step - dither

    if rng is None:
        d_re = d_im = 0.0
    else:
        d_re = (rng.uniform(size=y.shape) - 0.5) * step
        d_im = (rng.uniform(size=y.shape) - 0.5) * step
    return q(y.real, d_re) + 1j * q(y.imag, d_im)


def write_allocation_csv(path, rows):
    """Write allocation report rows.

    Each row is a mapping with keys ``drop, budget_gbps_per_sector, mode,
    rrh, sector, q_e, q_a, rho_dbm, bits``.
    """
    fields = ["drop", "budget_gbps_per_sector", "mode", "rrh", "sector",
              "q_e", "q_a", "rho_dbm", "bits"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def iteration_bound(rho_max, tol):
    """Iteration count of the two bisections, ``log2(6 rho_max ln2 / tol**2)``."""
    return math.log2(6.0 * rho_max * math.log(2.0) / tol ** 2)
