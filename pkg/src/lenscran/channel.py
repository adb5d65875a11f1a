"""Scenario drops and multipath channel realizations.

A drop places ``M`` RRHs on the corners of a hexagon and ``K`` users
uniformly inside it, then draws a geometric multipath channel for every
RRH-user pair. Each RRH has ``J`` sectors; the one whose boresight points
at the hexagon center covers the whole hexagon, so every user lands in
that sector and only that sector's array is simulated.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .arrays import enumerate_lens_elements, response, UpaGeometry


class GeometryError(RuntimeError):
    """User placement could not satisfy the minimum-distance constraint."""


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0


def path_loss_db(distance_m):
    """Close-in 28 GHz path loss ``61.4 + 34.1 log10(d)`` in dB."""
    return 61.4 + 34.1 * np.log10(distance_m)


@dataclass
class ScenarioConfig:
    """Deployment, propagation and array parameters of one CRAN cluster.

    Lengths in meters, angles in radians, times in seconds, powers in dBm
    unless a name says otherwise.
    """

    n_rrh: int = 6
    n_users: int = 6
    n_sectors: int = 3
    hex_side_m: float = 50.0 / math.sqrt(3.0)
    rrh_height_m: float = 30.0
    user_height_m: tuple = (1.0, 25.0)
    min_ground_distance_m: float = 2.0
    carrier_hz: float = 28e9
    bandwidth_hz: float = 200e6
    max_delay_s: float = 100e-9
    path_counts: tuple = (1, 2, 3)
    path_probs: tuple = (1 / 3, 1 / 3, 1 / 3)
    delay_mean_ratio: float = 0.25        # r_zeta
    delay_mean_s: float = 67e-9           # mu_zeta
    power_decay_s: float = 31.4e-9
    shadowing_db: float = 9.4
    elevation_spread_rad: float = math.pi / 12
    azimuth_spread_rad: float = math.pi / 6
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 6.0
    interference_dbm: float = -80.0
    tx_power_dbm: float = 23.0
    lens_aperture: tuple = (10.0, 10.0)   # (D_y, D_z) in wavelengths
    lens_theta: tuple = (math.pi / 6, math.pi / 2)   # (Theta_minus, Theta_plus)
    lens_phi: tuple = (math.pi / 3, math.pi / 3)     # (Phi_minus, Phi_plus)
    lens_convention: str = "trimmed"
    upa_aperture: tuple = (10.0, 10.0)
    max_placement_tries: int = 10000

    def __post_init__(self):
        if self.n_sectors * self.n_rrh < self.n_users:
            raise ValueError("need n_sectors * n_rrh >= n_users")
        if abs(sum(self.path_probs) - 1.0) > 1e-9 or len(self.path_probs) != len(self.path_counts):
            raise ValueError("path_probs must match path_counts and sum to one")

    @property
    def d_max(self):
        """Maximum delay spread in symbols, ``ceil(max_delay * W)``."""
        return int(math.ceil(round(self.max_delay_s * self.bandwidth_hz, 9)))

    @property
    def tx_power_w(self):
        return float(dbm_to_watts(self.tx_power_dbm))

    def lens_geometry(self):
        return enumerate_lens_elements(self.lens_aperture[0], self.lens_aperture[1],
                                       self.lens_theta[0], self.lens_theta[1],
                                       self.lens_phi[0], self.lens_phi[1],
                                       self.lens_convention)

    def upa_geometry(self):
        return UpaGeometry(*self.upa_aperture)


def noise_floor(cfg):
    """Per-antenna noise plus inter-sector interference power in watts."""
    thermal = dbm_to_watts(cfg.noise_psd_dbm_hz) * cfg.bandwidth_hz * 10.0 ** (cfg.noise_figure_db / 10.0)
    return float(thermal + dbm_to_watts(cfg.interference_dbm))


@dataclass
class PathSet:
    """Flat list of propagation paths; entry ``p`` belongs to ``(rrh[p], user[p])``."""

    rrh: np.ndarray
    user: np.ndarray
    gain: np.ndarray
    delay: np.ndarray
    theta: np.ndarray
    phi: np.ndarray
    n_rrh: int
    n_users: int
    d_max: int

    def __len__(self):
        return len(self.rrh)

    def pair_index(self):
        """``(M, K, L_max)`` array of path indices per pair, padded with -1."""
        counts = np.zeros((self.n_rrh, self.n_users), dtype=int)
        np.add.at(counts, (self.rrh, self.user), 1)
        out = -np.ones((self.n_rrh, self.n_users, max(1, counts.max(initial=0))), dtype=int)
        fill = np.zeros_like(counts)
        for p, (m, k) in enumerate(zip(self.rrh, self.user)):
            out[m, k, fill[m, k]] = p
            fill[m, k] += 1
        return out


@dataclass
class Drop:
    """One Monte-Carlo realization of positions and channels."""

    rrh_xy: np.ndarray
    user_xyz: np.ndarray
    sector: np.ndarray          # (M, K) serving sector index, 0 = facing center
    distance_m: np.ndarray      # (M, K) 3-D distance
    los_theta: np.ndarray
    los_phi: np.ndarray
    paths: PathSet
    meta: dict = field(default_factory=dict)


def _in_hexagon(x, y, side):
    ax, ay = abs(x), abs(y)
    return ay < side * math.sqrt(3) / 2 and math.sqrt(3) * ax + ay < math.sqrt(3) * side


def _truncated_exponential(rng, mean, cap, size):
    u = rng.uniform(size=size)
    return -mean * np.log1p(-u * (1.0 - math.exp(-cap / mean)))


def generate_drop(cfg, rng):
    """Draw RRH/user geometry and the path set of every RRH-user pair.

    Raises
    ------
    GeometryError
        A user could not be placed outside the minimum ground distance of
        every RRH within ``cfg.max_placement_tries`` attempts.
    """
    m_count, k_count = cfg.n_rrh, cfg.n_users
    ang = 2 * np.pi * np.arange(m_count) / m_count
    rrh_xy = cfg.hex_side_m * np.stack([np.cos(ang), np.sin(ang)], axis=1)

    users = np.empty((k_count, 3))
    for k in range(k_count):
        for _ in range(cfg.max_placement_tries):
            x, y = rng.uniform(-cfg.hex_side_m, cfg.hex_side_m, size=2)
            if not _in_hexagon(x, y, cfg.hex_side_m):
                continue
            if np.min(np.hypot(rrh_xy[:, 0] - x, rrh_xy[:, 1] - y)) < cfg.min_ground_distance_m:
                continue
            break
        else:
            raise GeometryError(f"could not place user {k} after {cfg.max_placement_tries} tries")
        users[k] = x, y, rng.uniform(*cfg.user_height_m)

    boresight = -rrh_xy / np.linalg.norm(rrh_xy, axis=1, keepdims=True)
    rel = users[None, :, :2] - rrh_xy[:, None, :]                    # (M, K, 2)
    ground = np.linalg.norm(rel, axis=2)
    dot = np.einsum("mkc,mc->mk", rel, boresight)
    cross = boresight[:, None, 0] * rel[..., 1] - boresight[:, None, 1] * rel[..., 0]
    los_phi = np.arctan2(cross, dot)
    dh = cfg.rrh_height_m - users[None, :, 2]
    los_theta = np.arctan2(dh, ground)
    distance = np.hypot(ground, dh)
    half = np.pi / cfg.n_sectors
    sector = np.mod(np.floor((los_phi + half) / (2 * half)), cfg.n_sectors).astype(int)

    d_max = cfg.d_max
    rows = {key: [] for key in ("rrh", "user", "gain", "delay", "theta", "phi")}
    mean_delay = cfg.delay_mean_ratio * cfg.delay_mean_s
    for m in range(m_count):
        for k in range(k_count):
            n_paths = int(rng.choice(cfg.path_counts, p=cfg.path_probs))
            zeta = _truncated_exponential(rng, mean_delay, cfg.max_delay_s, n_paths)
            shadow = rng.normal(0.0, cfg.shadowing_db, size=n_paths)
            kappa = 10.0 ** (shadow / 10.0) * 0.613 * np.exp(-zeta / cfg.power_decay_s)
            kappa_bar = kappa / kappa.sum()
            path_gain = 10.0 ** (-path_loss_db(distance[m, k]) / 10.0)
            phase = rng.uniform(0.0, 2 * np.pi, size=n_paths)
            theta = los_theta[m, k] + rng.uniform(-cfg.elevation_spread_rad, cfg.elevation_spread_rad, n_paths)
            phi = los_phi[m, k] + rng.uniform(-cfg.azimuth_spread_rad, cfg.azimuth_spread_rad, n_paths)
            rows["rrh"].extend([m] * n_paths)
            rows["user"].extend([k] * n_paths)
            rows["gain"].extend(np.sqrt(kappa_bar * path_gain) * np.exp(1j * phase))
            rows["delay"].extend(np.clip(np.rint(zeta * cfg.bandwidth_hz), 0, d_max).astype(int))
            rows["theta"].extend(theta)
            rows["phi"].extend(phi)

    paths = PathSet(
        rrh=np.array(rows["rrh"], dtype=int),
        user=np.array(rows["user"], dtype=int),
        gain=np.array(rows["gain"], dtype=complex),
        delay=np.array(rows["delay"], dtype=int),
        theta=np.array(rows["theta"]),
        phi=np.array(rows["phi"]),
        n_rrh=m_count, n_users=k_count, d_max=d_max,
    )
    return Drop(rrh_xy, users, sector, distance, los_theta, los_phi, paths)


def path_coefficients(paths, geom):
    """Per-path, per-element coefficients ``alpha * a_q(theta, phi)``, shape ``(P, Q)``."""
    return paths.gain[:, None] * response(geom, paths.theta, paths.phi)


def element_taps(paths, geom, coeffs=None):
    """Tap vectors of every element: array ``(M, Q, K, d_max + 1)``.

    Paths sharing a delay add coherently into the same tap.
    """
    if coeffs is None:
        coeffs = path_coefficients(paths, geom)
    taps = np.zeros((paths.n_rrh, paths.n_users, paths.d_max + 1, geom.size), dtype=complex)
    np.add.at(taps, (paths.rrh, paths.user, paths.delay), coeffs)
    return taps.transpose(0, 3, 1, 2)


def stream_taps(paths, geom, stream_rrh, stream_elem, coeffs=None):
    """Tap vectors ``(I, K, d_max + 1)`` of the selected antennas (streams)."""
    taps = element_taps(paths, geom, coeffs)
    return taps[np.asarray(stream_rrh, dtype=int), np.asarray(stream_elem, dtype=int)]


def strongest_path_delays(paths, coeffs, stream_rrh, stream_elem):
    """Delay of the maximum-gain path from each user on each stream, ``(I, K)``.

    Ties go to the lower path index. Pairs without any path get delay 0.
    """
    idx = paths.pair_index()                              # (M, K, L)
    sub = idx[np.asarray(stream_rrh, dtype=int)]          # (I, K, L)
    valid = sub >= 0
    gains = np.abs(coeffs[np.where(valid, sub, 0), np.asarray(stream_elem, dtype=int)[:, None, None]]) ** 2
    gains = np.where(valid, gains, -1.0)
    best = np.take_along_axis(sub, gains.argmax(axis=2)[..., None], axis=2)[..., 0]
    return np.where(best >= 0, paths.delay[np.maximum(best, 0)], 0)


def convolution_matrix(x, n_taps):
    """Linear-convolution matrix ``X[n, k * n_taps + d] = x[k, n - d]`` (zero for ``n < d``).

    ``x`` has shape ``(K, T)``; the result maps stacked per-user tap vectors
    to the ``T`` received samples.
    """
    x = np.asarray(x)
    k_count, length = x.shape
    out = np.zeros((length, k_count, n_taps), dtype=complex)
    for d in range(n_taps):
        out[d:, :, d] = x[:, :length - d].T
    return out.reshape(length, k_count * n_taps)


def received_waveform(x, taps):
    """Noiseless received samples ``(I, T)`` for user waveforms ``x`` ``(K, T)``."""
    n_streams, k_count, n_taps = taps.shape
    conv = convolution_matrix(x, n_taps)
    return (conv @ taps.reshape(n_streams, k_count * n_taps).T).T


def cscg(rng, var, shape):
    """Circularly-symmetric complex Gaussian samples with variance ``var``."""
    scale = np.sqrt(np.asarray(var, dtype=float) / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def write_drop_dump(drop, path):
    """Write user positions and the full path list as indented JSON."""
    p = drop.paths
    doc = {
        "meta": drop.meta,
        "rrh_xy_m": drop.rrh_xy.tolist(),
        "users_xyz_m": drop.user_xyz.tolist(),
        "serving_sector": drop.sector.tolist(),
        "paths": [
            {
                "rrh": int(p.rrh[i]), "user": int(p.user[i]),
                "gain_re": float(p.gain[i].real), "gain_im": float(p.gain[i].imag),
                "delay_symbols": int(p.delay[i]),
                "theta_rad": float(p.theta[i]), "phi_rad": float(p.phi[i]),
            }
            for i in range(len(p))
        ],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")
