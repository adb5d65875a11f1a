"""Per-drop result records and their aggregation across drops."""

import math
from dataclasses import dataclass, field

import numpy as np

ARCHITECTURES = ("lens", "upa")
CSI_MODES = ("perfect", "estimated")


@dataclass
class DropResult:
    """Outcome of one architecture and CSI mode on one drop at one fronthaul budget.

    ``budget_gbps`` is the per-sector capacity; ``math.inf`` marks the
    unconstrained (16-bit) case.
    """

    drop: int
    budget_gbps: float
    arch: str
    csi: str
    sinr: np.ndarray
    rates: np.ndarray
    antennas_per_rrh: np.ndarray
    streams_per_user: np.ndarray
    budget_bits: float
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.arch not in ARCHITECTURES:
            raise ValueError(f"unknown architecture {self.arch!r}")
        if self.csi not in CSI_MODES:
            raise ValueError(f"unknown CSI mode {self.csi!r}")

    @property
    def mean_rate(self):
        return float(np.mean(self.rates))


@dataclass
class Summary:
    """Aggregate over drops for one (budget, architecture, CSI) cell."""

    budget_gbps: float
    arch: str
    csi: str
    mean_rate: float
    stderr: float
    mean_antennas: float
    mean_streams: float
    drops: int


def summarize(results):
    """Average per-user rate, antenna and stream counts per (budget, arch, csi).

    The mean rate is the average over drops of each drop's mean per-user
    rate; ``stderr`` is the standard error of that average (zero for a
    single drop). Output is sorted by budget, then architecture and CSI
    mode in their canonical order.

    Raises
    ------
    ValueError
        ``results`` is empty.
    """
    results = list(results)
    if not results:
        raise ValueError("no drop results to summarize")
    cells = {}
    for r in results:
        cells.setdefault((r.budget_gbps, r.arch, r.csi), []).append(r)
    out = []
    order = lambda key: (key[0], ARCHITECTURES.index(key[1]), CSI_MODES.index(key[2]))
    for key in sorted(cells, key=order):
        group = sorted(cells[key], key=lambda r: r.drop)
        rates = np.array([r.mean_rate for r in group])
        n = len(rates)
        stderr = float(np.std(rates, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        out.append(Summary(
            budget_gbps=key[0], arch=key[1], csi=key[2],
            mean_rate=float(rates.mean()), stderr=stderr,
            mean_antennas=float(np.mean([np.mean(r.antennas_per_rrh) for r in group])),
            mean_streams=float(np.mean([np.mean(r.streams_per_user) for r in group])),
            drops=n,
        ))
    return out
