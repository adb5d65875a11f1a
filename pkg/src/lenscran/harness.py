"""Monte-Carlo experiment runner and command-line entry point.

Every drop draws one channel realization that both architectures and all
fronthaul budgets share. Per drop and architecture the RRHs probe their
antenna powers once; each budget then gets its own bit allocation,
pilot transmission and receive processing.
"""

import argparse
import csv
import dataclasses
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import yaml

from . import lens_rx, upa_ofdm
from .channel import (ScenarioConfig, cscg, element_taps, generate_drop, noise_floor,
                      path_coefficients, received_waveform, strongest_path_delays,
                      watts_to_dbm, write_drop_dump)
from .frame import FrameConfig, OfdmConfig
from .numerics import random_stream
from .quantizer import (allocate_bits, fronthaul_budget_bits, probe_power, quantize,
                        uniform_allocation, write_allocation_csv)
from .rates import ARCHITECTURES, CSI_MODES, DropResult, summarize

log = logging.getLogger(__name__)

DEFAULT_SWEEP = (0.4, 2.0, 4.0, 8.0, 20.0, 40.0, 60.0, 100.0, 200.0)
RESULT_COLUMNS = ["budget_gbps_per_sector", "mode", "csi", "mean_rate_bps_hz", "stderr",
                  "mean_antennas_per_rrh", "mean_streams_per_user", "drops", "seed"]


class ConfigError(ValueError):
    """Invalid experiment configuration; the message starts with the field path."""


@dataclass
class ExperimentSpec:
    """Everything needed to reproduce one sweep.

    ``sweep`` lists per-sector fronthaul capacities in Gbps; ``math.inf``
    requests the unconstrained 16-bit case. ``eta_db`` is the estimate
    threshold in dB.

    ``allocation`` controls how an RRH spends its budget
    ``J C / (2 W)``: ``"split"`` gives every sector an equal share and
    allocates it over that sector's antennas; ``"joint"`` allocates the
    whole budget over the antennas of all ``J`` sectors, the non-serving
    ones seeing only noise and interference.
    """

    scenario: ScenarioConfig = field(default_factory=ScenarioConfig)
    ofdm: OfdmConfig = field(default_factory=OfdmConfig)
    frame_length: int = 8280
    sweep: tuple = DEFAULT_SWEEP
    drops: int = 20
    seed: int = 1
    archs: tuple = ARCHITECTURES
    csi: tuple = CSI_MODES
    eta_db: float = 3.0
    out: str = "results"
    dump_drops: bool = False
    workers: int = 1
    allocation: str = "split"

    def __post_init__(self):
        if self.allocation not in ("split", "joint"):
            raise ConfigError(f"experiment.allocation: expected 'split' or 'joint', got {self.allocation!r}")
        if self.drops < 1:
            raise ConfigError("experiment.drops: must be at least 1")
        if self.seed < 0:
            raise ConfigError("experiment.seed: must be non-negative")
        if not self.sweep:
            raise ConfigError("experiment.sweep: empty")
        for b in self.sweep:
            if not b > 0:
                raise ConfigError(f"experiment.sweep: capacity {b} must be positive")
        for a in self.archs:
            if a not in ARCHITECTURES:
                raise ConfigError(f"experiment.modes: unknown architecture {a!r}")
        for c in self.csi:
            if c not in CSI_MODES:
                raise ConfigError(f"experiment.csi: unknown CSI mode {c!r}")
        try:
            self.ofdm.check(self.scenario.n_users, self.scenario.d_max)
            _ = self.frame
        except ValueError as exc:
            raise ConfigError(f"frame: {exc}") from exc

    @property
    def frame(self):
        return FrameConfig.standard(self.scenario.n_users, self.scenario.d_max,
                                    self.ofdm.n_subcarriers, self.frame_length)

    @property
    def eta(self):
        return 10.0 ** (self.eta_db / 10.0)


def _coerce(path, value, default):
    """Convert a YAML value to the type of ``default``; raise ConfigError with ``path``."""
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false, got {value!r}")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer, got {value!r}")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number, got {value!r}")
        return float(value)
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)) or len(value) != len(default):
            raise ConfigError(f"{path}: expected a list of {len(default)} values")
        return tuple(_coerce(f"{path}[{i}]", v, d) for i, (v, d) in enumerate(zip(value, default)))
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string, got {value!r}")
        return value
    return value


def _build(cls, section, data):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigError(f"{section}: expected a mapping")
    defaults = cls()
    names = {f.name for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in names:
            raise ConfigError(f"{section}.{key}: unknown field")
        kwargs[key] = _coerce(f"{section}.{key}", value, getattr(defaults, key))
    try:
        return cls(**kwargs)
    except ValueError as exc:
        raise ConfigError(f"{section}: {exc}") from exc


def parse_budget(text):
    """Per-sector capacity in Gbps; ``inf`` or ``unconstrained`` give ``math.inf``."""
    s = str(text).strip().lower()
    if s in ("inf", "unconstrained", "none"):
        return math.inf
    try:
        value = float(s)
    except ValueError:
        raise ConfigError(f"experiment.sweep: cannot parse {text!r}") from None
    return value


def load_spec(path, **overrides):
    """Read a YAML experiment file; ``overrides`` replace experiment-level fields."""
    try:
        with open(path, encoding="utf-8") as fh:
            doc = yaml.safe_load(fh) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("<root>: expected a mapping")
    unknown = set(doc) - {"scenario", "ofdm", "experiment"}
    if unknown:
        raise ConfigError(f"{sorted(unknown)[0]}: unknown section")
    return spec_from_dict(doc, **overrides)


def spec_from_dict(doc, **overrides):
    """Build an :class:`ExperimentSpec` from parsed config sections."""
    scenario = _build(ScenarioConfig, "scenario", doc.get("scenario"))
    ofdm = _build(OfdmConfig, "ofdm", doc.get("ofdm"))
    exp = dict(doc.get("experiment") or {})
    if not isinstance(exp, dict):
        raise ConfigError("experiment: expected a mapping")
    exp.update({k: v for k, v in overrides.items() if v is not None})
    kwargs = {}
    simple = {"frame_length": 8280, "drops": 20, "seed": 1, "eta_db": 3.0, "out": "results",
              "dump_drops": False, "workers": 1, "allocation": "split"}
    for key, value in exp.items():
        if key in simple:
            kwargs[key] = _coerce(f"experiment.{key}", value, simple[key])
        elif key == "sweep":
            items = value.split(",") if isinstance(value, str) else value
            if not isinstance(items, (list, tuple)):
                raise ConfigError("experiment.sweep: expected a list")
            kwargs["sweep"] = tuple(parse_budget(v) for v in items)
        elif key in ("modes", "archs"):
            items = value.split(",") if isinstance(value, str) else value
            kwargs["archs"] = tuple(str(v).strip() for v in items)
        elif key == "csi":
            kwargs["csi"] = CSI_MODES if value == "both" else (
                tuple(value) if isinstance(value, (list, tuple)) else (value,))
        else:
            raise ConfigError(f"experiment.{key}: unknown field")
    return ExperimentSpec(scenario=scenario, ofdm=ofdm, **kwargs)


def _budget_label(budget):
    return "inf" if math.isinf(budget) else f"{budget:g}"


def _probe(spec, drop_idx, arch, taps_all, probe_x, sigma2):
    """Received power per element of every sector during probing, ``(M, J Q)``.

    Columns ``0 .. Q-1`` belong to the serving sector. With joint
    allocation the other sectors follow; they receive no user signal, only
    noise and inter-sector interference.
    """
    m_count, q_count = taps_all.shape[:2]
    t_a = spec.frame.t_a
    rng = random_stream(spec.seed, f"drop-{drop_idx}/{arch}/probe-noise")
    flat = taps_all.reshape(m_count * q_count, *taps_all.shape[2:])
    y = received_waveform(probe_x, flat)[:, -t_a:]
    y = y + cscg(rng, sigma2, y.shape)
    serving = probe_power(y, min_samples=spec.scenario.d_max + 1).reshape(m_count, q_count)
    if spec.allocation == "split":
        return serving
    idle = cscg(rng, sigma2, (m_count, (spec.scenario.n_sectors - 1) * q_count, t_a))
    return np.concatenate([serving, probe_power(idle)], axis=1)


def _allocate(rho, budget, spec):
    if math.isinf(budget):
        return [uniform_allocation(r) for r in rho]
    sc = spec.scenario
    bits = fronthaul_budget_bits(budget * 1e9, sc.n_sectors, sc.bandwidth_hz)
    if spec.allocation == "split":
        bits /= sc.n_sectors
    return [allocate_bits(r, bits) for r in rho]


def _lens_estimated(spec, rng, taps, rho, bits, sigma2, eps2):
    sc = spec.scenario
    power = sc.tx_power_w
    pilots = lens_rx.make_pilots(sc.n_users, sc.d_max, spec.frame.t_p, power)
    y = lens_rx.transmit_pilots(pilots, taps)
    y = quantize(y + cscg(rng, sigma2, y.shape), rho, bits)
    h_hat = lens_rx.ls_estimate(y, pilots)
    return lens_rx.mmse_reduced(h_hat, taps, power, sigma2 + eps2, spec.eta,
                                spec.frame.overhead_factor)


def _upa_estimated(spec, rng, taps, rho, bits, sigma2, eps2):
    sc, of = spec.scenario, spec.ofdm
    power = sc.tx_power_w
    pilots = upa_ofdm.make_ofdm_pilots(sc.n_users, of.n_subcarriers, of.tau_p, sc.d_max, power)
    y = upa_ofdm.ofdm_transmit_receive(pilots.symbols, taps, of.cp, sigma2, rng, rho, bits)
    h_hat = np.concatenate([upa_ofdm.ofdm_ls_estimate(y[:, s:s + 256], pilots)
                            for s in range(0, y.shape[1], 256)])
    h_hat_freq = upa_ofdm.frequency_response(h_hat, of.n_subcarriers)
    h_freq = upa_ofdm.frequency_response(taps, of.n_subcarriers)
    sinr = upa_ofdm.mmse_estimated(h_hat_freq, h_freq, power, sigma2 + eps2)
    return sinr, upa_ofdm.subcarrier_rates(sinr, of.cp, of.overhead_factor)


def run_drop(spec, drop_idx):
    """Run every (budget, architecture, CSI) combination on one drop.

    Returns
    -------
    results : list of DropResult
    alloc_rows : list of dict
        Allocation report rows for the selected antennas.
    """
    sc = spec.scenario
    drop = generate_drop(sc, random_stream(spec.seed, f"drop-{drop_idx}/channel"))
    drop.meta.update({"drop": drop_idx, "seed": spec.seed})
    power, sigma2 = sc.tx_power_w, noise_floor(sc)
    sym_rng = random_stream(spec.seed, f"drop-{drop_idx}/probe-symbols")
    probe_len = spec.frame.t_a + sc.d_max
    probe_x = math.sqrt(power) * np.exp(2j * np.pi * sym_rng.uniform(size=(sc.n_users, probe_len)))

    results, rows = [], []
    for arch in spec.archs:
        geom = sc.lens_geometry() if arch == "lens" else sc.upa_geometry()
        coeffs = path_coefficients(drop.paths, geom)
        taps_all = element_taps(drop.paths, geom, coeffs)
        rho_all = _probe(spec, drop_idx, arch, taps_all, probe_x, sigma2)
        labels = geom.labels()
        q_count = geom.size
        for budget in spec.sweep:
            allocs = _allocate(rho_all, budget, spec)
            for m, a in enumerate(allocs):
                for idx in a.selected:
                    sector, q = divmod(int(idx), q_count)
                    rows.append({"drop": drop_idx, "budget_gbps_per_sector": _budget_label(budget),
                                 "mode": arch, "rrh": m, "sector": sector,
                                 "q_e": labels[q][0], "q_a": labels[q][1],
                                 "rho_dbm": f"{float(watts_to_dbm(a.rho[idx])):.4f}",
                                 "bits": int(a.bits[idx])})
            # only serving-sector streams carry user signal; the CU discards the rest
            serving = [a.selected[a.selected < q_count] for a in allocs]
            s_rrh = np.concatenate([np.full(len(s), m) for m, s in enumerate(serving)]).astype(int)
            s_elem = np.concatenate(serving).astype(int)
            bits = np.concatenate([a.bits[s] for a, s in zip(allocs, serving)])
            rho = np.concatenate([a.rho[s] for a, s in zip(allocs, serving)])
            eps2 = np.concatenate([a.eps2[s] for a, s in zip(allocs, serving)])
            taps = taps_all[s_rrh, s_elem]
            antennas = np.array([len(s) for s in serving])
            budget_bits = allocs[0].budget

            def record(csi, sinr, rates, streams):
                results.append(DropResult(drop_idx, budget, arch, csi, np.asarray(sinr),
                                          np.asarray(rates), antennas, np.asarray(streams),
                                          budget_bits))

            noise = sigma2 + eps2
            if "perfect" in spec.csi:
                if arch == "lens":
                    ref = strongest_path_delays(drop.paths, coeffs, s_rrh, s_elem)
                    res = lens_rx.mmse_perfect(taps, ref, power, noise)
                    record("perfect", res.sinr, res.rates, res.streams_per_user)
                else:
                    h_freq = upa_ofdm.frequency_response(taps, spec.ofdm.n_subcarriers)
                    sinr = upa_ofdm.mmse_subcarriers(h_freq, power, noise)
                    rates = upa_ofdm.subcarrier_rates(sinr, spec.ofdm.cp)
                    record("perfect", sinr, rates, np.full(sc.n_users, len(s_rrh)))
            if "estimated" in spec.csi:
                rng = random_stream(spec.seed, f"drop-{drop_idx}/{_budget_label(budget)}/{arch}/pilot-noise")
                if arch == "lens":
                    res = _lens_estimated(spec, rng, taps, rho, bits, sigma2, eps2)
                    record("estimated", res.sinr, res.rates, res.streams_per_user)
                else:
                    sinr, rates = _upa_estimated(spec, rng, taps, rho, bits, sigma2, eps2)
                    record("estimated", sinr, rates, np.full(sc.n_users, len(s_rrh)))
    if spec.dump_drops:
        dump_dir = os.path.join(spec.out, "drops")
        os.makedirs(dump_dir, exist_ok=True)
        write_drop_dump(drop, os.path.join(dump_dir, f"drop-{drop_idx:04d}.txt"))
    return results, rows


def _run_drop_star(args):
    return run_drop(*args)


def run(spec, progress=None):
    """Run all drops, write CSV outputs to ``spec.out`` and return the summaries."""
    os.makedirs(spec.out, exist_ok=True)
    jobs = [(spec, d) for d in range(spec.drops)]
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            outputs = list(pool.map(_run_drop_star, jobs))
    else:
        outputs = []
        for job in jobs:
            outputs.append(_run_drop_star(job))
            if progress:
                progress(job[1])
    results = [r for res, _ in outputs for r in res]
    rows = [row for _, rr in outputs for row in rr]
    summary = summarize(results)
    write_results_csv(os.path.join(spec.out, "results.csv"), summary, spec.seed)
    write_allocation_csv(os.path.join(spec.out, "allocations.csv"), rows)
    return summary


def write_results_csv(path, summary, seed):
    """Write the aggregate table with fixed float formatting."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RESULT_COLUMNS)
        for s in summary:
            w.writerow([_budget_label(s.budget_gbps), s.arch, s.csi, f"{s.mean_rate:.6f}",
                        f"{s.stderr:.6f}", f"{s.mean_antennas:.4f}", f"{s.mean_streams:.4f}",
                        s.drops, seed])


def format_summary(summary):
    lines = [f"{'Gbps/sector':>11} {'mode':>5} {'csi':>9} {'rate':>9} {'stderr':>8} {'ant/RRH':>8} {'str/user':>8}"]
    for s in summary:
        lines.append(f"{_budget_label(s.budget_gbps):>11} {s.arch:>5} {s.csi:>9} {s.mean_rate:9.4f} "
                     f"{s.stderr:8.4f} {s.mean_antennas:8.2f} {s.mean_streams:8.2f}")
    return "\n".join(lines)


def build_parser():
    p = argparse.ArgumentParser(prog="lenscran",
                                description="Uplink mmWave CRAN simulator: lens arrays vs UPA-OFDM.")
    p.add_argument("--config", help="YAML experiment file")
    p.add_argument("--sweep", help="comma-separated per-sector capacities in Gbps; 'inf' = unconstrained")
    p.add_argument("--drops", type=int, help="number of Monte-Carlo drops")
    p.add_argument("--seed", type=int, help="base random seed")
    p.add_argument("--modes", help="comma-separated architectures (lens,upa)")
    p.add_argument("--csi", choices=("perfect", "estimated", "both"), help="CSI modes to evaluate")
    p.add_argument("--out", help="output directory")
    p.add_argument("--dump-drops", action="store_true", default=None, help="write drops/*.txt channel dumps")
    p.add_argument("--workers", type=int, help="parallel drop workers")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {"sweep": args.sweep, "drops": args.drops, "seed": args.seed,
                 "modes": args.modes, "csi": args.csi, "out": args.out,
                 "dump_drops": args.dump_drops, "workers": args.workers}
    try:
        if args.config:
            spec = load_spec(args.config, **overrides)
        else:
            spec = spec_from_dict({}, **overrides)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    summary = run(spec, progress=lambda d: log.info("drop %d done", d))
    print(format_summary(summary))
    return 0


if __name__ == "__main__":
    sys.exit(main())
