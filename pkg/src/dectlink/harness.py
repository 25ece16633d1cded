"""Monte Carlo experiment engine: SNR sweeps with deterministic seeding,
batch-wise stopping rules, optional process parallelism, and CSV/JSON
result persistence.

Trials are seeded from (master_seed, point_index, trial_index) with a
counter-based generator, and the stopping rule is evaluated only at
fixed batch boundaries, so the counters are bit-identical for any worker
count.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import __version__
from .link import LinkSimulator, TrialResult
from .numerology import MCS_TABLE, derive_numerology, mcs_format, preset_format

log = logging.getLogger("dectlink")

#: Trials between stopping-rule checks; fixed so that results do not
#: depend on the worker count.
TRIAL_BATCH = 256

CHANNELS = ("awgn", "flat_rayleigh", "nlos", "los")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything needed to reproduce one PER/BER-versus-SNR sweep."""

    name: str
    format_name: str = "Format0"      # preset name, or "mcs" with mcs_index
    mcs_index: int | None = None
    mu: int = 1
    beta: int = 1
    channel: str = "awgn"
    carrier_hz: float = 4.0e9
    velocity_mps: float = 3 / 3.6
    n_tx: int = 1
    n_rx: int = 1
    csi: str = "perfect"
    snr_grid_db: tuple[float, ...] = ()
    harq_max_retx: int | None = None
    min_packet_errors: int = 100
    max_trials: int = 10_000_000
    master_seed: int = 0
    uncoded: bool = False
    design_snr_db: float = 10.0
    max_iterations: int = 8

    def __post_init__(self):
        grid = tuple(float(s) for s in self.snr_grid_db)
        if not grid:
            raise SpecError(f"{self.name}: SNR grid must not be empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise SpecError(f"{self.name}: SNR grid must be strictly increasing")
        if self.min_packet_errors < 1:
            raise SpecError(f"{self.name}: min_packet_errors must be >= 1")
        if self.max_trials < 1:
            raise SpecError(f"{self.name}: max_trials must be >= 1")
        key = self.channel.lower().replace("-", "_")
        if key not in ("awgn", "flat", "flat_rayleigh", "rayleigh", "nlos", "los"):
            raise SpecError(f"{self.name}: unknown channel {self.channel!r}")
        object.__setattr__(self, "snr_grid_db", grid)

    def build_simulator(self) -> LinkSimulator:
        if self.mcs_index is not None:
            fmt = mcs_format(
                MCS_TABLE[self.mcs_index],
                numerology=derive_numerology(self.mu, self.beta),
                n_tx=self.n_tx,
            )
        else:
            fmt = preset_format(self.format_name, n_tx=self.n_tx)
        return LinkSimulator(
            fmt,
            channel_kind=self.channel,
            csi=self.csi,
            n_rx=self.n_rx,
            carrier_hz=self.carrier_hz,
            velocity_mps=self.velocity_mps,
            harq_max_retx=self.harq_max_retx,
            uncoded=self.uncoded,
            design_snr_db=self.design_snr_db,
            max_iterations=self.max_iterations,
        )


@dataclass
class PointRecord:
    snr_db: float
    trials: int = 0
    packet_errors: int = 0
    bit_errors: int = 0
    bits_total: int = 0
    harq_tx_histogram: dict[int, int] = field(default_factory=dict)

    @property
    def per(self) -> float:
        return self.packet_errors / self.trials if self.trials else 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits_total if self.bits_total else 0.0

    @property
    def per_ci95(self) -> tuple[float, float]:
        return wilson_interval(self.packet_errors, self.trials)

    @property
    def harq_mean_tx(self) -> float:
        total = sum(self.harq_tx_histogram.values())
        if not total:
            return 0.0
        return sum(k * v for k, v in self.harq_tx_histogram.items()) / total

    def merge_trial(self, t: TrialResult) -> None:
        self.trials += 1
        self.packet_errors += 0 if t.success else 1
        self.bit_errors += t.bit_errors
        self.bits_total += t.bits_total
        self.harq_tx_histogram[t.n_transmissions] = (
            self.harq_tx_histogram.get(t.n_transmissions, 0) + 1
        )


@dataclass
class SweepResult:
    spec: ExperimentSpec
    points: list[PointRecord]


def wilson_interval(k: int, n: int, z: float = 1.959963984540054) -> tuple[float, float]:
    """95% Wilson score interval for a binomial proportion."""
    if n == 0:
        return (0.0, 1.0)
    p = k / n
    z2 = z * z
    denom = 1 + z2 / n
    center = p + z2 / (2 * n)
    half = z * np.sqrt(p * (1 - p) / n + z2 / (4 * n * n))
    return (max(0.0, (center - half) / denom), min(1.0, (center + half) / denom))


_WORKER_SIM = None


def _init_worker(spec: ExperimentSpec) -> None:
    global _WORKER_SIM
    _WORKER_SIM = spec.build_simulator()


def _worker_batch(args) -> list[tuple[bool, int, int, int]]:
    snr_db, seed, point_index, start, stop = args
    out = []
    for i in range(start, stop):
        t = _WORKER_SIM.run_trial(snr_db, seed, point_index, i)
        out.append((t.success, t.n_transmissions, t.bit_errors, t.bits_total))
    return out


class SweepEngine:
    """Runs the trial loop for one experiment, optionally in parallel."""

    def __init__(self, spec: ExperimentSpec, workers: int = 1):
        self.spec = spec
        self.workers = max(1, workers)
        self.sim = spec.build_simulator()
        self._pool = None

    def __enter__(self):
        if self.workers > 1:
            self._pool = ProcessPoolExecutor(
                max_workers=self.workers, initializer=_init_worker, initargs=(self.spec,)
            )
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def _run_range(self, snr_db, point_index, start, stop):
        out = []
        for i in range(start, stop):
            t = self.sim.run_trial(snr_db, self.spec.master_seed, point_index, i)
            out.append((t.success, t.n_transmissions, t.bit_errors, t.bits_total))
        return out

    def run_point(self, snr_db: float, point_index: int) -> PointRecord:
        spec = self.spec
        record = PointRecord(snr_db=snr_db)
        while (
            record.packet_errors < spec.min_packet_errors
            and record.trials < spec.max_trials
        ):
            start = record.trials
            stop = min(start + TRIAL_BATCH, spec.max_trials)
            if self._pool is None:
                results = self._run_range(snr_db, point_index, start, stop)
            else:
                edges = np.linspace(start, stop, self.workers + 1).astype(int)
                chunks = [
                    (snr_db, spec.master_seed, point_index, a, b)
                    for a, b in zip(edges[:-1], edges[1:])
                    if b > a
                ]
                results = []
                for part in self._pool.map(_worker_batch, chunks):
                    results.extend(part)
            for success, n_tx, bit_err, bits in results:
                record.merge_trial(TrialResult(success, n_tx, bit_err, bits))
            log.info(
                "point=%g trials=%d errors=%d", snr_db, record.trials, record.packet_errors
            )
        return record

    def run_sweep(self, early_stop_per: float | None = None) -> SweepResult:
        points = []
        below = 0
        for idx, snr in enumerate(self.spec.snr_grid_db):
            rec = self.run_point(snr, idx)
            points.append(rec)
            if early_stop_per is not None:
                below = below + 1 if rec.per < early_stop_per else 0
                if below >= 2:
                    break
        return SweepResult(self.spec, points)


def run_sweep(
    spec: ExperimentSpec, workers: int = 1, early_stop_per: float | None = None
) -> SweepResult:
    with SweepEngine(spec, workers) as engine:
        return engine.run_sweep(early_stop_per)


def run_point(spec: ExperimentSpec, snr_db: float, workers: int = 1) -> PointRecord:
    index = spec.snr_grid_db.index(snr_db) if snr_db in spec.snr_grid_db else 0
    with SweepEngine(spec, workers) as engine:
        return engine.run_point(snr_db, index)


# -- persistence ----------------------------------------------------------

CSV_HEADER = "snr_db,trials,packet_errors,per,per_ci_lo,per_ci_hi,ber,harq_mean_tx"


def persist_results(result: SweepResult, out_dir, basename: str | None = None) -> tuple[str, str]:
    """Write <name>.csv plus a JSON sidecar with the spec and counters."""
    base = basename or result.spec.name
    os.makedirs(out_dir, exist_ok=True)
    csv_path = os.path.join(out_dir, f"{base}.csv")
    json_path = os.path.join(out_dir, f"{base}.json")
    try:
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_HEADER.split(","))
            for p in result.points:
                lo, hi = p.per_ci95
                writer.writerow(
                    [
                        repr(p.snr_db),
                        p.trials,
                        p.packet_errors,
                        repr(p.per),
                        repr(lo),
                        repr(hi),
                        repr(p.ber),
                        repr(p.harq_mean_tx),
                    ]
                )
        sidecar = {
            "tool": "dectlink",
            "tool_version": __version__,
            "spec": asdict(result.spec),
            "points": [
                {
                    "snr_db": p.snr_db,
                    "trials": p.trials,
                    "packet_errors": p.packet_errors,
                    "bit_errors": p.bit_errors,
                    "bits_total": p.bits_total,
                    "per": p.per,
                    "per_ci95": list(p.per_ci95),
                    "ber": p.ber,
                    "harq_tx_histogram": {str(k): v for k, v in sorted(p.harq_tx_histogram.items())},
                }
                for p in result.points
            ],
        }
        with open(json_path, "w") as fh:
            json.dump(sidecar, fh, indent=2)
    except OSError as exc:
        raise OSError(f"failed to persist results under {out_dir!r}: {exc}") from exc
    return csv_path, json_path


def load_results(json_path) -> SweepResult:
    """Rebuild a SweepResult from its JSON sidecar."""
    with open(json_path) as fh:
        raw = json.load(fh)
    spec_raw = dict(raw["spec"])
    spec_raw["snr_grid_db"] = tuple(spec_raw["snr_grid_db"])
    spec = ExperimentSpec(**spec_raw)
    points = []
    for p in raw["points"]:
        points.append(
            PointRecord(
                snr_db=p["snr_db"],
                trials=p["trials"],
                packet_errors=p["packet_errors"],
                bit_errors=p["bit_errors"],
                bits_total=p["bits_total"],
                harq_tx_histogram={int(k): v for k, v in p["harq_tx_histogram"].items()},
            )
        )
    return SweepResult(spec, points)


# -- presets ---------------------------------------------------------------

#: SNR grids roughly centered on each MCS waterfall over AWGN.
_AWGN_MCS_GRIDS = {
    0: (-4, -3, -2, -1, 0, 1),
    1: (-1, 0, 1, 2, 3, 4),
    2: (0.5, 1.5, 2.5, 3.5, 4.5),
    3: (1.5, 2.5, 3.5, 4.5, 5.5),
    4: (3.5, 4.5, 5.5, 6.5, 7.5),
    5: (5.5, 6.5, 7.5, 8.5, 9.5),
    6: (9, 10, 11, 12, 13),
    7: (11.5, 12.5, 13.5, 14.5, 15.5),
    8: (15, 16, 17, 18, 19),
    9: (17, 18, 19, 20, 21),
}


def preset_experiments(name: str, master_seed: int = 0, csi: str | None = None) -> list[ExperimentSpec]:
    """Shipped experiment groups mirroring the evaluation scenarios."""
    specs: list[ExperimentSpec] = []
    if name == "fig2-awgn-mcs":
        for idx in range(10):
            specs.append(
                ExperimentSpec(
                    name=f"awgn-mcs{idx}",
                    format_name="mcs",
                    mcs_index=idx,
                    mu=1,
                    beta=1,
                    channel="awgn",
                    csi=csi or "perfect",
                    snr_grid_db=_AWGN_MCS_GRIDS[idx],
                    master_seed=master_seed,
                )
            )
    elif name == "fig3-rayleigh-wiener":
        # velocities follow the use cases: the single-antenna device is a
        # stationary/pedestrian node, the diversity configurations serve
        # the high-reliability case at vehicular speed
        grid = tuple(range(0, 42, 3))
        for n_tx, n_rx, kmh in ((1, 1, 3.0), (2, 2, 30.0), (1, 4, 30.0)):
            for mode in ("perfect", "wiener") if csi is None else (csi,):
                specs.append(
                    ExperimentSpec(
                        name=f"nlos-qpsk-{n_tx}x{n_rx}-{mode}",
                        format_name="Format0",
                        channel="nlos",
                        carrier_hz=4.0e9,
                        velocity_mps=kmh / 3.6,
                        n_tx=n_tx,
                        n_rx=n_rx,
                        csi=mode,
                        uncoded=True,
                        snr_grid_db=grid,
                        master_seed=master_seed,
                    )
                )
    elif name in ("fig4-format0-los", "fig4-format0-nlos"):
        chan = "los" if name.endswith("los") and not name.endswith("nlos") else "nlos"
        grid = tuple(range(-2, 31, 2))
        for n_tx, n_rx, retx in ((1, 1, 0), (2, 2, 0), (2, 2, 1), (2, 2, 2)):
            specs.append(
                ExperimentSpec(
                    name=f"format0-{chan}-{n_tx}x{n_rx}-retx{retx}",
                    format_name="Format0",
                    channel=chan,
                    n_tx=n_tx,
                    n_rx=n_rx,
                    csi=csi or "wiener",
                    harq_max_retx=retx,
                    snr_grid_db=grid,
                    master_seed=master_seed,
                )
            )
    elif name in ("fig5-format1-simo", "fig5-format2-simo"):
        fmt = "Format1" if "format1" in name else "Format2"
        grid = tuple(np.arange(-6.0, 13.0, 1.0))
        for chan in ("nlos", "los"):
            for retx in (0, 1):
                specs.append(
                    ExperimentSpec(
                        name=f"{fmt.lower()}-{chan}-1x4-retx{retx}",
                        format_name=fmt,
                        channel=chan,
                        n_tx=1,
                        n_rx=4,
                        csi=csi or "wiener",
                        harq_max_retx=retx,
                        snr_grid_db=grid,
                        master_seed=master_seed,
                    )
                )
    else:
        raise SpecError(
            f"unknown preset {name!r}; available: fig2-awgn-mcs, fig3-rayleigh-wiener, "
            "fig4-format0-los, fig4-format0-nlos, fig5-format1-simo, fig5-format2-simo"
        )
    return specs


def spec_from_dict(raw: dict) -> ExperimentSpec:
    """Build a spec from a config mapping, with schema errors named."""
    known = {f.name for f in ExperimentSpec.__dataclass_fields__.values()}
    unknown = set(raw) - known
    if unknown:
        raise SpecError(f"unknown config fields: {sorted(unknown)}")
    if "name" not in raw:
        raise SpecError("config needs a 'name' field")
    if "snr_grid_db" not in raw:
        raise SpecError("config needs a 'snr_grid_db' list")
    raw = dict(raw)
    raw["snr_grid_db"] = tuple(raw["snr_grid_db"])
    return ExperimentSpec(**raw)
