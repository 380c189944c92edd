"""Ensemble orchestration: role assignment, sweeps, CSV emission.

One realization synthesizes a topology, places Alice, Bob and Eve on
distinct outlets, sounds the channels, generates keys for all three parties
with the configured method, and reports distances and correlations.  Every
byte of the output is a deterministic function of (config, master_seed).
"""
from __future__ import annotations

import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import ConfigError, RealizationError, ZeroEnergyError
from .metrics import det_correlation, key_distance
from .quantize import coded_arrange, gray_encode, quantize_levels
from .sounding import NoisySounder, observe
from .spectral import (
    FrequencyGrid,
    Termination,
    asymmetry_metric,
    ctf_forward,
    ctf_reverse,
    zin_port1,
    zin_port2,
)
from .tdst import TdstConfig, tdst_key
from .tmt import SolveOptions, TmtObservation, delta_mismatch, solve_abcd
from .topology import PortPair, TopologyParams, extract_two_port, synthesize

CSV_COLUMNS = (
    "sweep",
    "realization",
    "d_ab",
    "d_ae",
    "rho_ab",
    "rho_ae",
    "delta_median_db",
    "key_entropy",
    "asym",
    "d_ratio",
)

#: realization index used for the per-sweep-value aggregate row
AGGREGATE_ROW = -1

_METHODS = ("tdst", "tmt")
_QUANTIZERS = ("binary-gray", "coded")
_SWEEPABLE = ("none", "m", "n_blocks", "pad_factor", "nbits", "z_t", "snr")


@dataclass(frozen=True)
class ExperimentConfig:
    grid: FrequencyGrid = field(default_factory=lambda: FrequencyGrid(0.1e6, (80e6 - 0.1e6) / 1023, 1024))
    topology: TopologyParams = field(default_factory=TopologyParams)
    snr_h_db: float = 30.0
    snr_z_db: float = 30.0
    n_avg: int = 10
    z_t: float = 1.0
    z_l: float = 10_000.0
    method: str = "tdst"
    quantizer: str = "binary-gray"
    tdst: TdstConfig = field(default_factory=TdstConfig)
    nbits: int = 8
    root_rule: str = "passivity"
    full_scale: float = 30.0
    sweep_variable: str = "none"
    sweep_values: tuple[float, ...] = (0.0,)
    n_realizations: int = 1
    master_seed: int = 0
    out_path: Optional[str] = None

    def __post_init__(self):
        if self.method not in _METHODS:
            raise ConfigError(f"method must be one of {_METHODS}, got {self.method!r}")
        if self.quantizer not in _QUANTIZERS:
            raise ConfigError(f"quantizer must be one of {_QUANTIZERS}")
        if self.sweep_variable not in _SWEEPABLE:
            raise ConfigError(f"sweep variable must be one of {_SWEEPABLE}")
        if not self.sweep_values:
            raise ConfigError("sweep value list must not be empty")
        if self.n_realizations < 1:
            raise ConfigError("n_realizations must be >= 1")
        if not 1 <= self.nbits <= 16:
            raise ConfigError("nbits must lie in [1, 16]")

    # -- config file handling ------------------------------------------------

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        data = dict(data)
        kwargs = {}
        if "grid" in data:
            kwargs["grid"] = FrequencyGrid(**data.pop("grid"))
        if "topology" in data:
            topo = dict(data.pop("topology"))
            for key in ("length_range", "z0_range", "attenuation_range",
                        "load_family", "resistive_range"):
                if key in topo:
                    topo[key] = tuple(topo[key])
            kwargs["topology"] = TopologyParams(**topo)
        if "tdst" in data:
            tdst_raw = dict(data.pop("tdst"))
            kwargs["tdst"] = TdstConfig(**tdst_raw)
        if "sweep" in data:
            sweep = data.pop("sweep")
            kwargs["sweep_variable"] = sweep["variable"]
            kwargs["sweep_values"] = tuple(sweep["values"])
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        kwargs.update(data)
        try:
            return cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_file(cls, path: str) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(data)

    def to_flat_dict(self) -> dict:
        flat = {
            "grid.f_start": self.grid.f_start,
            "grid.f_step": self.grid.f_step,
            "grid.n_bins": self.grid.n_bins,
            "snr_h_db": self.snr_h_db,
            "snr_z_db": self.snr_z_db,
            "n_avg": self.n_avg,
            "z_t": self.z_t,
            "z_l": self.z_l,
            "method": self.method,
            "quantizer": self.quantizer,
            "nbits": self.nbits,
            "root_rule": self.root_rule,
            "full_scale": self.full_scale,
            "sweep_variable": self.sweep_variable,
            "sweep_values": list(self.sweep_values),
            "n_realizations": self.n_realizations,
            "master_seed": self.master_seed,
        }
        for key, value in dataclasses.asdict(self.topology).items():
            flat[f"topology.{key}"] = list(value) if isinstance(value, tuple) else value
        for key, value in dataclasses.asdict(self.tdst).items():
            flat[f"tdst.{key}"] = value
        return flat


@dataclass(frozen=True)
class _Effective:
    """Per-sweep-point view of the configuration."""

    tdst: TdstConfig
    nbits: int
    z_t: float
    snr_h_db: float
    snr_z_db: float


def _apply_sweep(cfg: ExperimentConfig, value: float) -> _Effective:
    tdst_cfg = cfg.tdst
    nbits = cfg.nbits
    z_t = cfg.z_t
    snr_h, snr_z = cfg.snr_h_db, cfg.snr_z_db
    var = cfg.sweep_variable
    if var == "m":
        tdst_cfg = dataclasses.replace(tdst_cfg, m=int(value))
    elif var == "n_blocks":
        tdst_cfg = dataclasses.replace(tdst_cfg, n_blocks=int(value))
    elif var == "pad_factor":
        tdst_cfg = dataclasses.replace(tdst_cfg, pad_factor=int(value))
    elif var == "nbits":
        nbits = int(value)
    elif var == "z_t":
        z_t = float(value)
    elif var == "snr":
        snr_h = snr_z = float(value)
    return _Effective(tdst=tdst_cfg, nbits=nbits, z_t=z_t,
                      snr_h_db=snr_h, snr_z_db=snr_z)


def _within_key_entropy(symbols: np.ndarray) -> float:
    _, counts = np.unique(symbols, return_counts=True)
    p = counts / symbols.size
    return float(-(p * np.log2(p)).sum())


def _safe_rho(ka, kb) -> float:
    try:
        return abs(det_correlation(ka, kb))
    except ZeroEnergyError:
        return math.nan


def _ratio(d_ae: float, d_ab: float) -> float:
    if d_ab > 0:
        return d_ae / d_ab
    return math.inf if d_ae > 0 else math.nan


def single_realization(cfg: ExperimentConfig, sweep_idx: int,
                       realization: int) -> dict:
    """Run one seeded realization; returns one result row.

    The row holds the raw distances/correlations plus (internal, underscore
    prefixed) per-party key material used for ensemble aggregation.
    """
    value = cfg.sweep_values[sweep_idx]
    eff = _apply_sweep(cfg, value)
    seeds = np.random.SeedSequence(
        cfg.master_seed, spawn_key=(sweep_idx, realization)
    ).generate_state(3, np.uint64)
    topo_seed, role_seed, sounder_seed = (int(s) for s in seeds)

    top = synthesize(topo_seed, cfg.topology)
    roles = np.random.default_rng(role_seed).choice(
        np.array(top.outlets), size=3, replace=False)
    alice, bob, eve = (int(r) for r in roles)

    grid = cfg.grid
    term = Termination.from_constants(grid, eff.z_t, cfg.z_l)
    ch_ab = extract_two_port(top, PortPair(alice, bob), grid, overrides={eve: cfg.z_l})
    ch_be = extract_two_port(top, PortPair(bob, eve), grid, overrides={alice: cfg.z_l})

    h1 = ctf_forward(ch_ab, term)       # Alice -> Bob, estimated at Bob
    h2 = ctf_reverse(ch_ab, term)       # Bob -> Alice, estimated at Alice
    h_be = ctf_forward(ch_be, term)     # Bob -> Eve, overheard by Eve
    asym = asymmetry_metric(h1, h2)

    sounder = NoisySounder(snr_h_db=eff.snr_h_db, snr_z_db=eff.snr_z_db,
                           n_avg=cfg.n_avg, seed=sounder_seed)
    delta_median_db = math.nan

    if cfg.method == "tdst":
        key_a = tdst_key(observe(h2, sounder, stream=1), eff.tdst)
        key_b = tdst_key(observe(h1, sounder, stream=0), eff.tdst)
        key_e = tdst_key(observe(h_be, sounder, stream=2), eff.tdst)
        arr_a, arr_b, arr_e = key_a.bits, key_b.bits, key_e.bits
    else:
        zin1 = zin_port1(ch_ab, term.z_l)
        zin2 = zin_port2(ch_ab, term.z_l)
        obs = TmtObservation(
            h1_hat=observe(h1, sounder, stream=0),
            zin1_hat=observe(zin1, sounder, snr_db=eff.snr_z_db, stream=3),
            zin2_hat=observe(zin2, sounder, snr_db=eff.snr_z_db, stream=4),
            term=term,
        )
        sol = solve_abcd(obs, SolveOptions(root_rule=cfg.root_rule))
        h2_alice = observe(h2, sounder, stream=1)
        h_be_hat = observe(h_be, sounder, stream=2)
        joint_mask = sol.valid
        if not joint_mask.any():
            raise RealizationError(
                f"sweep {value}, realization {realization}: no valid bins from solver")
        delta = delta_mismatch(h2_alice, sol.h2_hat)[joint_mask]
        med = float(np.nanmedian(delta))
        delta_median_db = 20.0 * math.log10(med) if med > 0 else -math.inf
        q_a = quantize_levels(h2_alice, eff.nbits, joint_mask)
        q_b = quantize_levels(sol.h2_hat, eff.nbits, joint_mask)
        q_e = quantize_levels(h_be_hat, eff.nbits, joint_mask)
        if cfg.quantizer == "binary-gray":
            arr_a = gray_encode(q_a).bits
            arr_b = gray_encode(q_b).bits
            arr_e = gray_encode(q_e).bits
        else:
            arr_a = coded_arrange(q_a, q_a.lsb_value, cfg.full_scale).symbols
            arr_b = coded_arrange(q_b, q_b.lsb_value, cfg.full_scale).symbols
            arr_e = coded_arrange(q_e, q_e.lsb_value, cfg.full_scale).symbols

    d_ab = key_distance(arr_a, arr_b)
    d_ae = key_distance(arr_a, arr_e)
    return {
        "sweep": value,
        "realization": realization,
        "d_ab": d_ab,
        "d_ae": d_ae,
        "rho_ab": _safe_rho(arr_a, arr_b),
        "rho_ae": _safe_rho(arr_a, arr_e),
        "delta_median_db": delta_median_db,
        "key_entropy": _within_key_entropy(arr_a),
        "asym": asym,
        "d_ratio": _ratio(d_ae, d_ab),
        "_key_a": np.asarray(arr_a, dtype=np.int64),
    }


def _job(payload) -> tuple[int, int, dict]:
    cfg_dict, sweep_idx, realization = payload
    cfg = ExperimentConfig.from_dict(cfg_dict)
    return sweep_idx, realization, single_realization(cfg, sweep_idx, realization)


def _config_payload(cfg: ExperimentConfig) -> dict:
    return {
        "grid": {"f_start": cfg.grid.f_start, "f_step": cfg.grid.f_step,
                 "n_bins": cfg.grid.n_bins},
        "topology": dataclasses.asdict(cfg.topology),
        "tdst": dataclasses.asdict(cfg.tdst),
        "sweep": {"variable": cfg.sweep_variable, "values": list(cfg.sweep_values)},
        "snr_h_db": cfg.snr_h_db,
        "snr_z_db": cfg.snr_z_db,
        "n_avg": cfg.n_avg,
        "z_t": cfg.z_t,
        "z_l": cfg.z_l,
        "method": cfg.method,
        "quantizer": cfg.quantizer,
        "nbits": cfg.nbits,
        "root_rule": cfg.root_rule,
        "full_scale": cfg.full_scale,
        "n_realizations": cfg.n_realizations,
        "master_seed": cfg.master_seed,
        "out_path": cfg.out_path,
    }


@dataclass
class ResultTable:
    columns: tuple[str, ...]
    rows: list[dict]
    meta: dict


def run(cfg: ExperimentConfig, jobs: int = 1) -> ResultTable:
    """Execute the full sweep; rows come out in (sweep, realization) order
    with one aggregate row (realization = -1) closing each sweep value."""
    tasks = [(si, r) for si in range(len(cfg.sweep_values))
             for r in range(cfg.n_realizations)]
    results: dict[tuple[int, int], dict] = {}
    if jobs > 1:
        payload = _config_payload(cfg)
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            for si, r, row in pool.map(_job, [(payload, si, r) for si, r in tasks]):
                results[(si, r)] = row
    else:
        for si, r in tasks:
            try:
                results[(si, r)] = single_realization(cfg, si, r)
            except RealizationError:
                raise
            except Exception as exc:
                raise RealizationError(
                    f"sweep value {cfg.sweep_values[si]}, realization {r}: {exc}"
                ) from exc

    rows: list[dict] = []
    for si, value in enumerate(cfg.sweep_values):
        block = [results[(si, r)] for r in range(cfg.n_realizations)]
        rows.extend(block)
        rows.append(_aggregate(value, block))
    for row in rows:
        row.pop("_key_a", None)
    return ResultTable(columns=CSV_COLUMNS, rows=rows, meta=cfg.to_flat_dict())


def _aggregate(value: float, block: list[dict]) -> dict:
    d_ab = float(np.mean([r["d_ab"] for r in block]))
    d_ae = float(np.mean([r["d_ae"] for r in block]))
    keys = [r["_key_a"] for r in block]
    lengths = {len(k) for k in keys}
    if len(lengths) == 1:
        from .metrics import key_entropy

        entropy = key_entropy(keys)
    else:  # ragged masks (tmt): fall back to the mean of per-key entropies
        entropy = float(np.mean([r["key_entropy"] for r in block]))
    with np.errstate(all="ignore"):
        delta_meds = np.array([r["delta_median_db"] for r in block], dtype=float)
    return {
        "sweep": value,
        "realization": AGGREGATE_ROW,
        "d_ab": d_ab,
        "d_ae": d_ae,
        "rho_ab": float(np.nanmean([r["rho_ab"] for r in block])),
        "rho_ae": float(np.nanmean([r["rho_ae"] for r in block])),
        "delta_median_db": float(np.nanmedian(delta_meds)) if np.any(np.isfinite(delta_meds)) else math.nan,
        "key_entropy": entropy,
        "asym": float(np.median([r["asym"] for r in block])),
        "d_ratio": _ratio(d_ae, d_ab),
    }


# ---------------------------------------------------------------------------
# CSV emission
# ---------------------------------------------------------------------------

def _format_cell(value) -> str:
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    return repr(v)


def emit_csv(table: ResultTable, path: str) -> None:
    """Write UTF-8, LF-terminated CSV; floats keep full round-trip precision.

    The configuration is echoed as leading ``#`` comment lines so any result
    file documents the run that produced it.
    """
    lines = []
    for key in sorted(table.meta):
        lines.append(f"# {key} = {json.dumps(table.meta[key])}")
    lines.append(",".join(table.columns))
    for row in table.rows:
        lines.append(",".join(_format_cell(row[col]) for col in table.columns))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_csv(path: str) -> tuple[list[str], list[dict]]:
    """Read back an emitted CSV: (columns, rows with float/int cells)."""
    with open(path, "r", encoding="utf-8") as fh:
        content = [ln for ln in fh.read().splitlines() if not ln.startswith("#")]
    columns = content[0].split(",")
    rows = []
    for line in content[1:]:
        cells = line.split(",")
        row = {}
        for col, cell in zip(columns, cells):
            row[col] = int(cell) if col == "realization" else float(cell)
        rows.append(row)
    return columns, rows
