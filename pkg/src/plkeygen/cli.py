"""Command-line entry points: synth, keygen, sweep, check."""
from __future__ import annotations

import argparse
import dataclasses
import sys
from typing import Optional

import numpy as np

from .errors import PlkeygenError
from .metrics import key_distance
from .runner import ExperimentConfig, emit_csv, run, single_realization
from .spectral import (
    Termination,
    ctf_forward,
    ctf_reverse,
    normalize_transimpedance,
    reverse_direction,
    transimpedance_observables,
    zin_port1,
    zin_port2,
)
from .topology import PortPair, extract_two_port, save_topology, synthesize


def _load_config(path: Optional[str]) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    return ExperimentConfig.from_file(path)


def _with_overrides(cfg: ExperimentConfig, seed: Optional[int],
                    out: Optional[str]) -> ExperimentConfig:
    updates = {}
    if seed is not None:
        updates["master_seed"] = seed
    if out is not None:
        updates["out_path"] = out
    return dataclasses.replace(cfg, **updates) if updates else cfg


def _cmd_synth(args) -> int:
    cfg = _with_overrides(_load_config(args.config), args.seed, args.out)
    top = synthesize(cfg.master_seed, cfg.topology)
    path = cfg.out_path or "topology.json"
    save_topology(top, path)
    print(f"wrote topology (seed {cfg.master_seed}, {len(top.outlets)} outlets, "
          f"{top.n_junctions} junctions) to {path}")
    return 0


def _cmd_keygen(args) -> int:
    cfg = _with_overrides(_load_config(args.config), args.seed, args.out)
    row = single_realization(cfg, 0, 0)
    key = row.pop("_key_a")
    print(f"method={cfg.method} quantizer={cfg.quantizer} seed={cfg.master_seed}")
    print("alice key:", "".join(str(int(s)) if key.max() < 10 else f"{int(s)},"
                                for s in key))
    for name in ("d_ab", "d_ae", "rho_ab", "rho_ae", "delta_median_db", "key_entropy"):
        print(f"{name} = {row[name]}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _with_overrides(_load_config(args.config), args.seed, args.out)
    table = run(cfg, jobs=args.jobs)
    path = cfg.out_path or "results.csv"
    emit_csv(table, path)
    n_rows = len(table.rows)
    print(f"wrote {n_rows} rows ({len(cfg.sweep_values)} sweep values x "
          f"{cfg.n_realizations} realizations + aggregates) to {path}")
    return 0


def _cmd_check(args) -> int:
    cfg = _with_overrides(_load_config(args.config), args.seed, None)
    grid = cfg.grid
    term = Termination.from_constants(grid, cfg.z_t, cfg.z_l)
    matched = Termination.from_constants(grid, cfg.z_l, cfg.z_l)
    failures = 0
    for seed in range(cfg.master_seed, cfg.master_seed + args.count):
        top = synthesize(seed, cfg.topology)
        pair = PortPair(top.outlets[0], top.outlets[1])
        ch = extract_two_port(top, pair, grid)
        ch_rev = extract_two_port(top, PortPair(pair.port2, pair.port1), grid)
        checks = {}
        checks["reciprocity"] = float(np.max(np.abs(ch.reciprocity_defect()))) <= 1e-9
        rev = reverse_direction(ch_rev)
        rel = np.max([np.max(np.abs(a.values - b.values) / (np.abs(a.values) + 1e-30))
                      for a, b in ((ch.A, rev.A), (ch.B, rev.B), (ch.C, rev.C), (ch.D, rev.D))])
        checks["path_symmetry"] = float(rel) <= 1e-9
        h1m = ctf_forward(ch, matched)
        h2m = ctf_reverse(ch, matched)
        checks["matched_symmetry"] = float(
            np.max(np.abs(h1m.values - h2m.values) / np.abs(h1m.values))) <= 1e-12
        zin = zin_port1(ch, term.z_l)
        checks["passivity"] = float(np.min(zin.values.real)) >= -1e-9
        raw = transimpedance_observables(ch, term)
        z21, z12 = normalize_transimpedance(
            raw[0], raw[1], raw[2], raw[3],
            zin_port1(ch, term.z_l), zin_port2(ch, term.z_l), term)
        checks["normalization_symmetry"] = float(
            np.max(np.abs(z21.values - z12.values) / np.abs(z21.values))) <= 1e-9
        bad = [name for name, ok in checks.items() if not ok]
        if bad:
            failures += 1
            print(f"seed {seed}: FAIL ({', '.join(bad)})")
        else:
            print(f"seed {seed}: ok")
    print(f"{args.count - failures}/{args.count} seeds passed the invariant suite")
    return 1 if failures else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plkeygen",
        description="Reciprocal power-line channel key generation testbed")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", metavar="PATH", default=None,
                       help="JSON experiment configuration")
        p.add_argument("--seed", type=int, default=None, metavar="U64",
                       help="override the master seed")
        p.add_argument("--out", metavar="PATH", default=None,
                       help="override the output path")

    p_synth = sub.add_parser("synth", help="emit a topology file")
    add_common(p_synth)
    p_synth.set_defaults(func=_cmd_synth)

    p_keygen = sub.add_parser("keygen", help="single realization: print keys and distances")
    add_common(p_keygen)
    p_keygen.set_defaults(func=_cmd_keygen)

    p_sweep = sub.add_parser("sweep", help="full ensemble sweep to CSV")
    add_common(p_sweep)
    p_sweep.add_argument("--jobs", type=int, default=1, metavar="N",
                         help="parallel worker processes (rows stay ordered)")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_check = sub.add_parser("check", help="run the invariant suite on a seed range")
    add_common(p_check)
    p_check.add_argument("--count", type=int, default=10, metavar="N",
                         help="number of consecutive seeds to check")
    p_check.set_defaults(func=_cmd_check)
    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PlkeygenError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
