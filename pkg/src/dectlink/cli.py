"""Command-line entry point for running sweep experiments.

Examples:
    simulate --preset fig2-awgn-mcs --out results/
    simulate --config experiment.json --out results/ --workers 4
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .harness import (
    SpecError,
    persist_results,
    preset_experiments,
    run_sweep,
    spec_from_dict,
)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="simulate",
        description="Run link-level PER/BER sweeps and write CSV + JSON results.",
    )
    p.add_argument("--config", help="experiment config JSON (single spec or {'experiments': [...]})")
    p.add_argument("--preset", help="named experiment group shipped with the tool")
    p.add_argument("--out", required=True, help="output directory for CSV/JSON results")
    p.add_argument("--workers", type=int, default=1, help="parallel worker processes")
    p.add_argument("--seed", type=int, help="override the master seed of every experiment")
    p.add_argument("--csi", choices=("perfect", "wiener"), help="override channel knowledge")
    p.add_argument(
        "--early-stop-per",
        type=float,
        default=None,
        help="stop a sweep after two consecutive points below this PER",
    )
    return p


def load_specs(args) -> list:
    from dataclasses import replace

    if bool(args.config) == bool(args.preset):
        raise SpecError("exactly one of --config or --preset is required")
    if args.preset:
        specs = preset_experiments(args.preset, csi=args.csi)
    else:
        with open(args.config) as fh:
            raw = json.load(fh)
        entries = raw["experiments"] if isinstance(raw, dict) and "experiments" in raw else [raw]
        specs = [spec_from_dict(e) for e in entries]
        if args.csi:
            specs = [replace(s, csi=args.csi) for s in specs]
    if args.seed is not None:
        specs = [replace(s, master_seed=args.seed) for s in specs]
    return specs


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stdout)
    args = build_parser().parse_args(argv)
    try:
        specs = load_specs(args)
    except (SpecError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        for spec in specs:
            print(f"running {spec.name} ({len(spec.snr_grid_db)} SNR points)")
            result = run_sweep(spec, workers=args.workers, early_stop_per=args.early_stop_per)
            csv_path, _ = persist_results(result, args.out)
            print(f"wrote {csv_path}")
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
