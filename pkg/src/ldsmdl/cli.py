"""Command-line harness: sequence generation, order selection, criterion tables.

Exit codes: 0 success, 2 config error, 3 generation error, 4 fitting
failure, 5 I/O error.  The environment variable LDSMDL_SEED overrides
--seed when set.
"""
from __future__ import annotations

import argparse
import csv
import datetime
import json
import os
import sys

from .criteria import CRITERION_NAMES, normalize_values
from .datagen import (NarmaSpec, RandomLdsConfig, narma_generate,
                      preprocess_center_trim, random_stable_lds)
from .em import EmConfig
from .errors import LdsError
from .model import (LdsParams, ModelOrderBounds, read_sequence_csv, simulate,
                    write_sequence_csv)
from .selection import annihilation_search, grid_search, write_sweep_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_GENERATION = 3
EXIT_FITTING = 4
EXIT_IO = 5


def _now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _write_manifest(path, command: str, config_snapshot: dict, master_seed,
                    outputs: list, started: str) -> None:
    manifest = {
        "command": command,
        "config_snapshot": config_snapshot,
        "master_seed": master_seed,
        "outputs": [str(p) for p in outputs],
        "timestamps": {"started": started, "finished": _now()},
    }
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _seed_override(seed: int) -> int:
    env = os.environ.get("LDSMDL_SEED")
    return int(env) if env is not None else seed


def cmd_simulate(args) -> int:
    started = _now()
    try:
        with open(args.config) as fh:
            cfg = json.load(fh)
        kind = cfg["type"]
        if kind not in ("lds", "narma"):
            raise ValueError(f"unknown generator type {kind!r}")
    except (OSError, ValueError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    seed = _seed_override(int(cfg.get("seed", 0)))
    cfg["seed"] = seed
    try:
        if kind == "lds":
            if "params" in cfg:
                params = LdsParams.from_dict(cfg["params"])
            else:
                params = random_stable_lds(RandomLdsConfig(
                    d=int(cfg["d"]), d_out=int(cfg.get("d_out", 1)),
                    entry_range=tuple(cfg.get("entry_range", (-1.0, 1.0))),
                    iw_dof=cfg.get("iw_dof"), seed=seed))
            data = simulate(params, T=int(cfg["length"]),
                            burn_in=int(cfg.get("burn_in", 0)), seed=seed)
        else:
            data = narma_generate(NarmaSpec(
                order=int(cfg["order"]), length=int(cfg["length"]),
                input_range=tuple(cfg.get("input_range", (0.0, 0.5))), seed=seed))
            if cfg.get("preprocess", False):
                data = preprocess_center_trim(data)
    except (LdsError, KeyError, ValueError) as exc:
        print(f"generation error: {exc}", file=sys.stderr)
        return EXIT_GENERATION
    try:
        write_sequence_csv(data, args.out)
        _write_manifest(args.out + ".manifest.json", "simulate", cfg, seed,
                        [args.out], started)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _selection_snapshot(args, seed: int) -> dict:
    return {
        "input": args.input,
        "dmin": args.dmin, "dmax": args.dmax,
        "mode": getattr(args, "mode", "grid"),
        "criterion": getattr(args, "criterion", "mdl"),
        "restarts": args.restarts, "seed": seed,
        "eps": args.eps, "max_iters": args.max_iters,
        "observable": args.observable,
    }


def _run_selection(args, mode: str, criterion: str):
    seed = _seed_override(args.seed)
    data = read_sequence_csv(args.input)
    bounds = ModelOrderBounds(d_min=args.dmin, d_max=args.dmax)
    config = EmConfig(eps=args.eps, max_iters=args.max_iters,
                      n_restarts=args.restarts, seed=seed)
    if mode == "annihilate":
        trace = annihilation_search(data, bounds, config,
                                    observable_mode=args.observable)
    else:
        trace = grid_search(data, bounds, config, criterion=criterion,
                            observable_mode=args.observable)
    return trace, seed


def cmd_select(args) -> int:
    started = _now()
    try:
        if not 1 <= args.dmin <= args.dmax:
            raise ValueError(f"need 1 <= dmin <= dmax, got {args.dmin}, {args.dmax}")
        trace, seed = _run_selection(args, args.mode, args.criterion)
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LdsError as exc:
        print(f"fitting failure: {exc}", file=sys.stderr)
        return EXIT_FITTING
    try:
        outputs = [args.out]
        with open(args.out, "w") as fh:
            fh.write(trace.to_json())
            fh.write("\n")
        if args.sweep:
            write_sweep_csv(trace, args.sweep)
            outputs.append(args.sweep)
        _write_manifest(args.out + ".manifest.json", "select",
                        _selection_snapshot(args, seed), seed, outputs, started)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    print(trace.chosen_order)
    return EXIT_OK


def cmd_compare(args) -> int:
    started = _now()
    try:
        if not 1 <= args.dmin <= args.dmax:
            raise ValueError(f"need 1 <= dmin <= dmax, got {args.dmin}, {args.dmax}")
        trace, seed = _run_selection(args, "grid", "mdl")
    except (OSError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except LdsError as exc:
        print(f"fitting failure: {exc}", file=sys.stderr)
        return EXIT_FITTING
    rows = sorted((r for r in trace.per_order if r.fit is not None),
                  key=lambda r: r.order)
    try:
        with open(args.out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["criterion", "argmin_order"]
                       + [f"d={r.order}" for r in rows])
            for name in CRITERION_NAMES:
                raw = [r.criterion(name).value for r in rows]
                norm = normalize_values(raw) if len(raw) >= 2 else [0.0] * len(raw)
                argmin = rows[int(min(range(len(raw)), key=raw.__getitem__))].order
                w.writerow([name, argmin]
                           + [f"{nv:.4f} ({rv:.2f})" for nv, rv in zip(norm, raw)])
                print(f"{name}: {argmin}")
        _write_manifest(args.out + ".manifest.json", "compare",
                        _selection_snapshot(args, seed), seed, [args.out], started)
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


def _add_fit_options(p) -> None:
    p.add_argument("--dmin", type=int, required=True)
    p.add_argument("--dmax", type=int, required=True)
    p.add_argument("--restarts", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--max-iters", dest="max_iters", type=int, default=100)
    p.add_argument("--observable", action="store_true",
                   help="delay-embed a scalar sequence and fit with C = I fixed")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldsmdl")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic sequence CSV")
    p.add_argument("--config", required=True, help="generator config JSON")
    p.add_argument("--out", required=True, help="output sequence CSV")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("select", help="run order selection on a sequence CSV")
    p.add_argument("input", help="input sequence CSV")
    p.add_argument("--mode", choices=("annihilate", "grid"), default="grid")
    p.add_argument("--criterion", choices=CRITERION_NAMES, default="mdl")
    _add_fit_options(p)
    p.add_argument("--out", required=True, help="output SelectionTrace JSON")
    p.add_argument("--sweep", default=None, help="optional sweep CSV path")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("compare", help="normalized five-criterion table")
    p.add_argument("input", help="input sequence CSV")
    _add_fit_options(p)
    p.add_argument("--out", required=True, help="output comparison CSV")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
