"""Command-line entry point: ``sigpath <command> ...``.

Exit codes: 0 on success, 1 when a recovery or shortest-path run fails to
fit, 2 on usage errors (bad arguments, unreadable files, shape mismatches).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import replace

import numpy as np

from .identifiability import CSV_HEADER, kappa_bounds, mean_generic_bounds
from .recovery import GRID_HEADER, RecoveryConfig, experiment_grid, minimize, worker_count, write_grid_csv
from .shortest_path import ContinuationConfig, export_path, shortest
from .signatures import (
    core_axis,
    core_generic,
    core_mono,
    sig_of_matrix,
    sig_pl,
)
from .tensor3 import dump_json, load_json, mat_from_json, mat_to_json, tensor_from_json, tensor_to_json


class UsageError(Exception):
    pass


def parse_range(text: str) -> range:
    """'4' or '2..6' (inclusive)."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            r = range(int(lo), int(hi) + 1)
        else:
            r = range(int(text), int(text) + 1)
    except ValueError:
        raise UsageError(f"bad range {text!r}, expected N or LO..HI") from None
    if len(r) == 0:
        raise UsageError(f"empty range {text!r}")
    return r


def load_core(spec: str) -> np.ndarray:
    """axis:m, mono:m, gen:m:M:seed or a Tensor3 JSON file."""
    parts = spec.split(":")
    try:
        if parts[0] == "axis" and len(parts) == 2:
            return core_axis(int(parts[1]))
        if parts[0] == "mono" and len(parts) == 2:
            return core_mono(int(parts[1]))
        if parts[0] == "gen" and len(parts) == 4:
            return core_generic(int(parts[1]), int(parts[2]), int(parts[3]))
    except ValueError as e:
        raise UsageError(f"bad core spec {spec!r}: {e}") from None
    if parts[0] in ("axis", "mono", "gen"):
        raise UsageError(f"bad core spec {spec!r}")
    return tensor_from_json(load_json(spec))


def load_signature(path: str) -> np.ndarray:
    """A Tensor3 file or a signature-triple file (its sig3 is used)."""
    obj = load_json(path)
    if "sig3" in obj:
        obj = obj["sig3"]
    return tensor_from_json(obj)


def load_matrix(path: str) -> np.ndarray:
    """A matrix file, or any JSON object holding one under "X"."""
    obj = load_json(path)
    if "X" in obj:
        obj = obj["X"]
    return mat_from_json(obj)


def write_text(text: str, path: str | None) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def emit_json(obj, path: str | None) -> None:
    if path is None or path == "-":
        json.dump(obj, sys.stdout)
        sys.stdout.write("\n")
    else:
        dump_json(obj, path)


# --- commands -------------------------------------------------------------------

def cmd_gen_core(args) -> int:
    emit_json(tensor_to_json(load_core(args.core)), args.out)
    return 0


def cmd_sig(args) -> int:
    trip = sig_of_matrix(load_core(args.core), load_matrix(args.X))
    emit_json(trip.to_json(), args.out)
    return 0


def cmd_sig_pl(args) -> int:
    emit_json(sig_pl(load_matrix(args.steps)).to_json(), args.out)
    return 0


def _recovery_config(args) -> RecoveryConfig:
    cfg = RecoveryConfig(seed=args.seed, restarts=args.restarts, init_scale=args.init_scale,
                         newton=getattr(args, "newton", False))
    if args.tol is not None:
        cfg = replace(cfg, grad_tol=args.tol)
    return cfg


def cmd_recover(args) -> int:
    C = load_core(args.core)
    S = load_signature(args.signature)
    truth = load_matrix(args.truth) if args.truth else None
    rep = minimize(C, S, _recovery_config(args), X_true=truth)
    emit_json(rep.to_json(), args.out)
    return 1 if rep.classification in ("failure", "illcond_failure") else 0


def _bounds_rows(spec: str, samples: int, seed: int):
    parts = spec.split(":")
    if parts[0] in ("axis", "mono") and len(parts) == 2:
        make = core_axis if parts[0] == "axis" else core_mono
        return [kappa_bounds(make(m)) for m in parse_range(parts[1])]
    if parts[0] == "gen" and len(parts) in (2, 4):
        ms = parse_range(parts[1])
        if len(parts) == 4:
            M, seed = int(parts[2]), int(parts[3])
        else:
            M = None
        try:
            return [mean_generic_bounds(m, samples, seed, M) for m in ms]
        except ValueError as e:
            raise UsageError(str(e)) from None
    return [kappa_bounds(load_core(spec))]


def cmd_bounds(args) -> int:
    reports = _bounds_rows(args.core, args.samples, args.seed)
    if args.json:
        emit_json([r.to_json() for r in reports], args.json)
    if args.out or not args.json:
        rows = [CSV_HEADER] + [r.csv_row() for r in reports]
        if args.out and args.out != "-":
            with open(args.out, "w", newline="") as fh:
                csv.writer(fh).writerows(rows)
        else:
            csv.writer(sys.stdout).writerows(rows)
    return 0


def cmd_experiment(args) -> int:
    cfg = _recovery_config(args)
    workers = args.workers if args.workers is not None else worker_count()
    cells = experiment_grid(args.dict, parse_range(args.m), parse_range(args.d), args.trials, cfg, workers)
    if args.out and args.out != "-":
        write_grid_csv(cells, args.out)
    else:
        w = csv.writer(sys.stdout)
        w.writerow(GRID_HEADER)
        w.writerows(c.row() for c in cells)
    return 0


def cmd_shortest(args) -> int:
    S = load_signature(args.signature)
    cfg = ContinuationConfig(lambda0=args.lambda0, starts=args.starts, seed=args.seed,
                             inner=replace(ContinuationConfig().inner, init_scale=args.init_scale))
    if args.tol is not None:
        cfg = replace(cfg, res_tol=args.tol)
    res = shortest(S, args.steps, cfg)
    emit_json({"X": mat_to_json(res.X), "length": res.length, "residual": res.residual,
               "converged": res.converged, "lambda": res.lam, "stages": res.stages}, args.out)
    if args.svg:
        write_text(export_path(res.X, "svg"), args.svg)
    return 0 if res.converged else 1


def cmd_export_path(args) -> int:
    write_text(export_path(load_matrix(args.X), args.format), args.out)
    return 0


# --- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sigpath", description="Paths from third-order signature tensors.")
    sub = p.add_subparsers(dest="command", required=True)
    core_help = "axis:m, mono:m, gen:m:M:seed or a tensor JSON file"

    def common(sp, tol_help):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=None, help=tol_help)

    sp = sub.add_parser("gen-core", help="write a dictionary core tensor")
    sp.add_argument("--core", required=True, help=core_help)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_gen_core)

    sp = sub.add_parser("sig", help="signature triple of X times a dictionary")
    sp.add_argument("--core", required=True, help=core_help)
    sp.add_argument("--X", required=True, help="matrix JSON file")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sig)

    sp = sub.add_parser("sig-pl", help="signature triple of a piecewise-linear path")
    sp.add_argument("--steps", required=True, help="matrix JSON file, one step per column")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_sig_pl)

    sp = sub.add_parser("recover", help="recover X from a signature tensor")
    sp.add_argument("--core", required=True, help=core_help)
    sp.add_argument("--signature", required=True)
    sp.add_argument("--truth", help="true X, enables classification")
    sp.add_argument("--out")
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--init-scale", type=float, default=1.0)
    sp.add_argument("--newton", action="store_true", help="full Hessian trust-region model")
    common(sp, "gradient-norm stopping tolerance")
    sp.set_defaults(func=cmd_recover)

    sp = sub.add_parser("bounds", help="condition-number bounds of core tensors")
    sp.add_argument("--core", required=True,
                    help="axis:LO..HI, mono:LO..HI, gen:LO..HI (averaged), gen:m:M:seed or a file")
    sp.add_argument("--samples", type=int, default=100, help="generic cores averaged per m")
    sp.add_argument("--out", help="CSV output (default stdout)")
    sp.add_argument("--json", help="JSON output")
    common(sp, "unused; accepted for uniformity")
    sp.set_defaults(func=cmd_bounds)

    sp = sub.add_parser("experiment", help="recovery-rate table")
    sp.add_argument("--dict", required=True, choices=["axis", "mono", "generic"])
    sp.add_argument("--m", required=True, help="LO..HI")
    sp.add_argument("--d", required=True, help="LO..HI")
    sp.add_argument("--trials", type=int, default=20)
    sp.add_argument("--restarts", type=int, default=10)
    sp.add_argument("--init-scale", type=float, default=1.0)
    sp.add_argument("--workers", type=int, default=None, help="default: $SIGPATH_THREADS or CPU count")
    sp.add_argument("--out")
    common(sp, "gradient-norm stopping tolerance")
    sp.set_defaults(func=cmd_experiment)

    sp = sub.add_parser("shortest", help="shortest m-step path with a given signature")
    sp.add_argument("--signature", required=True)
    sp.add_argument("--steps", type=int, required=True)
    sp.add_argument("--starts", type=int, default=4)
    sp.add_argument("--lambda0", type=float, default=1.0)
    sp.add_argument("--init-scale", type=float, default=1.0)
    sp.add_argument("--out")
    sp.add_argument("--svg")
    common(sp, "residual tolerance relative to max(1, ||S||)")
    sp.set_defaults(func=cmd_shortest)

    sp = sub.add_parser("export-path", help="vertex list of a step matrix")
    sp.add_argument("--X", required=True, help="matrix JSON, or a shortest result")
    sp.add_argument("--format", choices=["csv", "json", "svg"], default="csv")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_export_path)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ValueError, OSError, KeyError, json.JSONDecodeError) as e:
        print(f"sigpath {args.command}: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
