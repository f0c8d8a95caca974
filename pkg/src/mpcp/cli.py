"""Command line front end: complete, ablate, metrics, sample-mask, synth.

Exit codes are 0 on success, 1 on numeric failure and 2 on usage or input
errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .io import (
    TensorFileError,
    read_mask,
    read_tensor,
    sample_mask,
    synth_lowrank,
    write_mask,
    write_pgm,
    write_tensor,
)
from .metrics import PEAK, as_slices, ergas, tensor_psnr, tensor_ssim
from .penalty import TAU_CONVENTIONS, PenaltySpec, ProxConvergenceError
from .solver import ObservationMask, SolverConfig, SolverDivergenceError, solve
from .tensor import SliceSvdError

__all__ = ["main", "REPORT_SCHEMA", "metric_report", "log_columns"]

log = logging.getLogger("mpcp")

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2

SCHEMA_ID = "mpcp-run-report/1"

# JSON Schema (draft 2020-12) of the report written by ``complete``
_NUM = {"oneOf": [{"type": "number"}, {"enum": ["inf", "-inf", "nan"]}]}
REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$id": SCHEMA_ID,
    "type": "object",
    "additionalProperties": False,
    "required": [
        "schema", "version", "command", "config", "input", "mask", "output", "log",
        "iterations", "stop_reason", "rho_capped", "metrics", "wall_time", "seed",
    ],
    "properties": {
        "schema": {"const": SCHEMA_ID},
        "version": {"type": "string"},
        "command": {"const": "complete"},
        "config": {
            "type": "object",
            "required": [
                "penalty", "p", "tau", "tau_p", "tau_convention", "mode_pairs", "beta",
                "rho0", "mu", "eps", "max_iter", "prox_weight", "threads",
            ],
            "properties": {
                "penalty": {"enum": ["mpcp", "mcp", "tnn"]},
                "p": {"type": "number"},
                "tau": _NUM,
                "tau_p": {"type": ["number", "null"]},
                "tau_convention": {"enum": list(TAU_CONVENTIONS)},
                "mode_pairs": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "beta": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "rho0": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                "mu": {"type": "number", "exclusiveMinimum": 1},
                "eps": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "prox_weight": {"enum": ["consistent", "paper"]},
                "threads": {"type": "integer", "minimum": 1},
            },
        },
        "input": {"type": "string"},
        "mask": {"type": "string"},
        "output": {"type": "string"},
        "log": {"type": "string"},
        "iterations": {"type": "integer", "minimum": 1},
        "stop_reason": {"enum": ["converged", "max_iter"]},
        "rho_capped": {"type": "boolean"},
        "metrics": {
            "oneOf": [
                {"type": "null"},
                {
                    "type": "object",
                    "required": ["psnr", "ssim", "ergas"],
                    "additionalProperties": False,
                    "properties": {"psnr": _NUM, "ssim": _NUM, "ergas": _NUM},
                },
            ]
        },
        "wall_time": {"type": "number", "minimum": 0},
        "seed": {"type": ["integer", "null"]},
    },
}


class UsageError(Exception):
    pass


def _json_float(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return x


def metric_report(ref, test, unit_range=False):
    """PSNR/SSIM/ERGAS of ``test`` against ``ref`` as JSON-ready values."""
    if unit_range:
        ref, test = np.asarray(ref) * PEAK, np.asarray(test) * PEAK
    try:
        e = ergas(ref, test)
    except ZeroDivisionError:
        e = math.nan
    return {
        "psnr": _json_float(tensor_psnr(ref, test)),
        "ssim": _json_float(tensor_ssim(ref, test)),
        "ergas": _json_float(e),
    }


def log_columns(pairs):
    cols = ["iter", "rel_change"]
    for q in pairs:
        cols += [f"primal_residual_q{q}", f"multiplier_norm_q{q}"]
    return cols


def write_log(history, pairs, path):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(log_columns(pairs))
        for e in history:
            row = [e.iter, repr(e.rel_change)]
            for r, m in zip(e.primal_residuals, e.multiplier_norms):
                row += [repr(r), repr(m)]
            w.writerow(row)


# -- argument helpers ---------------------------------------------------------


def _csv(kind):
    def parse(text):
        try:
            vals = [kind(v) for v in text.split(",") if v.strip()]
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
        if not vals:
            raise argparse.ArgumentTypeError("empty list")
        return vals

    return parse


def _export(text):
    idx, sep, path = text.partition("=")
    if not sep or not path:
        raise argparse.ArgumentTypeError(f"expected INDEX=PATH, got {text!r}")
    try:
        return int(idx), path
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad slice index {idx!r}") from None


def _add_solver_args(p, ablate=False):
    if not ablate:
        p.add_argument("--penalty", choices=("mpcp", "mcp", "tnn"), default="mpcp")
        p.add_argument("--p", type=float, default=0.1, help="MPCP order p in (0, 1)")
        p.add_argument("--tau-p", type=float, default=100.0, help="penalty scale given as tau^p")
    p.add_argument(
        "--tau-convention",
        choices=TAU_CONVENTIONS,
        default="threshold",
        help="threshold: penalty flat beyond |x| = tau^p; power: tau = (tau^p)^(1/p)",
    )
    p.add_argument("--beta", type=_csv(float), help="mode-pair weights, summing to 1")
    p.add_argument("--mode-pairs", type=_csv(int), help="1-based mode-pair indices q (default all)")
    p.add_argument("--rho0", type=float, default=1e-3)
    p.add_argument("--mu", type=float, default=1.05)
    p.add_argument("--eps", type=float, default=1e-4)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--prox-weight", choices=("consistent", "paper"), default="consistent")


def build_parser():
    parser = argparse.ArgumentParser(prog="mpcp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("complete", help="complete a tensor from its observed entries")
    c.add_argument("--input", required=True)
    c.add_argument("--mask", required=True)
    c.add_argument("--output", required=True)
    c.add_argument("--log", required=True, help="CSV iteration log")
    c.add_argument("--report", help="JSON run report (default: OUTPUT with .json suffix)")
    c.add_argument("--ref", help="ground truth for the final metrics")
    c.add_argument("--unit-range", action="store_true", help="data in [0,1]; metrics scale by 255")
    c.add_argument("--export-slice", type=_export, action="append", default=[], metavar="INDEX=PATH.pgm")
    _add_solver_args(c)

    a = sub.add_parser("ablate", help="penalty and parameter sweeps")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="observed tensor")
    src.add_argument("--synth", type=_csv(int), metavar="N1,N2,N3,R", help="synthetic instance per seed")
    a.add_argument("--ref", help="ground truth (default: the input)")
    obs = a.add_mutually_exclusive_group(required=True)
    obs.add_argument("--mask")
    obs.add_argument("--sr", type=float, help="sample a mask per seed at this rate")
    a.add_argument("--penalties", type=_csv(str), default=["mpcp", "mcp", "tnn"])
    a.add_argument("--p-grid", type=_csv(float), default=[0.1])
    a.add_argument("--tau-p-grid", type=_csv(float), default=[100.0])
    a.add_argument("--seeds", type=_csv(int), default=[0])
    a.add_argument("--out", required=True)
    a.add_argument("--unit-range", action="store_true")
    _add_solver_args(a, ablate=True)

    m = sub.add_parser("metrics", help="PSNR, SSIM and ERGAS as JSON")
    m.add_argument("--ref", required=True)
    m.add_argument("--test", required=True)
    m.add_argument("--unit-range", action="store_true")

    s = sub.add_parser("sample-mask", help="uniform random mask file")
    s.add_argument("--shape", type=_csv(int), required=True)
    s.add_argument("--sr", type=float, required=True)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--output", required=True)

    y = sub.add_parser("synth", help="synthetic low-tubal-rank tensor file")
    y.add_argument("--shape", type=_csv(int), required=True)
    y.add_argument("--rank", type=int, required=True)
    y.add_argument("--seed", type=int, required=True)
    y.add_argument("--output", required=True)
    return parser


def _penalty(kind, p, tau_p, convention):
    if kind == "tnn":
        return PenaltySpec.tnn()
    if kind == "mcp":
        return PenaltySpec.from_tau_p("mcp", 1.0, tau_p)
    if kind == "mpcp":
        return PenaltySpec.from_tau_p("mpcp", p, tau_p, convention)
    raise UsageError(f"unknown penalty {kind!r}")


def _config(args, penalty):
    if args.threads < 1:
        raise UsageError("--threads must be at least 1")
    cfg = SolverConfig(
        penalty=penalty,
        beta=args.beta,
        rho0=args.rho0,
        mu=args.mu,
        eps=args.eps,
        max_iter=args.max_iter,
        mode_pairs=args.mode_pairs,
        prox_weight=args.prox_weight,
        threads=args.threads,
    )
    return cfg


def _stop_reason(history, config):
    if len(history) < config.max_iter or history[-1].rel_change <= config.eps:
        return "converged"
    return "max_iter"


def _config_echo(args, penalty, pairs, beta, rho0):
    return {
        "penalty": penalty.kind.value,
        "p": penalty.p,
        "tau": _json_float(penalty.tau),
        "tau_p": getattr(args, "tau_p", None),
        "tau_convention": args.tau_convention,
        "mode_pairs": list(pairs),
        "beta": [float(b) for b in beta],
        "rho0": [float(r) for r in rho0],
        "mu": args.mu,
        "eps": args.eps,
        "max_iter": args.max_iter,
        "prox_weight": args.prox_weight,
        "threads": args.threads,
    }


def _load_pair(data_path, mask_path):
    O = read_tensor(data_path)
    mask = read_mask(mask_path)
    if mask.shape != O.shape:
        raise UsageError(f"mask shape {mask.shape} differs from data shape {O.shape}")
    return O, mask


def cli_complete(args):
    penalty = _penalty(args.penalty, args.p, args.tau_p, args.tau_convention)
    config = _config(args, penalty)
    O, mask = _load_pair(args.input, args.mask)
    ref = read_tensor(args.ref) if args.ref else None
    if ref is not None and ref.shape != O.shape:
        raise UsageError(f"reference shape {ref.shape} differs from data shape {O.shape}")
    pairs, beta, rho0 = config.resolve(O.ndim)
    n_slices = as_slices(O).shape[2]
    for idx, _ in args.export_slice:
        if not 0 <= idx < n_slices:
            raise UsageError(f"slice index {idx} outside 0..{n_slices - 1}")
    t0 = time.perf_counter()
    B, history = solve(O, mask, config)
    wall = time.perf_counter() - t0
    write_tensor(B, args.output)
    write_log(history, pairs, args.log)
    for idx, path in args.export_slice:
        write_pgm(as_slices(B)[:, :, idx], path)
    report = {
        "schema": SCHEMA_ID,
        "version": __version__,
        "command": "complete",
        "config": _config_echo(args, penalty, pairs, beta, rho0),
        "input": str(args.input),
        "mask": str(args.mask),
        "output": str(args.output),
        "log": str(args.log),
        "iterations": len(history),
        "stop_reason": _stop_reason(history, config),
        "rho_capped": any(e.rho_capped for e in history),
        "metrics": metric_report(ref, B, args.unit_range) if ref is not None else None,
        "wall_time": float(wall),
        "seed": None,
    }
    report_path = args.report or str(Path(args.output).with_suffix(".json"))
    Path(report_path).write_text(json.dumps(report, indent=2) + "\n")
    log.info("%s after %d iterations", report["stop_reason"], len(history))
    return EXIT_OK


ABLATE_COLUMNS = ["penalty", "p", "tau_p", "seed", "sr", "iterations", "psnr", "ssim", "ergas", "rel_error"]


def ablation_specs(penalties, p_grid, tau_p_grid, convention):
    """Expand a grid into ``(name, p, tau_p, spec)``; MCP ignores ``p`` and TNN both."""
    out = []
    for kind in penalties:
        if kind == "tnn":
            out.append(("tnn", "", "", PenaltySpec.tnn()))
        elif kind == "mcp":
            out += [("mcp", 1.0, t, _penalty("mcp", 1.0, t, convention)) for t in tau_p_grid]
        elif kind == "mpcp":
            out += [("mpcp", p, t, _penalty("mpcp", p, t, convention)) for p in p_grid for t in tau_p_grid]
        else:
            raise UsageError(f"unknown penalty {kind!r}")
    return out


def cli_ablate(args):
    specs = ablation_specs(args.penalties, args.p_grid, args.tau_p_grid, args.tau_convention)
    if args.mask and len(args.seeds) > 1 and args.input:
        raise UsageError("a fixed --input with a fixed --mask admits a single seed")
    if args.synth and len(args.synth) != 4:
        raise UsageError("--synth takes N1,N2,N3,R")
    base = read_tensor(args.input) if args.input else None
    fixed_mask = read_mask(args.mask) if args.mask else None
    rows = []
    for seed in args.seeds:
        O = base if base is not None else synth_lowrank(args.synth[:3], args.synth[3], seed)
        ref = read_tensor(args.ref) if args.ref else O
        mask = fixed_mask if fixed_mask is not None else sample_mask(O.shape, args.sr, seed)
        if mask.shape != O.shape or ref.shape != O.shape:
            raise UsageError("input, mask and reference shapes differ")
        for name, p, tau_p, spec in specs:
            B, history = solve(O, mask, _config(args, spec))
            met = metric_report(ref, B, args.unit_range)
            rel = float(np.linalg.norm(B - ref) / np.linalg.norm(ref))
            rows.append([name, p, tau_p, seed, mask.sr(), len(history), met["psnr"], met["ssim"], met["ergas"], rel])
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(ABLATE_COLUMNS)
        w.writerows([[repr(v) if isinstance(v, float) else v for v in r] for r in rows])
    return EXIT_OK


def cli_metrics(args):
    ref, test = read_tensor(args.ref), read_tensor(args.test)
    if ref.shape != test.shape:
        raise UsageError(f"shape mismatch: {ref.shape} vs {test.shape}")
    print(json.dumps(metric_report(ref, test, args.unit_range)))
    return EXIT_OK


def cli_sample_mask(args):
    write_mask(sample_mask(args.shape, args.sr, args.seed), args.output)
    return EXIT_OK


def cli_synth(args):
    if len(args.shape) != 3:
        raise UsageError("--shape takes N1,N2,N3")
    write_tensor(synth_lowrank(args.shape, args.rank, args.seed), args.output)
    return EXIT_OK


COMMANDS = {
    "complete": cli_complete,
    "ablate": cli_ablate,
    "metrics": cli_metrics,
    "sample-mask": cli_sample_mask,
    "synth": cli_synth,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (SolverDivergenceError, ProxConvergenceError, SliceSvdError, FloatingPointError) as exc:
        print(f"mpcp: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, TensorFileError, ValueError, OSError) as exc:
        print(f"mpcp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
