"""Command-line interface.

Exit codes: 0 ok, 2 bad input, 3 numerical failure, 4 resource limit,
5 cross-check tolerance violation.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

from . import oracles
from .errors import ModelError, QuadratureFailure, ResourceLimit, SampleTooLarge
from .exact import CoalescenceQuery, full_distribution
from .models import load_model
from .output import RunManifest, dumps, to_csv, write_result
from .simulate import DEFAULT_HORIZON, annealed_estimate, limit_law_estimate

log = logging.getLogger("gwcoal")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_RESOURCE, EXIT_TOLERANCE = 0, 2, 3, 4, 5


class InputError(Exception):
    pass


def _load(path):
    try:
        return load_model(path)
    except FileNotFoundError:
        raise InputError(f"model file not found: {path}") from None
    except ModelError as exc:
        raise InputError(f"{path}: {exc}") from None


def _check_query(n, i, m=None):
    if not n >= i >= 2:
        raise InputError(f"need n >= i >= 2, got n={n}, i={i}")
    if m is not None and not 0 <= m < n:
        raise InputError(f"need 0 <= m < n, got m={m}, n={n}")


def _estimate_rows(payload: dict):
    keys = list(payload)
    return keys, [[payload[k] for k in keys]]


def _render(payload: dict, fmt: str, csv_rows=None) -> str:
    if fmt == "json":
        return dumps(payload) + "\n"
    header, rows = csv_rows if csv_rows is not None else _estimate_rows(payload)
    return to_csv(header, rows)


def cmd_exact(args) -> int:
    model = _load(args.model)
    _check_query(args.n, args.i)
    manifest = RunManifest("exact", model.digest(), {"n": args.n, "i": args.i})
    dist = full_distribution(CoalescenceQuery(model, args.n, args.i))
    payload = dist.to_json()
    rows = [[m, float(dist.pmf[m]), float(dist.tail[m])] for m in range(args.n)]
    rows.append(["inf", float(dist.p_infinity), None])
    write_result(_render(payload, args.format, (["m", "pmf", "tail"], rows)), args.output, manifest)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _load(args.model)
    _check_query(args.n, args.i, args.m)
    mode = {"quenched-average": "quenched", "direct-sample": "direct"}[args.mode]
    params = {"n": args.n, "i": args.i, "m": args.m, "replicates": args.replicates, "mode": args.mode}
    manifest = RunManifest("simulate", model.digest(), params, seed=args.seed)
    est = annealed_estimate(model, args.n, args.i, args.m, args.replicates, args.seed, mode=mode)
    payload = est.to_json()
    payload.update({"mode": args.mode, "n": args.n, "i": args.i, "m": args.m})
    write_result(_render(payload, args.format), args.output, manifest)
    return EXIT_OK


def cmd_limit(args) -> int:
    model = _load(args.model)
    if args.m < 0:
        raise InputError("m must be >= 0")
    params = {"m": args.m, "horizon_n": args.horizon_n, "replicates": args.replicates}
    manifest = RunManifest("limit", model.digest(), params, seed=args.seed)
    est = limit_law_estimate(model, args.m, args.horizon_n, 2, args.replicates, args.seed)
    payload = est.to_json()
    payload["m"] = args.m
    payload["e_v_over_x2_lt_1"] = bool(est.mean < 1.0)
    if model.lnary is not None:
        payload["closed_form"] = oracles.lnary_limit_tail(oracles.LnaryParams(*model.lnary), args.m)
    write_result(_render(payload, args.format), args.output, manifest)
    return EXIT_OK


def cmd_oracle(args) -> int:
    params = {k: v for k, v in vars(args).items() if k not in ("func", "output", "format", "verbose")}
    digest = None
    if args.example == "lnary":
        if args.l is None or args.k is None:
            raise InputError("--l and --k are required for the lnary example")
        _check_query(args.n, args.i, args.m if args.what == "tail" else None)
        p = oracles.LnaryParams(args.l, args.k)
        payload = {"example": "lnary", "l": args.l, "k": args.k, "n": args.n, "i": args.i}
        if args.what == "p_infinity":
            payload["p_infinity"] = oracles.lnary_p_infinity(p, args.n, args.i)
        elif args.what == "tail":
            payload["m"] = args.m
            payload["tail"] = oracles.lnary_tail(p, args.n, args.m, args.i)
        else:
            payload["tail"] = [oracles.lnary_tail(p, args.n, m, args.i) for m in range(args.n)]
            payload["p_infinity"] = oracles.lnary_p_infinity(p, args.n, args.i)
    elif args.example == "binary-random":
        _check_query(args.n, args.i, args.m)
        payload = {"example": "binary-random", "n": args.n, "i": args.i, "m": args.m,
                   "tail": oracles.binary_random_tail(args.n, args.m, args.i, wide_k_range=args.wide_k_range)}
    else:
        if not args.model:
            raise InputError("--model is required for the enumerate example")
        model = _load(args.model)
        digest = model.digest()
        _check_query(args.n, args.i, args.m)
        payload = {"example": "enumerate", "n": args.n, "i": args.i, "m": args.m,
                   "tail": oracles.enumerate_exact(model, args.n, args.i, args.m)}
    manifest = RunManifest("oracle", digest, params)
    rows = None
    if isinstance(payload.get("tail"), list):
        rows = (["m", "tail"], [[m, v] for m, v in enumerate(payload["tail"])] + [["inf", payload["p_infinity"]]])
    write_result(_render(payload, args.format, rows), args.output, manifest)
    return EXIT_OK


# -- crosscheck -----------------------------------------------------------------

DEFAULT_GRID = {"n": list(range(2, 9)), "i": [2, 3], "m": None, "tolerance": 1e-9,
                "mc_replicates": 0, "seed": 0, "constants": []}


def _oracle_for(model):
    """A reference ``(name, fn(n, i, m))`` for the model, or ``None``."""
    if model.lnary is not None:
        p = oracles.LnaryParams(*model.lnary)
        return "lnary", lambda n, i, m: oracles.lnary_tail(p, n, m, i)
    if model == oracles.binary_random_model():
        return "binary-random", lambda n, i, m: oracles.binary_random_tail(n, m, i)
    return "enumerate", lambda n, i, m: oracles.enumerate_exact(model, n, i, m, cap=20_000)


def crosscheck(model, grid: dict) -> tuple[list, list]:
    tol = float(grid.get("tolerance", 1e-9))
    reps = int(grid.get("mc_replicates", 0))
    seed = int(grid.get("seed", 0))
    name, oracle = _oracle_for(model)
    cells, bad = [], []
    constants = {(c["n"], c["i"], c["m"]): float(c["value"]) for c in grid.get("constants", [])}
    pairs = sorted({(n, i) for n in grid.get("n", []) for i in grid.get("i", []) if n >= i >= 2}
                   | {(n, i) for n, i, _ in constants})
    for n, i in pairs:
        dist = full_distribution(CoalescenceQuery(model, n, i))
        ms = grid.get("m")
        ms = range(n) if ms is None else [m for m in ms if 0 <= m < n]
        ms = sorted(set(ms) | {m for (cn, ci, m) in constants if (cn, ci) == (n, i)})
        for m in ms:
            exact = float(dist.tail[m])
            cell = {"n": n, "i": i, "m": m, "exact": exact}
            try:
                ref = oracle(n, i, m)
                cell.update({"oracle": name, "oracle_value": ref, "abs_diff": abs(exact - ref)})
                if abs(exact - ref) > tol:
                    bad.append(cell)
            except ResourceLimit:
                cell["oracle"] = None
            if (n, i, m) in constants:
                c = constants[(n, i, m)]
                cell.update({"constant": c, "constant_diff": abs(exact - c)})
                if abs(exact - c) > tol and cell not in bad:
                    bad.append(cell)
            if reps > 0:
                est = annealed_estimate(model, n, i, m, reps, seed)
                z = abs(exact - est.mean) / est.std_error if est.std_error > 0 else (
                    0.0 if abs(exact - est.mean) <= max(tol, 1e-12) else math.inf)
                cell.update({"mc_estimate": est.mean, "mc_std_error": est.std_error, "mc_z": z})
                if z > 3 and cell not in bad:
                    bad.append(cell)
            cells.append(cell)
    return cells, bad


def cmd_crosscheck(args) -> int:
    model = _load(args.model)
    grid = dict(DEFAULT_GRID)
    if args.grid:
        try:
            grid.update(json.loads(Path(args.grid).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read grid {args.grid}: {exc}") from None
    for key in ("n", "i", "m"):
        if getattr(args, key) is not None:
            grid[key] = getattr(args, key)
    if args.tol is not None:
        grid["tolerance"] = args.tol
    if args.mc_replicates is not None:
        grid["mc_replicates"] = args.mc_replicates
    manifest = RunManifest("crosscheck", model.digest(), {k: v for k, v in grid.items()}, seed=grid.get("seed"))
    cells, bad = crosscheck(model, grid)
    if not cells:
        print("warning: empty grid, nothing checked", file=sys.stderr)
    payload = {"tolerance": grid["tolerance"], "cells": cells, "violations": len(bad)}
    header = ["n", "i", "m", "exact", "oracle", "oracle_value", "abs_diff", "constant", "constant_diff",
              "mc_estimate", "mc_std_error", "mc_z"]
    rows = [[c.get(h) for h in header] for c in cells]
    write_result(_render(payload, args.format, (header, rows)), args.output, manifest)
    for c in bad:
        print(f"tolerance violation: {json.dumps(c)}", file=sys.stderr)
    return EXIT_TOLERANCE if bad else EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="gwcoal", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, model_required=True):
        if model_required:
            p.add_argument("--model", required=True, help="model JSON file")
        p.add_argument("--output", "-o", help="write the result here (manifest goes to OUTPUT.manifest.json)")
        p.add_argument("--format", choices=("json", "csv"), default="json")

    p = sub.add_parser("exact", help="exact coalescence-time distribution")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--i", type=int, default=2)
    p.set_defaults(func=cmd_exact)

    p = sub.add_parser("simulate", help="Monte Carlo estimate of P(m <= X < inf)")
    common(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--i", type=int, default=2)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--replicates", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--mode", choices=("quenched-average", "direct-sample"), default="quenched-average")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("limit", help="Monte Carlo estimate of lim_n P(m <= X_2 < inf)")
    common(p)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--horizon-n", type=int, default=DEFAULT_HORIZON)
    p.add_argument("--replicates", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_limit)

    p = sub.add_parser("oracle", help="closed-form or enumerated reference values")
    common(p, model_required=False)
    p.add_argument("--example", choices=("lnary", "binary-random", "enumerate"), required=True)
    p.add_argument("--model")
    p.add_argument("--l", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--i", type=int, default=2)
    p.add_argument("--m", type=int, default=0)
    p.add_argument("--what", choices=("p_infinity", "tail", "distribution"), default="distribution")
    p.add_argument("--wide-k-range", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("crosscheck", help="compare the exact engine against oracles over a grid")
    common(p)
    p.add_argument("--grid", help="grid JSON: n, i, m lists, tolerance, mc_replicates, seed, constants")
    p.add_argument("--n", type=int, nargs="*")
    p.add_argument("--i", type=int, nargs="*")
    p.add_argument("--m", type=int, nargs="*")
    p.add_argument("--tol", type=float)
    p.add_argument("--mc-replicates", type=int)
    p.set_defaults(func=cmd_crosscheck)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (InputError, SampleTooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except QuadratureFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ResourceLimit as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
