"""Command line front end.

Exit codes: 0 success, 1 input error, 2 solver failure or failed certificate.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .constants import compute_constants, lambda1
from .functional import ProblemParams
from .graph import GraphFormatError, GraphValidationError, boundary_of, load_graph
from .operators import assemble_form
from .report import (
    build_report,
    parse_eps_grid,
    parse_forcing,
    parse_lambda,
    rows_to_csv,
    run_sweep,
)
from .solvers import SolverConfig, SolverError, two_solutions

INPUT_ERROR = 1
SOLVER_ERROR = 2


class InputError(Exception):
    pass


def _load(graph_path):
    try:
        g = load_graph(graph_path)
        d = boundary_of(g)
    except (GraphFormatError, GraphValidationError) as exc:
        raise InputError(str(exc)) from exc
    return g, d, assemble_form(g, d)


def _problem(args, form):
    lam1 = lambda1(form)
    try:
        lam = parse_lambda(args.lam, lam1)
        f = parse_forcing(args.f, form.domain)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    return lam, lam1, f


def _params(form, lam, p, eps, f):
    try:
        return ProblemParams.on(form, lam, p, eps, f)
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def _config(args) -> SolverConfig:
    return SolverConfig(tol=args.tol, max_iter=args.max_iter, path_nodes=args.path_nodes, seed=args.seed)


def _write(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_check(args) -> int:
    g, d, _ = _load(args.graph)
    ws = [w for _, _, w in g.edges]
    mus = list(g.mu.values())
    print(f"vertices: {len(g.mu)}  edges: {len(g.edges)}  connected: yes")
    print(f"n = |interior| = {d.n}  |boundary| = {len(d.boundary)}  m = {d.m}")
    print(f"mu in [{min(mus)!r}, {max(mus)!r}]")
    if ws:
        print(f"w in [{min(ws)!r}, {max(ws)!r}]")
    print("ok")
    return 0


def cmd_constants(args) -> int:
    _, _, form = _load(args.graph)
    lam, lam1, f = _problem(args, form)
    tau = (lam1 - lam) / lam1
    if not 0 < lam < lam1:
        print(json.dumps({"lambda1": lam1, "lam": lam, "tau": tau}, indent=2))
        print(f"error: lambda={lam!r} is outside (0, lambda1={lam1!r}); tau={tau!r}", file=sys.stderr)
        return INPUT_ERROR
    try:
        consts = compute_constants(form, lam, args.p, f, seed=args.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _write(json.dumps(consts.to_dict(), indent=2) + "\n", args.out)
    return 0


def cmd_solve(args) -> int:
    _, _, form = _load(args.graph)
    lam, _, f = _problem(args, form)
    params = _params(form, lam, args.p, args.eps, f)
    cfg = _config(args)
    try:
        u0, uc, consts = two_solutions(form, params, cfg)
    except SolverError as exc:
        print(f"solver failure {exc}", file=sys.stderr)
        return SOLVER_ERROR
    report = build_report(form, params, consts, u0, uc, cfg)
    _write(report.to_json(), args.out)
    cert = report.certificate
    print(f"status: {cert['status']}", file=sys.stderr)
    if cert["in_regime"] and not cert["certified"]:
        return SOLVER_ERROR
    return 0


def cmd_sweep(args) -> int:
    _, _, form = _load(args.graph)
    lam, _, f = _problem(args, form)
    try:
        grid = parse_eps_grid(args.eps_grid)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    params = _params(form, lam, args.p, 0.0, f)
    cfg = _config(args)
    try:
        consts = compute_constants(form, lam, args.p, f, seed=cfg.seed)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    rows, summary = run_sweep(form, params, grid, cfg, consts)
    Path(args.out_csv).write_text(rows_to_csv(rows))
    Path(args.out_json).write_text(json.dumps(summary, indent=2) + "\n")
    print(f"{summary['certified_rows']}/{summary['rows']} rows certified", file=sys.stderr)
    return 0


def _problem_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--graph", required=True, help="graph JSON file")
    p.add_argument("--lambda", dest="lam", default="0.5*lambda1", help="value or 'FRAC*lambda1' (default 0.5*lambda1)")
    p.add_argument("--p", type=float, required=True, help="exponent p > 2")
    p.add_argument("--f", default="const:1", help="const:C, vertex:ID:C or a JSON file (default const:1)")
    p.add_argument("--seed", type=int, default=0)


def _solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--max-iter", type=int, default=100_000)
    p.add_argument("--path-nodes", type=int, default=64)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="graphbiharmonic", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="validate a graph file and its domain")
    p.add_argument("graph")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("constants", help="print lambda1, tau, embedding bounds, ||f||, eps1")
    _problem_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("solve", help="compute and certify both solutions")
    _problem_args(p)
    _solver_args(p)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--out", help="report path (default stdout)")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="solve over a grid of eps values")
    _problem_args(p)
    _solver_args(p)
    p.add_argument("--eps-grid", required=True, help="MIN:MAX:COUNT:log|lin")
    p.add_argument("--out-csv", required=True)
    p.add_argument("--out-json", required=True)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return INPUT_ERROR
    except SolverError as exc:
        print(f"solver failure {exc}", file=sys.stderr)
        return SOLVER_ERROR
