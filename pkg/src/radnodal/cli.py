"""Command-line entry point: ``radnodal {solve,oracle,check}``.

Exit codes: 0 converged, 1 usage or spec error, 2 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import SolverConfig
from .errors import BracketInvalid, SolverError, SpecError
from .nodal import minimize_nodes
from .problem import Nonlinearity, PowerTerm, ProblemSpec, check_assumptions, critical_exponent
from .report import RunReport, solution_record, write_report, write_sweep
from .shooting import amplitude_sweep, find_k_node_profile

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2

log = logging.getLogger("radnodal")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _spec_args(p: argparse.ArgumentParser, rmax_default: float = 40.0) -> None:
    p.add_argument("--p", type=float, required=True, help="p-Laplacian exponent (> 1)")
    p.add_argument("--dim", type=int, required=True, help="space dimension N")
    p.add_argument("--q", type=float, action="append", required=True,
                   help="power exponent; repeat for multi-term f")
    p.add_argument("--lambda", dest="lam", type=float, action="append",
                   help="coefficient of the matching --q (default 1)")
    p.add_argument("--rmax", type=float, default=rmax_default, help="truncation radius")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="radnodal", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", help="variational k-node solution")
    _spec_args(s)
    s.add_argument("--k", type=int, required=True, help="number of nodes")
    s.add_argument("--grid", type=int, default=SolverConfig.grid, help="elements over [0, rmax]")
    s.add_argument("--tol", type=float, default=SolverConfig.tol, help="annulus residual tolerance")
    s.add_argument("--seed", type=int, default=SolverConfig.seed)
    s.add_argument("--lead", choices=["+", "-"], default="+", help="sign of u(0)")
    s.add_argument("--oracle", action="store_true", help="attach a shooting cross-check")
    s.add_argument("--out", default=None, help="output directory")

    o = sub.add_parser("oracle", help="shooting sweep and bisection")
    _spec_args(o)
    o.add_argument("--k", type=int, required=True)
    o.add_argument("--amin", type=float, required=True)
    o.add_argument("--amax", type=float, required=True)
    o.add_argument("--n", type=int, default=41, help="sweep points")
    o.add_argument("--tol", type=float, default=SolverConfig.ode_rtol, help="ODE relative tolerance")
    o.add_argument("--out", default=None)

    c = sub.add_parser("check", help="print the assumption table")
    _spec_args(c)
    return ap


def _spec_excerpt(args) -> str:
    ps = critical_exponent(args.p, args.dim) if args.p > 1 and args.dim >= 1 else float("nan")
    lines = ["assumption  verdict  witness"]
    for q in args.q:
        ok = args.p < q < ps
        lines.append(f"f2          {'pass' if ok else 'FAIL':<9}q={q:g} in ({args.p:g}, {ps:g})")
    return "\n".join(lines)


def make_spec(args) -> ProblemSpec:
    lams = args.lam or []
    if len(lams) > len(args.q):
        raise SpecError("more --lambda than --q values")
    lams = list(lams) + [1.0] * (len(args.q) - len(lams))
    terms = tuple(PowerTerm(c, q) for c, q in zip(lams, args.q))
    return ProblemSpec(args.p, args.dim, Nonlinearity(terms), args.rmax)


def _out_dir(args, config: SolverConfig) -> Path:
    return Path(args.out) if args.out else Path(config.out_dir)


def run_solve(args) -> int:
    spec = make_spec(args)
    config = SolverConfig(grid=args.grid, tol=args.tol, seed=args.seed,
                          **({"out_dir": args.out} if args.out else {}))
    report = RunReport("solve", spec, config)
    out = _out_dir(args, config)
    lead = 1 if args.lead == "+" else -1
    t0 = time.perf_counter()
    profile = None
    try:
        sol = minimize_nodes(spec, args.k, config, lead=lead)
        report.solution = solution_record(spec, sol)
        report.converged = bool(report.solution["converged"])
        profile = sol.glued
    except SolverError as e:
        report.error = {"type": type(e).__name__, "message": str(e)}
    report.timing["solve_s"] = time.perf_counter() - t0
    if args.oracle and report.solution is not None:
        t1 = time.perf_counter()
        try:
            res = find_k_node_profile(spec, args.k, config=config)
            if lead < 0:
                res.a_star = -res.a_star
            block = res.to_dict()
            ref = np.array(report.solution["nodes"])
            block["energy_rel_diff"] = abs(block["energy"] - report.solution["c_k"]) / abs(block["energy"])
            if ref.size == res.nodes.size:
                block["node_max_diff"] = float(np.max(np.abs(ref - res.nodes))) if ref.size else 0.0
            report.oracle = block
        except SolverError as e:
            report.oracle = {"error": {"type": type(e).__name__, "message": str(e)}}
        report.timing["oracle_s"] = time.perf_counter() - t1
    write_report(report, out, profile)
    if report.error:
        print(f"{report.error['type']}: {report.error['message']}", file=sys.stderr)
        return EXIT_NUMERIC
    s = report.solution
    print(f"k={s['k']} c_k={s['c_k']!r} nodes={s['nodes']} converged={s['converged']} -> {out}")
    return EXIT_OK if report.converged else EXIT_NUMERIC


def run_oracle(args) -> int:
    spec = make_spec(args)
    config = SolverConfig(ode_rtol=args.tol, **({"out_dir": args.out} if args.out else {}))
    if not 0 < args.amin < args.amax or args.n < 2:
        raise SpecError("need 0 < amin < amax and n >= 2")
    out = _out_dir(args, config)
    out.mkdir(parents=True, exist_ok=True)
    report = RunReport("oracle", spec, config)
    t0 = time.perf_counter()
    amps = np.geomspace(args.amin, args.amax, args.n)
    try:
        rows = amplitude_sweep(spec, amps, config)
    except SolverError as e:
        report.error = {"type": type(e).__name__, "message": str(e)}
        write_report(report, out)
        print(f"{report.error['type']}: {report.error['message']}", file=sys.stderr)
        return EXIT_NUMERIC
    write_sweep(rows, out / "sweep.csv")
    sweep = [{"a": a, "node_count": n, "terminal_behavior": b} for a, n, b in rows]
    report.oracle = {"sweep": sweep}
    bracket = next(((a0, a1) for (a0, n0, b0), (a1, n1, b1) in zip(rows, rows[1:])
                    if n0 <= args.k and (n1 >= args.k + 1 or b1 == "blew_up")), None)
    profile = None
    try:
        if bracket is None:
            raise BracketInvalid(f"no adjacent sweep amplitudes straddle k={args.k}")
        res = find_k_node_profile(spec, args.k, bracket, config)
        report.oracle.update(res.to_dict())
        report.converged = True
        profile = res.profile
    except SolverError as e:
        report.error = {"type": type(e).__name__, "message": str(e)}
    report.timing["oracle_s"] = time.perf_counter() - t0
    write_report(report, out, profile)
    if report.error:
        print(f"{report.error['type']}: {report.error['message']} (sweep in {out / 'sweep.csv'})",
              file=sys.stderr)
        return EXIT_NUMERIC
    print(f"k={args.k} a*={report.oracle['a_star']!r} energy={report.oracle['energy']!r} -> {out}")
    return EXIT_OK


def run_check(args) -> int:
    spec = make_spec(args)
    rep = check_assumptions(spec)
    print(rep.format_table())
    return EXIT_OK if rep.all_pass else EXIT_NUMERIC


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR,
                        format="%(levelname)s %(name)s: %(message)s")
    run = {"solve": run_solve, "oracle": run_oracle, "check": run_check}[args.command]
    try:
        return run(args)
    except SpecError as e:
        print(f"spec error: {e}", file=sys.stderr)
        print(_spec_excerpt(args), file=sys.stderr)
        return EXIT_USAGE
