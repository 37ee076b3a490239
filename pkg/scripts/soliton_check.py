"""Ground state of -u'' + u = u^3 on the half-line against sqrt(2) sech(r).

Prints the variational energy, the oracle amplitude/energy and the P1
refinement error at several element counts.
"""
import argparse
import math
import time

import numpy as np

from radnodal import ProblemSpec, SolverConfig, find_k_node_profile, minimize_nodes


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rmax", type=float, default=40.0)
    ap.add_argument("--grids", type=int, nargs="+", default=[500, 1000, 2000, 4000])
    args = ap.parse_args()

    spec = ProblemSpec.power(2.0, 1, 4.0, r_max=args.rmax)
    print(f"{'M':>6} {'c0':>14} {'|c0-2/3|':>10} {'u(0)-sqrt2':>11} {'sup err':>9} {'s':>6}")
    for m in args.grids:
        t0 = time.perf_counter()
        sol = minimize_nodes(spec, 0, SolverConfig(grid=m))
        u = sol.glued
        sup = np.max(np.abs(u.values - math.sqrt(2) / np.cosh(u.grid.nodes)))
        print(f"{m:6d} {sol.total_energy:14.10f} {abs(sol.total_energy - 2 / 3):10.2e} "
              f"{u.values[0] - math.sqrt(2):11.2e} {sup:9.2e} {time.perf_counter() - t0:6.2f}")

    t0 = time.perf_counter()
    res = find_k_node_profile(spec, 0, (1.3, 1.5))
    print(f"oracle: a* = {res.a_star!r} (a*-sqrt2 = {res.a_star - math.sqrt(2):.2e}), "
          f"E = {res.energy:.10f}, {res.bisections} bisections, {time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
