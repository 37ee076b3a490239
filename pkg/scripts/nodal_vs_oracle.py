"""Variational k-node levels and nodes next to the shooting oracle.

With ``--tight`` the oracle also runs at rtol 1e-12 and bisection width
1e-16, which resolves the N=1 two-node case that the default settings
cannot.
"""
import argparse
import time

import numpy as np

from radnodal import ProblemSpec, SolverConfig, find_k_node_profile, minimize_nodes
from radnodal.errors import SolverError
from radnodal.shooting import find_bracket


def oracle(spec, k, cfg):
    try:
        res = find_k_node_profile(spec, k, find_bracket(spec, k, config=cfg), cfg)
        return res.energy, np.round(res.nodes, 5).tolist()
    except SolverError as e:
        return float("nan"), type(e).__name__


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--dim", type=int, default=1)
    ap.add_argument("--rmax", type=float, default=60.0)
    ap.add_argument("--grid", type=int, default=3000)
    ap.add_argument("--kmax", type=int, default=2)
    ap.add_argument("--tight", action="store_true")
    args = ap.parse_args()

    spec = ProblemSpec.power(2.0, args.dim, 4.0, r_max=args.rmax)
    cfg = SolverConfig(grid=args.grid)
    tight = cfg.replace(ode_rtol=1e-12, bisect_rtol=1e-16)
    for k in range(args.kmax + 1):
        t0 = time.perf_counter()
        sol = minimize_nodes(spec, k, cfg)
        t_var = time.perf_counter() - t0
        print(f"k={k} variational c={sol.total_energy:.7f} nodes={np.round(sol.nodes.rho, 5).tolist()} "
              f"polished={sol.polished} ({t_var:.1f} s)")
        e, nodes = oracle(spec, k, cfg)
        print(f"     oracle (default)  E={e:.7f} nodes={nodes}")
        if args.tight:
            e, nodes = oracle(spec, k, tight)
            print(f"     oracle (tight)    E={e:.7f} nodes={nodes}")


if __name__ == "__main__":
    main()
