"""Energy stability under grid refinement for the p=3, N=2, f=|u|^3 u problem."""
import argparse

import numpy as np

from radnodal import ProblemSpec, SolverConfig, find_k_node_profile, minimize_nodes
from radnodal.shooting import find_bracket


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--grids", type=int, nargs="+", default=[1000, 2000, 4000])
    ap.add_argument("--kmax", type=int, default=1)
    args = ap.parse_args()
    spec = ProblemSpec.power(3.0, 2, 5.0, r_max=20.0)
    for k in range(args.kmax + 1):
        prev = None
        for m in args.grids:
            sol = minimize_nodes(spec, k, SolverConfig(grid=m))
            rel = "" if prev is None else f" change {abs(sol.total_energy - prev) / prev:.2e}"
            print(f"k={k} M={m:5d} c={sol.total_energy:.8f} nodes={np.round(sol.nodes.rho, 5).tolist()}{rel}")
            prev = sol.total_energy
        res = find_k_node_profile(spec, k, find_bracket(spec, k, amin=0.5, amax=50.0))
        print(f"k={k} oracle  E={res.energy:.8f} nodes={np.round(res.nodes, 5).tolist()} a*={res.a_star:.10f}")


if __name__ == "__main__":
    main()
