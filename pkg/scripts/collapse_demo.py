"""How many nodes fit in a truncated domain: sweep k at fixed r_max."""
import argparse

import numpy as np

from radnodal import ProblemSpec, SolverConfig, minimize_nodes
from radnodal.errors import CollapseDetected


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--rmax", type=float, default=10.0)
    ap.add_argument("--kmax", type=int, default=7)
    args = ap.parse_args()
    spec = ProblemSpec.power(2.0, 1, 4.0, r_max=args.rmax)
    for k in range(args.kmax + 1):
        try:
            sol = minimize_nodes(spec, k, SolverConfig())
            gaps = np.diff([0.0, *sol.nodes.rho, args.rmax])
            print(f"k={k} c={sol.total_energy:.6f} min gap={gaps.min():.3f} notes={sol.notes}")
        except CollapseDetected as e:
            print(f"k={k} CollapseDetected: {e}")


if __name__ == "__main__":
    main()
