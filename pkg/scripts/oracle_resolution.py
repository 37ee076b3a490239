"""Why the one-dimensional oracle cannot place far nodes in double precision.

For -u'' + u = u^3 the quantity E = u'^2/2 - u^2/2 + u^4/4 is conserved.
Starting at a = sqrt(2) + d gives E ~ sqrt(2) d, and the first zero sits
near r ~ log(C / d) / 2.  The script measures the first zero against d and
compares the amplitude offset needed for a node at r with the spacing of
doubles near sqrt(2).
"""
import math
from decimal import Decimal, getcontext

import numpy as np

from radnodal import ProblemSpec, SolverConfig
from radnodal.shooting import shoot


def main():
    spec = ProblemSpec.power(2.0, 1, 4.0, r_max=60.0)
    cfg = SolverConfig(ode_rtol=1e-12)
    ulp = np.spacing(math.sqrt(2))
    print(f"spacing of doubles at sqrt(2): {ulp:.2e}")
    print(f"{'d':>9} {'first zero':>11}")
    ds, zs = [], []
    for d in 10.0 ** -np.arange(4, 15, 2):
        t = shoot(spec, math.sqrt(2) + d, cfg)
        z = t.zeros[0] if t.node_count else float("nan")
        print(f"{d:9.1e} {z:11.4f}  ({t.terminal_behavior})")
        if np.isfinite(z):
            ds.append(d)
            zs.append(z)
    # first zero = (1/2) log(C / d)
    logc = float(np.mean(2 * np.array(zs) + np.log(ds)))
    print(f"fit: first zero = (1/2) log({math.exp(logc):.1f} / d)")
    for r in (12.0, 20.0):
        need = math.exp(logc - 2 * r)
        print(f"node at r={r:g} needs d ~ {need:.1e} = {need / ulp:.2g} ulp; "
              f"bisection width 1e-10 * sqrt2 = {1e-10 * math.sqrt(2):.1e}")
    getcontext().prec = 40
    off = float(Decimal(math.sqrt(2)) - Decimal(2).sqrt())
    energy = math.sqrt(2) * off
    print(f"fl(sqrt2) - sqrt2 = {off:.3e}; E = {energy:.3e}; "
          f"|u'| at the closest approach = sqrt(2E) = {math.sqrt(2 * energy):.3e} > 1e-8")


if __name__ == "__main__":
    main()
