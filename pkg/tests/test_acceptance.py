"""The nine acceptance criteria, each at its stated tolerance and time budget.

Every test records one ``criterion N PASS/FAIL`` line; the lines are repeated
in the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from radnodal import SolverConfig
from radnodal.discretization import build_grid, energy, norm_w1p, pairing
from radnodal.errors import SolverError
from radnodal.ground_state import solve_ground_state
from radnodal.nehari import project, verify_unique_max
from radnodal.nodal import count_nodes, h_certificate, minimize_nodes, piece_signs
from radnodal.problem import Nonlinearity, PowerTerm, ProblemSpec
from radnodal.report import solution_record
from radnodal.shooting import find_bracket, find_k_node_profile

SOLITON = ProblemSpec.power(2.0, 1, 4.0, r_max=40.0)
NODAL = ProblemSpec.power(2.0, 1, 4.0, r_max=60.0)
P3 = ProblemSpec.power(3.0, 2, 5.0, r_max=20.0)
NODAL_CFG = SolverConfig(grid=3000)


def _fmt(checks):
    return "; ".join(f"{k}={'ok' if v else 'FAILED'}" for k, v in checks.items())


@pytest.fixture(scope="module")
def nodal_runs():
    """Variational k = 0, 1, 2 on the r_max = 60 soliton problem, timed."""
    out, t0 = {}, time.perf_counter()
    for k in (0, 1, 2):
        out[k] = minimize_nodes(NODAL, k, NODAL_CFG)
    return out, time.perf_counter() - t0


@pytest.fixture(scope="module")
def p3_runs():
    out, t0 = {}, time.perf_counter()
    for k in (0, 1):
        for grid in (2000, 4000):
            out[k, grid] = minimize_nodes(P3, k, SolverConfig(grid=grid))
    return out, time.perf_counter() - t0


def test_criterion_1_soliton_energy(criterion):
    t0 = time.perf_counter()
    sol = minimize_nodes(SOLITON, 0, SolverConfig(grid=4000))
    dt = time.perf_counter() - t0
    c0 = sol.total_energy
    checks = {"c0 within 1% of 2/3": abs(c0 - 2 / 3) <= 0.01 * 2 / 3,
              "converged": sol.converged, "runtime < 10 s": dt < 10}
    ok = all(checks.values())
    criterion(1, ok, f"c0={c0:.8f} (2/3={2 / 3:.8f}), {dt:.2f} s; {_fmt(checks)}")
    assert ok


def test_criterion_2_oracle_agreement(criterion):
    c0 = minimize_nodes(SOLITON, 0, SolverConfig(grid=4000)).total_energy
    t0 = time.perf_counter()
    res = find_k_node_profile(SOLITON, 0, (1.3, 1.5))
    dt = time.perf_counter() - t0
    checks = {"a* = sqrt2 +- 1e-6": abs(res.a_star - math.sqrt(2)) <= 1e-6,
              "energy within 1% of c0": abs(res.energy - c0) <= 0.01 * c0,
              "runtime < 5 s": dt < 5}
    ok = all(checks.values())
    criterion(2, ok, f"a*={res.a_star!r}, E={res.energy:.8f} vs c0={c0:.8f}, {dt:.2f} s; "
                     f"{_fmt(checks)}")
    assert ok


def test_criterion_3_nodal_solutions(criterion, nodal_runs):
    runs, t_var = nodal_runs
    t0 = time.perf_counter()
    checks, detail = {}, []
    c = [runs[k].total_energy for k in (0, 1, 2)]
    checks["c0 < c1 < c2"] = c[0] < c[1] < c[2]
    for k in (1, 2):
        sol = runs[k]
        checks[f"k={k} node count"] = sol.node_count_observed == k and sol.converged
        try:
            orc = find_k_node_profile(NODAL, k, find_bracket(NODAL, k))
        except SolverError as e:
            checks[f"k={k} oracle"] = False
            detail.append(f"k={k}: c={sol.total_energy:.6f} nodes={np.round(sol.nodes.rho, 4).tolist()}"
                          f" oracle {type(e).__name__}: {e}")
            continue
        checks[f"k={k} energy 1%"] = abs(orc.energy - sol.total_energy) <= 0.01 * orc.energy
        dn = float(np.max(np.abs(np.array(sol.nodes.rho) - orc.nodes)))
        checks[f"k={k} nodes 1e-2"] = dn <= 1e-2
        detail.append(f"k={k}: c={sol.total_energy:.6f} oracle E={orc.energy:.6f}, "
                      f"nodes {np.round(sol.nodes.rho, 4).tolist()} vs {np.round(orc.nodes, 4).tolist()}")
    dt = t_var + time.perf_counter() - t0
    checks["runtime < 2 min"] = dt < 120
    ok = all(checks.values())
    criterion(3, ok, f"{' | '.join(detail)}; {dt:.1f} s; {_fmt(checks)}")
    assert ok


NEHARI_FAMILIES = {
    "p=2 single": ProblemSpec.power(2.0, 3, 4.0, r_max=6.0),
    "p=2 two-term": ProblemSpec(2.0, 3, Nonlinearity((PowerTerm(1.0, 3.0), PowerTerm(1.0, 5.0))), 6.0),
    "p=3 single": ProblemSpec.power(3.0, 2, 5.0, r_max=6.0),
    "p=3 two-term": ProblemSpec(3.0, 2, Nonlinearity((PowerTerm(0.5, 4.0), PowerTerm(2.0, 6.0))), 6.0),
}


def _random_profile(grid, rng):
    s = grid.nodes / grid.sigma
    c = rng.normal(size=5) / (1 + np.arange(5))
    u = sum(ci * np.cos((i + 0.5) * np.pi * s) for i, ci in enumerate(c))
    return grid.apply_bc(rng.uniform(0.01, 10) * u)


def test_criterion_4_nehari_suite(criterion):
    t0 = time.perf_counter()
    bad = {name: 0 for name in NEHARI_FAMILIES}
    for i, (name, spec) in enumerate(NEHARI_FAMILIES.items()):
        g = build_grid(0.0, spec.r_max, 100, dim=spec.dim)
        rng = np.random.default_rng(1000 + i)
        for _ in range(100):
            u = _random_profile(g, rng)
            res = project(g, spec, u)
            t_re = project(g, spec, res.projected).t_star
            e_star = res.energy_at_t_star
            ray_ok = all(energy(g, spec, s * u) <= e_star + 1e-12 * abs(e_star)
                         for s in np.geomspace(res.t_star / 10, res.t_star * 10, 64))
            rep = verify_unique_max(g, spec, u)
            if not (abs(t_re - 1) <= 1e-10 and ray_ok and rep.sign_changes == 1 and e_star > 0):
                bad[name] += 1
    dt = time.perf_counter() - t0
    checks = {f"{name} (100 profiles)": n == 0 for name, n in bad.items()}
    checks["runtime < 30 s"] = dt < 30
    ok = all(checks.values())
    criterion(4, ok, f"{dt:.2f} s; {_fmt(checks)}")
    assert ok


def test_criterion_5_gradient_consistency(criterion):
    t0 = time.perf_counter()
    specs = [ProblemSpec.power(2.0, 1, 4.0, r_max=5.0), ProblemSpec.power(2.0, 3, 4.0, r_max=5.0),
             ProblemSpec.power(3.0, 2, 5.0, r_max=5.0),
             ProblemSpec(2.0, 2, Nonlinearity((PowerTerm(1.0, 3.0), PowerTerm(0.5, 5.0))), 5.0)]
    rng = np.random.default_rng(5)
    worst = 0.0
    for i in range(50):
        spec = specs[i % len(specs)]
        g = build_grid(0.5 * (i % 2), spec.r_max, 200, dim=spec.dim)
        u, v = 0.8 * _random_profile(g, rng) / 5, _random_profile(g, rng)
        h = 1e-6
        fd = (energy(g, spec, u + h * v) - energy(g, spec, u - h * v)) / (2 * h)
        an = pairing(g, spec, u, v)
        worst = max(worst, abs(fd - an) / abs(an))
    dt = time.perf_counter() - t0
    checks = {"max rel err < 1e-5": worst < 1e-5, "runtime < 10 s": dt < 10}
    ok = all(checks.values())
    criterion(5, ok, f"worst relative error {worst:.2e} over 50 pairs, {dt:.2f} s; {_fmt(checks)}")
    assert ok


def test_criterion_6_certificate(criterion, nodal_runs):
    runs, _ = nodal_runs
    t0 = time.perf_counter()
    checks, worst = {}, 0.0
    tau = NODAL_CFG.tau
    for k in (1, 2):
        sol = runs[k]
        if not sol.converged:
            checks[f"k={k} converged"] = False
            continue
        nrm_p = norm_w1p(sol.glued.grid, sol.glued, NODAL.p) ** NODAL.p
        rel = float(np.max(np.abs(h_certificate(NODAL, sol))) / nrm_p)
        worst = max(worst, rel)
        checks[f"k={k} |h(1)| < 1e-6 |u|^p"] = rel < 1e-6
        flips = True
        for j in range(k + 1):
            s = np.ones(k + 1)
            s[j] = 1 - tau
            lo = h_certificate(NODAL, sol, s)[j]
            s[j] = 1 + tau
            hi = h_certificate(NODAL, sol, s)[j]
            flips &= bool(lo > 0 > hi)
        checks[f"k={k} sign flips"] = flips
    dt = time.perf_counter() - t0
    checks["runtime < 1 min"] = dt < 60
    ok = all(checks.values())
    criterion(6, ok, f"max |h(1)|/|u|^p = {worst:.2e}, {dt:.2f} s; {_fmt(checks)}")
    assert ok


def test_criterion_7_p3_properties(criterion, p3_runs):
    runs, dt = p3_runs
    checks, detail = {}, []
    for (k, grid), sol in sorted(runs.items()):
        rec = solution_record(P3, sol)
        res = max(pc["grad_residual"] for pc in rec["pieces"])
        neh = max(pc["nehari_residual"] for pc in rec["pieces"])
        signed = True
        for pc, s in zip(sol.pieces, piece_signs(k)):
            signed &= bool(np.all(s * pc.profile.values >= 0))
        checks[f"k={k} M={grid} residual"] = res < 1e-8
        checks[f"k={k} M={grid} nodes"] = count_nodes(sol.glued)[0] == k
        checks[f"k={k} M={grid} one-signed"] = signed
        checks[f"k={k} M={grid} Nehari"] = neh <= SolverConfig().nehari_tol
        detail.append(f"k={k} M={grid}: c={sol.total_energy:.7f} res={res:.1e} neh={neh:.1e}")
    for k in (0, 1):
        a, b = runs[k, 2000].total_energy, runs[k, 4000].total_energy
        checks[f"k={k} doubling < 0.5%"] = abs(a - b) <= 0.005 * abs(b)
    checks["runtime < 2 min"] = dt < 120
    ok = all(checks.values())
    criterion(7, ok, f"{' | '.join(detail)}; {dt:.1f} s; {_fmt(checks)}")
    assert ok


def test_criterion_8_symmetry_pair(criterion, nodal_runs, p3_runs):
    pairs = [(NODAL, NODAL_CFG, k, sol) for k, sol in nodal_runs[0].items()]
    pairs += [(P3, SolverConfig(grid=2000), k, sol) for (k, g), sol in p3_runs[0].items() if g == 2000]
    worst, checks = 0.0, {}
    for spec, cfg, k, pos in pairs:
        if not pos.converged:
            continue
        neg = minimize_nodes(spec, k, cfg, lead=-1)
        d = float(np.max(np.abs(pos.glued.values + neg.glued.values)))
        worst = max(worst, d)
        checks[f"p={spec.p:g} N={spec.dim} k={k}"] = d <= 1e-8 and neg.converged
    ok = bool(checks) and all(checks.values())
    criterion(8, ok, f"max |u+ + u-| = {worst:.1e} over {len(checks)} runs; {_fmt(checks)}")
    assert ok


def test_criterion_9_domain_monotonicity(criterion):
    t0 = time.perf_counter()
    rhos, sigmas = (0.0, 0.5, 1.0), (2.0, 4.0, 8.0)
    checks, worst = {}, -math.inf
    for dim in (1, 3):
        spec = ProblemSpec.power(2.0, dim, 4.0, r_max=8.0)
        # h = 0.01 divides every width, so smaller annulus spaces embed exactly
        cfg = SolverConfig(grid=800)
        table = np.array([[solve_ground_state(spec, r, s, 1, cfg).energy for s in sigmas]
                          for r in rhos])
        tol = cfg.tol * (np.abs(table[:, :-1]) + np.abs(table[:, 1:]))
        rise = table[:, 1:] - table[:, :-1]
        worst = max(worst, float(np.max(rise)))
        checks[f"N={dim} nonincreasing in sigma"] = bool(np.all(rise <= tol))
    dt = time.perf_counter() - t0
    checks["runtime < 1 min"] = dt < 60
    ok = all(checks.values())
    criterion(9, ok, f"largest increase along sigma {worst:.3e}, {dt:.2f} s; {_fmt(checks)}")
    assert ok
