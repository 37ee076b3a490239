"""Shooting oracle: the radial ODE as an initial-value problem from r = 0.

The system is integrated in flux form,

    u' = sign(w) (|w| / r^{N-1})^{1/(p-1)},
    w' = r^{N-1} (|u|^{p-2} u - f(r, u)),

where ``w = r^{N-1} |u'|^{p-2} u'``.  Integration stops at every extremum
(``w = 0``) so the trajectory can be classified: an extremum where ``|u|``
is locally minimal means the orbit turned back before reaching zero.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.integrate import solve_ivp

from .config import SolverConfig
from .discretization import RadialFunction, build_grid, energy
from .errors import BracketInvalid, NoDecay, StepFailure
from .problem import ProblemSpec

log = logging.getLogger(__name__)

DECAY_ABS = 1e-8
BLOWUP = 1e6
MAX_SEGMENTS = 10000

DECAYED, BLEW_UP, OSCILLATING, REACHED_RMAX = "decayed", "blew_up", "oscillating", "reached_rmax"


@dataclass
class ShotTrajectory:
    a: float
    r: np.ndarray
    u: np.ndarray
    w: np.ndarray
    zeros: np.ndarray
    terminal_behavior: str
    r_end: float
    segments: list = field(default_factory=list, repr=False)

    @property
    def node_count(self) -> int:
        return int(self.zeros.size)

    def __call__(self, r) -> np.ndarray:
        """Dense ``(u, w)`` at radii in ``[0, r_end]``; ``(a, 0)`` below the start offset."""
        r = np.atleast_1d(np.asarray(r, dtype=float))
        out = np.empty((2, r.size))
        out[0], out[1] = self.a, 0.0
        for r0, r1, dense in self.segments:
            m = (r >= r0) & (r <= r1)
            if np.any(m):
                out[:, m] = dense(r[m])
        return out

    def closest_approach(self, after: float = 0.0) -> tuple[float, float]:
        """Radius and value of ``min max(|u|, |w|)`` on samples beyond ``after``."""
        m = self.r > after
        if not np.any(m):
            return self.r_end, float("inf")
        d = np.maximum(np.abs(self.u[m]), np.abs(self.w[m]))
        i = int(np.argmin(d))
        return float(self.r[m][i]), float(d[i])

    def to_dict(self) -> dict:
        return {"a": self.a, "node_count": self.node_count,
                "zeros": [float(z) for z in self.zeros],
                "terminal_behavior": self.terminal_behavior, "r_end": self.r_end}


def _scalar_f(spec: ProblemSpec):
    terms = spec.nonlinearity.terms
    if any(t.weight is not None for t in terms):
        return lambda r, u: float(spec.f(r, u))
    pairs = [(t.coef, t.q - 1.0) for t in terms]
    return lambda r, u: math.copysign(sum(c * abs(u) ** e for c, e in pairs), u)


def _rhs(spec: ProblemSpec):
    p, n1 = spec.p, spec.dim - 1
    inv = 1.0 / (p - 1.0)
    f = _scalar_f(spec)

    def rhs(r, y):
        u, w = y
        rn = r ** n1
        if p == 2:
            up = w / rn
        else:
            up = math.copysign((abs(w) / rn) ** inv, w)
        wp = rn * (math.copysign(abs(u) ** (p - 1), u) - f(r, u))
        return [up, wp]

    return rhs


def initial_state(spec: ProblemSpec, a: float, h0: float) -> tuple[float, float]:
    """Leading-order series at ``r = h0``; ``u`` gets its first correction."""
    p, n = spec.p, spec.dim
    c = math.copysign(abs(a) ** (p - 1), a) - float(spec.f(0.0, a))
    w = h0 ** n * c / n
    du = math.copysign((abs(c) / n) ** (1 / (p - 1)) * h0 ** (p / (p - 1)) * (p - 1) / p, c)
    return a + du, w


def shoot(spec: ProblemSpec, a: float, config: Optional[SolverConfig] = None,
          r_max: Optional[float] = None) -> ShotTrajectory:
    """Integrate from ``u(0) = a`` and classify the terminal behaviour."""
    if a == 0 or not np.isfinite(a):
        raise ValueError("amplitude must be finite and nonzero")
    config = config or SolverConfig()
    r_max = spec.r_max if r_max is None else float(r_max)
    rtol = config.ode_rtol
    atol = rtol * 1e-6 * abs(a)
    rhs = _rhs(spec)

    def ev_zero(r, y):
        return y[0]

    def ev_ext(r, y):
        return y[1]
    ev_ext.terminal = True

    def ev_blow(r, y):
        return abs(y[0]) - BLOWUP
    ev_blow.terminal = True

    def ev_decay(r, y):
        return max(abs(y[0]), abs(y[1])) - DECAY_ABS
    ev_decay.terminal = True
    ev_decay.direction = -1

    r0 = config.ode_h0
    y0 = list(initial_state(spec, a, r0))
    rs, us, ws, zeros, segments = [np.array([0.0])], [np.array([a])], [np.array([0.0])], [], []
    status = REACHED_RMAX
    if y0[1] == 0.0:
        # u(0) sits on a constant equilibrium: it never decays or crosses zero
        const = lambda r: np.vstack([np.full(np.size(r), float(a)), np.zeros(np.size(r))])
        return ShotTrajectory(float(a), np.array([0.0, r_max]), np.array([a, a]),
                              np.zeros(2), np.zeros(0), OSCILLATING, r_max,
                              [(0.0, r_max, const)])
    # first extremum: w moves away from its initial sign
    ev_ext.direction = -np.sign(y0[1]) if y0[1] != 0 else 0
    for _seg in range(MAX_SEGMENTS):
        sol = solve_ivp(rhs, (r0, r_max), y0, method="RK45", rtol=rtol, atol=atol,
                        events=(ev_zero, ev_ext, ev_blow, ev_decay), dense_output=True)
        if sol.status == -1:
            raise StepFailure(sol.message, float(sol.t[-1]))
        rs.append(sol.t)
        us.append(sol.y[0])
        ws.append(sol.y[1])
        segments.append((float(sol.t[0]), float(sol.t[-1]), sol.sol))
        zeros.extend(float(z) for z in sol.t_events[0] if z > r0)
        if sol.status == 0:
            break
        if sol.t_events[2].size:
            status = BLEW_UP
            break
        if sol.t_events[3].size:
            status = DECAYED
            break
        # extremum: a turn back toward larger |u| without a crossing ends the shot
        re, (ue, we) = float(sol.t_events[1][0]), sol.y_events[1][0]
        dw = rhs(re, [ue, 0.0])[1]
        if ue * dw > 0:
            status = OSCILLATING
            break
        ev_ext.direction = -ev_ext.direction if ev_ext.direction else -np.sign(dw)
        r0, y0 = re, [ue, we]
    else:
        log.warning("shot a=%g hit the segment cap", a)
    r = np.concatenate(rs)
    keep = np.concatenate(([True], np.diff(r) > 0))
    return ShotTrajectory(float(a), r[keep], np.concatenate(us)[keep], np.concatenate(ws)[keep],
                          np.array(zeros), status, float(r[keep][-1]), segments)


def amplitude_sweep(spec: ProblemSpec, amplitudes: Sequence[float],
                    config: Optional[SolverConfig] = None) -> list[tuple[float, int, str]]:
    """``(a, node_count, terminal_behavior)`` for each amplitude, in sorted order."""
    rows = []
    for a in sorted(amplitudes):
        t = shoot(spec, a, config)
        rows.append((float(a), t.node_count, t.terminal_behavior))
    return rows


def _high(t: ShotTrajectory, k: int) -> bool:
    return t.node_count >= k + 1 or t.terminal_behavior == BLEW_UP


def find_bracket(spec: ProblemSpec, k: int, amin: float = 1e-2, amax: float = 1e2,
                 ratio: float = 1.05, config: Optional[SolverConfig] = None):
    """First adjacent pair of a geometric sweep whose node counts straddle k."""
    if not 0 < amin < amax:
        raise ValueError("need 0 < amin < amax")
    n = int(math.ceil(math.log(amax / amin) / math.log(ratio))) + 1
    prev = None
    for a in np.geomspace(amin, amax, n):
        t = shoot(spec, a, config)
        if prev is not None and not _high(prev, k) and _high(t, k):
            return float(prev.a), float(a)
        prev = t
    raise BracketInvalid(f"no amplitude in [{amin:g}, {amax:g}] straddles {k} nodes")


@dataclass
class KNodeProfile:
    a_star: float
    trajectory: ShotTrajectory
    energy: float
    nodes: np.ndarray
    r_cut: float
    closest: float
    bracket: tuple[float, float]
    bisections: int
    profile: Optional[RadialFunction] = field(default=None, repr=False)

    def __iter__(self):
        yield self.a_star
        yield self.trajectory

    def to_dict(self) -> dict:
        return {"a_star": self.a_star, "energy": self.energy,
                "nodes": [float(x) for x in self.nodes], "r_cut": self.r_cut,
                "closest_approach": self.closest, "bracket": list(self.bracket),
                "bisections": self.bisections, "trajectory": self.trajectory.to_dict()}


def find_k_node_profile(spec: ProblemSpec, k: int, bracket: Optional[Sequence[float]] = None,
                        config: Optional[SolverConfig] = None,
                        rel_width: Optional[float] = None) -> KNodeProfile:
    """Bisect ``a`` between ``<= k`` and ``>= k+1`` sign changes.

    The returned trajectory is the ``<= k`` endpoint.  It is accepted when
    its closest approach to the origin after the k-th zero is below
    ``config.decay_tol * |a|``; its energy is that of the profile truncated
    there, evaluated with the P1 discretization on ``config.oracle_grid``
    elements.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    config = config or SolverConfig()
    rel_width = config.bisect_rtol if rel_width is None else rel_width
    if bracket is None:
        bracket = find_bracket(spec, k, config=config)
    lo, hi = (float(x) for x in bracket)
    if lo == 0 or hi == 0 or lo * hi < 0:
        raise BracketInvalid("bracket endpoints must be nonzero and of one sign")
    t_lo, t_hi = shoot(spec, lo, config), shoot(spec, hi, config)
    if _high(t_lo, k) and not _high(t_hi, k):
        lo, hi, t_lo, t_hi = hi, lo, t_hi, t_lo
    if _high(t_lo, k) or not _high(t_hi, k):
        raise BracketInvalid(
            f"bracket [{bracket[0]:g}, {bracket[1]:g}] gives {t_lo.node_count} and "
            f"{t_hi.node_count} nodes; it must straddle {k}")
    it = 0
    while abs(hi - lo) > rel_width * max(abs(lo), abs(hi)):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        t = shoot(spec, mid, config)
        if _high(t, k):
            hi = mid
        else:
            lo, t_lo = mid, t
        it += 1
    if t_lo.node_count != k:
        raise NoDecay(f"lower endpoint has {t_lo.node_count} nodes, not {k}")
    # search for the closest approach beyond the last lobe's peak: in the
    # near-homoclinic regime the crossings themselves pass close to the origin
    after = 0.0
    if k:
        m = t_lo.r > t_lo.zeros[-1]
        after = float(t_lo.r[m][np.argmax(np.abs(t_lo.u[m]))])
    r_cut, closest = t_lo.closest_approach(after)
    if t_lo.terminal_behavior == DECAYED:
        r_cut, closest = t_lo.r_end, 0.0
    if closest > config.decay_tol * abs(lo):
        raise NoDecay(f"closest approach {closest:.3e} exceeds {config.decay_tol:g}*|a| "
                      f"for a in [{lo:.12g}, {hi:.12g}]")
    grid = build_grid(0.0, r_cut, config.oracle_grid, dim=spec.dim, left_dirichlet=False,
                      right_dirichlet=False)
    vals = t_lo(grid.nodes)[0]
    prof = RadialFunction(grid, vals)
    e = energy(grid, spec, prof)
    return KNodeProfile(lo, t_lo, float(e), t_lo.zeros[:k].copy(), r_cut, closest,
                        (lo, hi), it, prof)
