"""k-node radial solutions glued from alternating-sign annulus ground states.

For nodes ``0 = ρ_0 < ρ_1 < ... < ρ_k < ρ_{k+1} = r_max`` the glued energy is

    E(ρ) = Σ_j c^{s_j}(ρ_j, ρ_{j+1}),   s_j = lead * (-1)^j,

and the k-node level is its minimum over ordered node vectors.  E is
minimized by Nelder-Mead in log-gap coordinates; the result is then
polished by solving the stationarity condition of E, which says the
boundary fluxes of neighbouring pieces balance at every node.  That second
stage matters when E is nearly flat in the node positions (dimension one,
where the pieces interact only through exponentially small tails).
"""
from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import optimize

from .config import SolverConfig
from .discretization import (
    RadialFunction, RadialGrid, energy, full_residual, norm_w1p, pairing, tail_check,
    tail_ratio,
)
from .errors import AllBelowThreshold, CollapseDetected, SignPatternViolation, ZeroInput
from .ground_state import AnnulusSolution, GroundStateCache, annulus_grid, element_size
from .nehari import project
from .problem import ProblemSpec

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class NodeVector:
    rho: tuple[float, ...] = ()

    def __post_init__(self):
        rho = tuple(float(x) for x in self.rho)
        object.__setattr__(self, "rho", rho)
        if rho and rho[0] <= 0:
            raise ValueError("nodes must be positive")
        if any(b <= a for a, b in zip(rho, rho[1:])):
            raise ValueError("nodes must be strictly increasing")

    @property
    def k(self) -> int:
        return len(self.rho)

    def edges(self, r_max: float) -> np.ndarray:
        if self.rho and self.rho[-1] >= r_max:
            raise ValueError("last node must lie below r_max")
        return np.array([0.0, *self.rho, r_max])

    def gaps(self, r_max: float) -> np.ndarray:
        return np.diff(self.edges(r_max))


def piece_signs(k: int, lead: int = 1) -> list[int]:
    return [lead * (-1) ** j for j in range(k + 1)]


def min_gap(spec: ProblemSpec, config: SolverConfig) -> float:
    return max(config.min_gap_elements * element_size(spec, config), config.min_gap)


# --------------------------------------------------------------------------
# gluing

def glue_grids(grids: Sequence[RadialGrid]) -> RadialGrid:
    nodes = np.concatenate([grids[0].nodes] + [g.nodes[1:] for g in grids[1:]])
    return RadialGrid(nodes, grids[0].dim, grids[0].left_dirichlet, grids[-1].right_dirichlet)


def assemble_candidate(spec: ProblemSpec, nodes: NodeVector, pieces: Sequence[AnnulusSolution],
                       alphas: Sequence[float], lead: Optional[int] = None) -> RadialFunction:
    """Concatenate ``alpha_j * piece_j`` on the glued grid (zero at shared nodes)."""
    if len(pieces) != nodes.k + 1 or len(alphas) != nodes.k + 1:
        raise ValueError("need k+1 pieces and k+1 scalings")
    if any(a <= 0 for a in alphas):
        raise ValueError("scalings must be positive")
    edges = nodes.edges(spec.r_max)
    if lead is None:
        lead = pieces[0].sign
    for j, (pc, s) in enumerate(zip(pieces, piece_signs(nodes.k, lead))):
        if not (math.isclose(pc.rho, edges[j], abs_tol=1e-9)
                and math.isclose(pc.sigma, edges[j + 1], abs_tol=1e-9)):
            raise ValueError(f"piece {j} lives on ({pc.rho}, {pc.sigma}), not on its annulus")
        v = pc.profile.values
        if np.any(s * v < 0) or not np.any(v):
            raise SignPatternViolation(f"piece {j} is not {'+' if s > 0 else '-'}-signed")
    grid = glue_grids([pc.grid for pc in pieces])
    vals = [alphas[0] * pieces[0].profile.values]
    for a, pc in zip(alphas[1:], pieces[1:]):
        vals.append(a * pc.profile.values[1:])
    return RadialFunction(grid, np.concatenate(vals))


def _solve_pieces(spec, nodes, config, lead, cache, ms=None):
    edges = nodes.edges(spec.r_max)
    signs = piece_signs(nodes.k, lead)
    ms = ms or [None] * (nodes.k + 1)
    return [cache.solve(edges[j], edges[j + 1], signs[j], slot=j, m=ms[j])
            for j in range(nodes.k + 1)]


def total_energy(spec: ProblemSpec, nodes: NodeVector, config: Optional[SolverConfig] = None,
                 lead: int = 1, cache: Optional[GroundStateCache] = None) -> float:
    """``E(ρ) = Σ_j c^{s_j}(ρ_j, ρ_{j+1})``."""
    config = config or SolverConfig()
    cache = cache or GroundStateCache(spec, config)
    return float(sum(pc.energy for pc in _solve_pieces(spec, nodes, config, lead, cache)))


# --------------------------------------------------------------------------
# diagnostics

def h_certificate(spec: ProblemSpec, solution: "NodalSolution",
                  s: Optional[Sequence[float]] = None) -> np.ndarray:
    """``h_j(s) = <J'(s_j α_j u_j), s_j α_j u_j>`` on annulus j."""
    k1 = len(solution.pieces)
    s = np.ones(k1) if s is None else np.asarray(s, dtype=float)
    if s.shape != (k1,) or np.any(s <= 0):
        raise ValueError(f"need {k1} positive scalings")
    out = np.empty(k1)
    for j, (pc, a) in enumerate(zip(solution.pieces, solution.alphas)):
        v = s[j] * a * pc.profile.values
        if not np.any(v):
            raise ZeroInput(f"piece {j} vanishes")
        out[j] = pairing(pc.grid, spec, v, v)
    return out


def count_nodes(u: RadialFunction, rel: float = 1e-10) -> tuple[int, np.ndarray]:
    """Sign changes among nodal values above ``rel * ||u||_inf``.

    Crossing radii come from the piecewise-linear interpolant between the
    two retained values bracketing each change.
    """
    vals = np.asarray(u.values, dtype=float)
    r = u.grid.nodes
    peak = np.max(np.abs(vals)) if vals.size else 0.0
    if not (peak > 0 and np.isfinite(peak)):
        raise AllBelowThreshold("profile is numerically zero")
    idx = np.flatnonzero(np.abs(vals) > rel * peak)
    s = np.sign(vals[idx])
    change = np.flatnonzero(s[1:] != s[:-1])
    radii = []
    for c in change:
        i, j = idx[c], idx[c + 1]
        seg = vals[i:j + 1]
        for m in range(len(seg) - 1):
            a, b = seg[m], seg[m + 1]
            if b == 0.0:
                radii.append(r[i + m + 1])
                break
            if a * b < 0:
                radii.append(r[i + m] + (r[i + m + 1] - r[i + m]) * a / (a - b))
                break
    return int(change.size), np.array(radii)


def flux_balance(spec: ProblemSpec, pieces: Sequence[AnnulusSolution]) -> np.ndarray:
    """``log|flux_left| - log|flux_right|`` at each internal node.

    Fluxes are the weak-form reactions at the shared Dirichlet node; the
    glued profile is a discrete critical point of J exactly when they
    balance.
    """
    out = np.empty(len(pieces) - 1)
    for j in range(1, len(pieces)):
        left = full_residual(pieces[j - 1].grid, spec, pieces[j - 1].profile.values)[-1]
        right = full_residual(pieces[j].grid, spec, pieces[j].profile.values)[0]
        with np.errstate(divide="ignore"):
            out[j - 1] = np.log(abs(left)) - np.log(abs(right))
    return out


@dataclass
class NodalSolution:
    nodes: NodeVector
    pieces: list[AnnulusSolution]
    alphas: np.ndarray
    glued: RadialFunction
    total_energy: float
    h_certificate: np.ndarray
    node_count_observed: int
    crossings: np.ndarray
    lead: int = 1
    converged: bool = True
    glued_residual: float = float("nan")
    flux_balance: np.ndarray = field(default_factory=lambda: np.zeros(0))
    nm_evaluations: int = 0
    polished: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.nodes.k

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "nodes": list(self.nodes.rho),
            "alphas": [float(a) for a in self.alphas],
            "c_k": self.total_energy,
            "pieces": [pc.to_dict() for pc in self.pieces],
            "h_certificate": [float(x) for x in self.h_certificate],
            "node_count_observed": self.node_count_observed,
            "crossings": [float(x) for x in self.crossings],
            "glued_residual": self.glued_residual,
            "flux_balance": [float(x) for x in self.flux_balance],
            "leading_sign": "+" if self.lead > 0 else "-",
            "polished": self.polished,
            "notes": list(self.notes),
            "converged": self.converged,
        }


def finalize(spec: ProblemSpec, nodes: NodeVector, pieces: Sequence[AnnulusSolution],
             lead: int, notes: Optional[list] = None, nm_evaluations: int = 0,
             polished: bool = False, cert_tol: float = 1e-6) -> NodalSolution:
    """Rescale pieces onto their Nehari sets, glue, and evaluate diagnostics."""
    notes = list(notes or [])
    alphas = np.array([project(pc.grid, spec, pc.profile).t_star for pc in pieces])
    glued = assemble_candidate(spec, nodes, pieces, alphas, lead)
    total = float(sum(energy(pc.grid, spec, a * pc.profile.values)
                      for pc, a in zip(pieces, alphas)))
    sol = NodalSolution(nodes, list(pieces), alphas, glued, total, np.zeros(len(pieces)),
                        0, np.zeros(0), lead, nm_evaluations=nm_evaluations,
                        polished=polished, notes=notes)
    sol.h_certificate = h_certificate(spec, sol)
    sol.node_count_observed, sol.crossings = count_nodes(glued)
    R = full_residual(glued.grid, spec, glued)
    R[~glued.grid.free] = 0.0
    nrm = norm_w1p(glued.grid, glued, spec.p)
    sol.glued_residual = float(np.max(np.abs(R)) / nrm ** (spec.p - 1))
    sol.flux_balance = flux_balance(spec, pieces)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if not tail_check(pieces[-1].profile, warn=False):
            notes.append("outermost piece has not decayed near r_max")
    ok = all(pc.converged for pc in pieces)
    if not ok:
        notes.append("annulus solver did not converge on some piece")
    if sol.node_count_observed != nodes.k:
        ok = False
        notes.append(f"observed {sol.node_count_observed} nodes, expected {nodes.k}")
    if np.max(np.abs(sol.h_certificate)) > cert_tol * nrm ** spec.p:
        ok = False
        notes.append("per-piece Nehari certificate above tolerance")
    sol.converged = ok
    return sol


# --------------------------------------------------------------------------
# node optimization

def _nodes_from_log_gaps(x: np.ndarray) -> np.ndarray:
    return np.cumsum(np.exp(x))


def _polish(spec, nodes, config, lead, cache, gap_min):
    """Solve ``flux_balance = 0`` with element counts frozen per piece."""
    edges = nodes.edges(spec.r_max)
    ms = [annulus_grid(spec, edges[j], edges[j + 1], config).M for j in range(nodes.k + 1)]

    def feasible(rho):
        g = np.diff(np.concatenate(([0.0], rho, [spec.r_max])))
        return bool(np.all(g >= gap_min))

    def fun(rho):
        if not feasible(rho):
            return np.full(nodes.k, 1e3)
        pieces = _solve_pieces(spec, NodeVector(tuple(rho)), config, lead, cache, ms)
        b = flux_balance(spec, pieces)
        return np.where(np.isfinite(b), b, 1e3)

    sol = optimize.root(fun, np.array(nodes.rho), method="hybr",
                        options={"xtol": config.polish_tol, "eps": 1e-8, "maxfev": 50 * (nodes.k + 1)})
    rho = np.array(sol.x)
    if not feasible(rho):
        return None
    bal = fun(rho)
    if np.max(np.abs(bal)) > 1e-4:
        return None
    return NodeVector(tuple(rho)), ms


def minimize_nodes(spec: ProblemSpec, k: int, config: Optional[SolverConfig] = None,
                   lead: int = 1, cache: Optional[GroundStateCache] = None) -> NodalSolution:
    """Approximate the k-node level and return the glued solution.

    ``lead`` is the sign of the innermost piece (``u(0)``).  Raises
    :class:`CollapseDetected` when the truncation cannot hold k+1 annuli of
    the minimum width, the optimizer drives a gap to that minimum, or the
    optimal outermost lobe is still above ``config.collapse_tail`` of its
    peak on the outer tenth of its annulus.
    """
    if k < 0:
        raise ValueError("k must be nonnegative")
    config = config or SolverConfig()
    lead = 1 if lead > 0 else -1
    cache = cache or GroundStateCache(spec, config)
    if k == 0:
        nodes = NodeVector(())
        return finalize(spec, nodes, _solve_pieces(spec, nodes, config, lead, cache), lead)

    gap_min = min_gap(spec, config)
    L0 = spec.r_max / (k + 1)
    if L0 < gap_min:
        raise CollapseDetected(
            f"r_max={spec.r_max:g} cannot hold {k + 1} annuli of width >= {gap_min:.3g}")

    evals = 0

    def objective(x):
        nonlocal evals
        rho = _nodes_from_log_gaps(x)
        g = np.diff(np.concatenate(([0.0], rho, [spec.r_max])))
        if np.any(g < gap_min):
            return np.inf
        evals += 1
        return total_energy(spec, NodeVector(tuple(rho)), config, lead, cache)

    x0 = np.full(k, math.log(L0))
    simplex = np.vstack([x0, x0 + config.nm_simplex * np.eye(k)])
    res = optimize.minimize(objective, x0, method="Nelder-Mead", options={
        "initial_simplex": simplex, "fatol": config.nm_fatol, "xatol": config.nm_xatol,
        "maxiter": config.nm_maxiter})
    if not np.isfinite(res.fun):
        raise CollapseDetected("no admissible node vector found")
    notes = []
    nodes = NodeVector(tuple(_nodes_from_log_gaps(res.x)))
    gaps = nodes.gaps(spec.r_max)
    if np.min(gaps) < 1.05 * gap_min:
        raise CollapseDetected(
            f"gap {np.min(gaps):.4g} collapsed to the minimum {gap_min:.4g}; "
            f"r_max too small for {k} nodes")
    # a lobe squeezed against r_max means the truncation, not the problem,
    # sets the node positions
    outer = _solve_pieces(spec, nodes, config, lead, cache)[-1]
    pressed = tail_ratio(outer.profile)
    if pressed > config.collapse_tail:
        raise CollapseDetected(
            f"outermost lobe on ({nodes.rho[-1]:.4g}, {spec.r_max:g}) keeps {pressed:.2g} of its "
            f"peak near r_max; r_max too small for {k} nodes")
    nm_ok = bool(res.success)
    if not nm_ok:
        notes.append(f"Nelder-Mead stopped: {res.message}")

    # node fluxes are exponentially small in the gaps, so the polish and the
    # final pieces need annulus residuals well below the default tolerance
    fine = GroundStateCache(spec, config.replace(tol=min(config.tol, 1e-10)))
    polished = False
    if config.polish:
        cand = nodes
        for _round in range(2):
            out = _polish(spec, cand, config, lead, fine, gap_min)
            if out is None:
                break
            cand, ms = out
        else:
            # E jumps by O(h^2) where element counts change, which the simplex
            # search can exploit; compare both node vectors on one set of counts
            e_pol, e_ref = (sum(pc.energy for pc in _solve_pieces(spec, nv, config, lead, fine, ms))
                            for nv in (cand, nodes))
            if e_pol <= e_ref + config.nm_fatol:
                nodes, polished = cand, True
        if not polished:
            notes.append("flux-balance polish rejected; keeping Nelder-Mead nodes")

    pieces = _solve_pieces(spec, nodes, config, lead, fine)
    sol = finalize(spec, nodes, pieces, lead, notes, evals, polished)
    if not nm_ok:
        sol.converged = False
    return sol
