"""One-signed Nehari ground states on an annulus ``Ω(rho, sigma)``.

The minimizer of ``J`` over the Nehari set of the annulus is computed by
Nehari-projected descent with Armijo backtracking, followed by a Newton
polish on the discrete Euler-Lagrange equation.  The descent direction is
the Riesz representative of the residual in the weighted H^1 inner product
(a Sobolev gradient); the raw residual is far too badly scaled on fine
meshes.

Sign is enforced by clamping the wrong-signed part to zero before every
projection, so the iterates stay in the cone ``{±u >= 0}``.
"""
from __future__ import annotations

import logging
import threading
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded, solve_banded

from .config import SolverConfig
from .discretization import (
    RadialFunction, RadialGrid, build_grid, energy, full_residual, gram_banded,
    jacobian_banded, lq_integral, norm_w1p, restrict_banded,
)
from .errors import DegenerateAnnulus, NoSignChange, ZeroInput
from .nehari import Ray, nehari_root, project_values
from .problem import ProblemSpec

log = logging.getLogger(__name__)


@dataclass
class AnnulusSolution:
    rho: float
    sigma: float
    sign: int
    profile: RadialFunction
    energy: float
    nehari_residual: float
    grad_residual: float
    iterations: int
    converged: bool = True

    @property
    def grid(self) -> RadialGrid:
        return self.profile.grid

    def to_dict(self) -> dict:
        return {
            "rho": self.rho, "sigma": self.sigma, "sign": "+" if self.sign > 0 else "-",
            "energy": self.energy, "nehari_residual": self.nehari_residual,
            "grad_residual": self.grad_residual, "iterations": self.iterations,
            "converged": self.converged,
        }


def element_size(spec: ProblemSpec, config: SolverConfig) -> float:
    return spec.r_max / config.grid


def annulus_grid(spec: ProblemSpec, rho: float, sigma: float, config: SolverConfig,
                 m: Optional[int] = None) -> RadialGrid:
    """Grid on ``[rho, sigma]`` inheriting the global element size."""
    h = element_size(spec, config)
    if sigma - rho < 4 * h * (1 - 1e-9):
        raise DegenerateAnnulus(
            f"annulus ({rho:.6g}, {sigma:.6g}) is narrower than 4 elements of size {h:.3g}")
    if m is None:
        m = max(4, int(round((sigma - rho) / h)))
    stretch = config.stretch if sigma >= spec.r_max else 1.0
    return build_grid(rho, sigma, m, stretch, spec.dim, left_dirichlet=rho > 0)


def _bump(r, a, b, peak_left):
    s = np.clip((r - a) / (b - a), 0.0, 1.0)
    return np.cos(0.5 * np.pi * s) if peak_left else np.sin(np.pi * s)


def _bump_candidates(grid: RadialGrid, min_width: float):
    """Supports ``(a, b)`` of trial bumps: the whole annulus first, then
    dyadically narrower windows at half-width offsets."""
    rho, sigma = grid.rho, grid.sigma
    L = sigma - rho
    out = [(rho, sigma)]
    w = L / 2
    while w >= min_width:
        if not grid.left_dirichlet:
            out.append((rho, rho + w))
        else:
            starts = np.arange(rho, sigma - w + 1e-12, w / 2)
            out.extend((a, a + w) for a in starts)
        w /= 2
    # snap to mesh nodes with a fixed element count per width, so that on a
    # uniform mesh equal-width windows sample identical bumps
    r = grid.nodes
    h = (sigma - rho) / grid.M
    snapped = []
    for a, b in out:
        nw = min(int(round((b - a) / h)), grid.M)
        i = min(int(np.argmin(np.abs(r - a))), grid.M - nw)
        snapped.append((float(r[i]), float(r[i + nw])))
    return snapped


def initial_profile(grid: RadialGrid, sign: int, config: SolverConfig,
                    spec: Optional[ProblemSpec] = None) -> np.ndarray:
    """Signed bump with seeded multiplicative noise, zero on Dirichlet ends.

    Without ``spec`` the bump spans the annulus (a quarter cosine when the
    inner end is free).  With ``spec`` the support is the candidate window
    of least Nehari energy; near-ties go to the window closest to the
    annulus midpoint.
    """
    r = grid.nodes
    rho, sigma = grid.rho, grid.sigma
    peak_left = not grid.left_dirichlet
    a, b = rho, sigma
    if spec is not None:
        h = float(np.max(grid.h))
        mid = 0.5 * (rho + sigma)
        best = None
        for (ca, cb) in _bump_candidates(grid, max(8 * h, 1.0)):
            trial = grid.apply_bc(_bump(r, ca, cb, peak_left))
            if np.count_nonzero(trial) < 3:
                continue
            try:
                ray = Ray(grid, spec, trial)
                e = ray.energy(nehari_root(ray, 1e-6))
            except (ZeroInput, NoSignChange):
                continue
            dist = abs(0.5 * (ca + cb) - mid)
            if best is None or e < best[0] * (1 - 1e-9) or (
                    e <= best[0] * (1 + 1e-9) and dist < best[1]):
                best = (e, dist, ca, cb)
        if best is not None:
            a, b = best[2], best[3]
    base = _bump(r, a, b, peak_left)
    rng = np.random.default_rng(config.seed)
    u = sign * base * (1.0 + config.noise * rng.standard_normal(r.size))
    return grid.apply_bc(u)


def _clamp(u: np.ndarray, sign: int) -> np.ndarray:
    return np.where(sign * u < 0, 0.0, u)


def _mirror(grid: RadialGrid, spec: ProblemSpec):
    """Reflection about the annulus midpoint, when the discrete problem has it.

    For N = 1 without radial weights the equation is autonomous, and on a
    uniform mesh with two Dirichlet ends the positive ground state is even
    about the midpoint.  Sliding the lobe costs only ~exp(-(sigma-rho)/2) in
    the residual, so on long annuli its position would otherwise be set by
    roundoff.
    """
    if grid.dim != 1 or not (grid.left_dirichlet and grid.right_dirichlet):
        return None
    if any(t.weight is not None for t in spec.nonlinearity.terms):
        return None
    if np.ptp(grid.h) > 1e-9 * grid.h.max():
        return None
    return lambda u: 0.5 * (u + u[::-1])


def _residual_norms(grid, spec, u):
    p = spec.p
    R = full_residual(grid, spec, u)
    nrm = norm_w1p(grid, u, p)
    neh = abs(float(R @ u)) / nrm ** p
    R[~grid.free] = 0.0
    return R, float(np.max(np.abs(R)) / nrm ** (p - 1)), neh


class _Descent:
    """Nehari-projected Sobolev-gradient descent with Armijo backtracking."""

    def __init__(self, grid, spec, sign, config, sym=None):
        self.grid, self.spec, self.sign, self.config = grid, spec, sign, config
        self.sym = sym
        self.free = grid.free
        self.chol = cholesky_banded(restrict_banded(gram_banded(grid), self.free)[:2], lower=False)

    def riesz(self, R):
        d = np.zeros_like(R)
        d[self.free] = cho_solve_banded((self.chol, False), R[self.free])
        return d

    def run(self, u, E, target, max_steps):
        cfg = self.config
        steps = 0
        gres = np.inf
        while steps < max_steps:
            R, gres, _ = _residual_norms(self.grid, self.spec, u)
            if gres < target:
                break
            d = -self.riesz(R)
            slope = float(R @ d)
            alpha = cfg.step0
            accepted = False
            while alpha > 1e-14:
                v = _clamp(u + alpha * d, self.sign)
                if self.sym is not None:
                    v = self.sym(v)
                try:
                    _, v = project_values(self.grid, self.spec, v)
                except (ZeroInput, NoSignChange):
                    alpha *= cfg.armijo_shrink
                    continue
                Ev = energy(self.grid, self.spec, v)
                if Ev <= E + cfg.armijo_c * alpha * slope:
                    accepted = True
                    break
                alpha *= cfg.armijo_shrink
            if not accepted:
                break
            u, E = v, Ev
            steps += 1
        return u, E, steps, gres


def _newton(grid, spec, sign, u, tol, max_steps=80, patience=10, sym=None):
    """Damped, non-monotone Newton on the free nodes; returns (u, steps, ok).

    For p != 2 the operator degenerates in the tail and Newton converges only
    linearly there, with occasional residual spikes; steps are accepted
    while the residual stays within 10x of the best seen.
    """
    free = grid.free
    R, gres, _ = _residual_norms(grid, spec, u)
    best_u, best_g, since_best = u, gres, 0
    steps = 0
    scale = np.max(np.abs(u))
    while steps < max_steps and since_best < patience:
        if gres < 1e-3 * tol:
            break
        ab = restrict_banded(jacobian_banded(grid, spec, u), free)
        try:
            delta = np.zeros_like(u)
            delta[free] = solve_banded((1, 1), ab, -R[free])
        except (np.linalg.LinAlgError, ValueError):
            break
        if not np.all(np.isfinite(delta)):
            break
        lam = 1.0
        while lam >= 1.0 / 64:
            v = u + lam * delta
            wrong = np.max(np.maximum(-sign * v, 0.0))
            if wrong <= 1e-6 * scale:
                v = _clamp(v, sign)
                if sym is not None:
                    v = sym(v)
                Rv, gv, _ = _residual_norms(grid, spec, v)
                if gv < 10 * best_g:
                    break
            lam *= 0.5
        else:
            break
        steps += 1
        u, R, gres = v, Rv, gv
        if gres < best_g:
            if best_g < tol and gres > 0.5 * best_g:
                best_u, best_g = u, gres
                break
            best_u, best_g, since_best = u, gres, 0
        else:
            since_best += 1
    return best_u, steps, best_g < tol


def solve_ground_state(spec: ProblemSpec, rho: float, sigma: float, sign: int = 1,
                       config: Optional[SolverConfig] = None,
                       initial: Optional[np.ndarray] = None,
                       grid: Optional[RadialGrid] = None) -> AnnulusSolution:
    """Minimize ``J`` over the Nehari set of ``Ω(rho, sigma)`` within ``{sign*u >= 0}``.

    ``initial`` (nodal values on ``grid``) warm-starts the iteration.  On
    hitting the iteration cap the best iterate is returned with
    ``converged=False``.
    """
    config = config or SolverConfig()
    sign = 1 if sign > 0 else -1
    if not (0 <= rho < sigma <= spec.r_max * (1 + 1e-12)):
        raise ValueError(f"need 0 <= rho < sigma <= r_max, got ({rho}, {sigma})")
    if grid is None:
        grid = annulus_grid(spec, rho, sigma, config)
    if initial is None:
        u = initial_profile(grid, sign, config, spec)
    else:
        u = grid.apply_bc(np.asarray(initial, dtype=float))
    sym = _mirror(grid, spec)
    u = _clamp(u, sign)
    if sym is not None:
        u = sym(u)
    _, u = project_values(grid, spec, u)
    E = energy(grid, spec, u)

    descent = _Descent(grid, spec, sign, config, sym)
    iterations = 0
    switch = config.newton_switch
    ok = False
    for _attempt in range(4):
        u, E, n, gres = descent.run(u, E, switch, config.max_iter - iterations)
        iterations += n
        budget = min(80, config.max_iter - iterations)
        u_new, n, ok = _newton(grid, spec, sign, u, config.tol, max_steps=budget, sym=sym)
        iterations += n
        if ok:
            u = u_new
            break
        switch *= 1e-2
        if iterations >= config.max_iter:
            break

    u = _clamp(u, sign)
    if sym is not None:
        u = sym(u)
    _, u = project_values(grid, spec, u)
    _, gres, neh = _residual_norms(grid, spec, u)
    converged = bool(gres <= config.tol and neh <= config.nehari_tol)
    if not converged:
        log.warning("annulus (%g, %g) not converged: residual %.3e, nehari %.3e",
                    rho, sigma, gres, neh)
    return AnnulusSolution(float(rho), float(sigma), sign, RadialFunction(grid, u),
                           energy(grid, spec, u), neh, gres, iterations, converged)


class GroundStateCache:
    """Memoized annulus solves keyed on rounded radii, sign and element count.

    Safe for concurrent use; also keeps the most recent profile per slot for
    warm starts.
    """

    def __init__(self, spec: ProblemSpec, config: SolverConfig, digits: int = 12):
        self.spec, self.config, self.digits = spec, config, digits
        self._store: dict = {}
        self._warm: dict = {}
        self._lock = threading.Lock()
        self.solves = 0

    def key(self, rho, sigma, sign, m=None):
        return (round(rho, self.digits), round(sigma, self.digits), sign, m)

    def solve(self, rho, sigma, sign, slot=None, m=None) -> AnnulusSolution:
        key = self.key(rho, sigma, sign, m)
        with self._lock:
            hit = self._store.get(key)
            warm = self._warm.get(slot) if slot is not None else None
        if hit is not None:
            return hit
        grid = annulus_grid(self.spec, rho, sigma, self.config, m)
        initial = None
        if warm is not None and warm.sign == sign:
            initial = _remap(warm.profile, grid)
        sol = solve_ground_state(self.spec, rho, sigma, sign, self.config, initial, grid)
        if initial is not None and not sol.converged:
            sol = solve_ground_state(self.spec, rho, sigma, sign, self.config, None, grid)
        with self._lock:
            self._store[key] = sol
            if slot is not None:
                self._warm[slot] = sol
            self.solves += 1
        return sol


def _remap(prof: RadialFunction, grid: RadialGrid) -> np.ndarray:
    """Carry a profile to another annulus through the normalized coordinate."""
    old = prof.grid
    s_old = (old.nodes - old.rho) / (old.sigma - old.rho)
    s_new = (grid.nodes - grid.rho) / (grid.sigma - grid.rho)
    return np.interp(s_new, s_old, prof.values)


def energy_map(spec: ProblemSpec, rho: float, sigma: float, sign: int = 1,
               config: Optional[SolverConfig] = None,
               cache: Optional[GroundStateCache] = None) -> float:
    """Ground-state level ``c^{sign}(rho, sigma)``."""
    if cache is None:
        return solve_ground_state(spec, rho, sigma, sign, config).energy
    return cache.solve(rho, sigma, sign).energy


@dataclass
class DeltaReport:
    ratio: float        # ||u||^p / ∫|u|^q
    delta: float        # ||u||
    collapsed: bool


def delta_lower_bound(spec: ProblemSpec, solution: AnnulusSolution,
                      running_min: Optional[float] = None) -> DeltaReport:
    """Empirical constants in ``delta^p <= ||u||^p <= C ∫|u|^q``.

    ``q`` is the largest exponent of the nonlinearity.  ``collapsed`` flags a
    norm below 10% of ``running_min``.
    """
    u = solution.profile
    if not np.any(u.values):
        raise ZeroInput("zero profile has no Nehari bound")
    q = max(spec.nonlinearity.exponents)
    nrm = norm_w1p(u.grid, u, spec.p)
    ratio = nrm ** spec.p / lq_integral(u.grid, u, q)
    collapsed = running_min is not None and nrm < 0.1 * running_min
    return DeltaReport(float(ratio), float(nrm), bool(collapsed))
