"""Projection of a ray ``t -> t u`` onto the Nehari set.

``phi(t) = <J'(t u), u>`` is positive for small ``t`` and eventually negative
for superlinear ``f``; its unique positive root ``t*`` maximizes ``J(t u)``
over the ray.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .discretization import (
    RadialFunction, RadialGrid, _vals, grad_density, grad_flux, mass_flux,
)
from .errors import NoSignChange, ZeroInput
from .problem import ProblemSpec

T_MAX = 1e8
T_MIN = 1e-8
ZERO_NORM = 1e-14


class Ray:
    """Precomputed quadrature data for fast evaluation along ``t -> t u``."""

    def __init__(self, grid: RadialGrid, spec: ProblemSpec, u):
        self.grid = grid
        self.spec = spec
        self.u = _vals(u)
        self.g = np.diff(self.u) / grid.h
        self.uq = grid.at_quad(self.u)
        p = spec.p
        self.norm_p = float(np.sum(grid.elem_w * np.abs(self.g) ** p)
                            + np.sum(grid.qw * np.abs(self.uq) ** p))
        if self.norm_p ** (1 / p) < ZERO_NORM or not np.any(self.u):
            raise ZeroInput("profile is numerically zero")

    def phi(self, t: float) -> float:
        p, grid = self.spec.p, self.grid
        tg, tu = t * self.g, t * self.uq
        val = (np.sum(grid.elem_w * grad_flux(tg, p) * self.g)
               + np.sum(grid.qw * (mass_flux(tu, p) - self.spec.f(grid.qr, tu)) * self.uq))
        return float(val)

    def energy(self, t: float) -> float:
        p, grid = self.spec.p, self.grid
        tg, tu = t * self.g, t * self.uq
        return float(np.sum(grid.elem_w * grad_density(tg, p))
                     + np.sum(grid.qw * (np.abs(tu) ** p / p - self.spec.F(grid.qr, tu))))


def phi(grid: RadialGrid, spec: ProblemSpec, u, t: float) -> float:
    """``<J'(t u), u>``."""
    if t <= 0:
        raise ValueError("t must be positive")
    return Ray(grid, spec, u).phi(t)


def nehari_root(ray: Ray, rel_width: float = 1e-12) -> float:
    """Bracket ``t*`` geometrically from ``t = 1`` and bisect."""
    f1 = ray.phi(1.0)
    if f1 == 0.0:
        return 1.0
    if f1 > 0:
        lo, hi = 1.0, 2.0
        while ray.phi(hi) > 0:
            lo, hi = hi, 2.0 * hi
            if hi > T_MAX:
                raise NoSignChange(f"phi stays positive up to t={T_MAX:g}; f not superlinear?")
    else:
        lo, hi = 0.5, 1.0
        while ray.phi(lo) <= 0:
            lo, hi = 0.5 * lo, lo
            if lo < T_MIN:
                raise NoSignChange(f"phi stays nonpositive down to t={T_MIN:g}")
    while hi - lo > rel_width * hi:
        mid = 0.5 * (lo + hi)
        if ray.phi(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


@dataclass
class ScalingResult:
    t_star: float
    projected: RadialFunction
    energy_at_t_star: float
    phi_samples: Optional[np.ndarray] = field(default=None, repr=False)


def project(grid: RadialGrid, spec: ProblemSpec, u, rel_width: float = 1e-12,
            samples: int = 0) -> ScalingResult:
    """Rescale ``u`` onto the Nehari set.

    With ``samples > 0`` a table of ``(t, phi(t))`` on ``[t*/10, 10 t*]`` is
    attached for diagnostics.
    """
    ray = Ray(grid, spec, u)
    t = nehari_root(ray, rel_width)
    table = None
    if samples:
        ts = np.geomspace(t / 10, t * 10, samples)
        table = np.column_stack([ts, [ray.phi(s) for s in ts]])
    return ScalingResult(t, RadialFunction(grid, t * ray.u), ray.energy(t), table)


def project_values(grid: RadialGrid, spec: ProblemSpec, u: np.ndarray) -> tuple[float, np.ndarray]:
    ray = Ray(grid, spec, u)
    t = nehari_root(ray)
    return t, t * ray.u


@dataclass
class UniquenessReport:
    t_star: float
    sign_changes: int
    unimodal: bool
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_unique_max(grid: RadialGrid, spec: ProblemSpec, u,
                      t_grid: np.ndarray | None = None) -> UniquenessReport:
    """Sampled check that ``phi`` changes sign once and ``J(t u)`` is unimodal."""
    ray = Ray(grid, spec, u)
    t_star = nehari_root(ray)
    if t_grid is None:
        t_grid = np.geomspace(1e-3 * t_star, 1e3 * t_star, 200)
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    ph = np.array([ray.phi(t) for t in t_grid])
    en = np.array([ray.energy(t) for t in t_grid])
    sgn = np.sign(ph)
    sgn = sgn[sgn != 0]
    changes = int(np.count_nonzero(np.diff(sgn)))
    # unimodal: nondecreasing up to the argmax, nonincreasing after
    k = int(np.argmax(en))
    scale = max(abs(en).max(), 1e-300)
    tol = 1e-12 * scale
    up = np.all(np.diff(en[: k + 1]) >= -tol)
    down = np.all(np.diff(en[k:]) <= tol)
    violations = []
    if changes != 1:
        violations.append(f"phi changes sign {changes} times on the sample")
    if not (up and down):
        violations.append("J(t u) is not unimodal on the sample")
    return UniquenessReport(t_star, changes, bool(up and down), violations)
