"""P1 finite elements for radial profiles with the ``r^{N-1}`` weight.

All integrals are taken per unit solid angle: ``∫_ρ^σ (...) r^{N-1} dr``
without the sphere-surface constant.  Profiles are piecewise linear, so the
gradient is constant per element; two Gauss points per element carry the
weight ``r^{N-1}``.

Functions accept either a :class:`RadialFunction` or a plain array of nodal
values.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .problem import ProblemSpec

GAUSS_XI = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
# regularization of |u'|^{p-2} for p != 2
GRAD_EPS = 1e-12


class TailWarning(UserWarning):
    """Profile has not decayed near the truncation radius."""


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Mesh ``r_0 < ... < r_M`` with weighted two-point Gauss quadrature.

    ``left_dirichlet``/``right_dirichlet`` mark zero Dirichlet ends; a free
    end carries the natural condition.
    """

    nodes: np.ndarray
    dim: int = 1
    left_dirichlet: bool = False
    right_dirichlet: bool = True
    h: np.ndarray = field(init=False, repr=False)
    qr: np.ndarray = field(init=False, repr=False)
    qw: np.ndarray = field(init=False, repr=False)
    elem_w: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 3:
            raise ValueError("grid needs at least 2 elements")
        h = np.diff(nodes)
        if np.any(h <= 0):
            raise ValueError("grid nodes must be strictly increasing")
        if nodes[0] < 0:
            raise ValueError("radii must be nonnegative")
        nodes.setflags(write=False)
        qr = nodes[:-1, None] + h[:, None] * GAUSS_XI[None, :]
        qw = 0.5 * h[:, None] * qr ** (self.dim - 1)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "qr", qr)
        object.__setattr__(self, "qw", qw)
        object.__setattr__(self, "elem_w", qw.sum(axis=1))

    @property
    def M(self) -> int:
        return self.nodes.size - 1

    @property
    def rho(self) -> float:
        return float(self.nodes[0])

    @property
    def sigma(self) -> float:
        return float(self.nodes[-1])

    @property
    def free(self) -> np.ndarray:
        mask = np.ones(self.nodes.size, dtype=bool)
        if self.left_dirichlet:
            mask[0] = False
        if self.right_dirichlet:
            mask[-1] = False
        return mask

    def apply_bc(self, u: np.ndarray) -> np.ndarray:
        u = np.array(u, dtype=float)
        u[~self.free] = 0.0
        return u

    def at_quad(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u)
        return u[:-1, None] * (1.0 - GAUSS_XI)[None, :] + u[1:, None] * GAUSS_XI[None, :]

    def integrate(self, values_at_quad: np.ndarray) -> float:
        return float(np.sum(self.qw * values_at_quad))


def build_grid(rho: float, sigma: float, m: int, stretch: float = 1.0, dim: int = 1,
               left_dirichlet: bool | None = None, right_dirichlet: bool = True) -> RadialGrid:
    """Graded mesh on ``[rho, sigma]`` with ``m`` elements.

    For ``stretch > 1`` element lengths grow geometrically by that factor
    toward ``sigma``.  The inner end is Dirichlet iff ``rho > 0`` unless
    overridden.
    """
    if not (0 <= rho < sigma) or not np.isfinite(sigma):
        raise ValueError(f"need 0 <= rho < sigma < inf, got rho={rho}, sigma={sigma}")
    if m < 2:
        raise ValueError(f"need m >= 2 elements, got {m}")
    if stretch <= 0:
        raise ValueError("stretch must be positive")
    if stretch == 1.0:
        nodes = np.linspace(rho, sigma, m + 1)
    else:
        sizes = stretch ** np.arange(m, dtype=float)
        nodes = rho + (sigma - rho) * np.concatenate(([0.0], np.cumsum(sizes) / sizes.sum()))
        nodes[-1] = sigma
    if left_dirichlet is None:
        left_dirichlet = rho > 0
    return RadialGrid(nodes, dim, left_dirichlet, right_dirichlet)


@dataclass
class RadialFunction:
    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.nodes.shape:
            raise ValueError("values must have one entry per grid node")

    @property
    def r(self) -> np.ndarray:
        return self.grid.nodes

    def scaled(self, c: float) -> "RadialFunction":
        return RadialFunction(self.grid, c * self.values)

    def __neg__(self) -> "RadialFunction":
        return self.scaled(-1.0)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["r", "u"])
            for r, u in zip(self.grid.nodes, self.values):
                w.writerow([repr(float(r)), repr(float(u))])

    def to_dat(self, path) -> None:
        """Two-column whitespace file for gnuplot."""
        np.savetxt(path, np.column_stack([self.grid.nodes, self.values]), fmt="%.17g",
                   header="r u")

    @classmethod
    def from_csv(cls, path, dim: int = 1, left_dirichlet: bool = False,
                 right_dirichlet: bool = True) -> "RadialFunction":
        data = np.loadtxt(Path(path), delimiter=",", skiprows=1, ndmin=2)
        grid = RadialGrid(data[:, 0], dim, left_dirichlet, right_dirichlet)
        return cls(grid, data[:, 1])


def _vals(u) -> np.ndarray:
    if isinstance(u, RadialFunction):
        return u.values
    return np.asarray(u, dtype=float)


# pointwise constitutive pieces -------------------------------------------

def grad_flux(g, p):
    """``|g|^{p-2} g`` (regularized for p != 2)."""
    if p == 2:
        return g
    return (g * g + GRAD_EPS ** 2) ** ((p - 2) / 2) * g


def grad_flux_deriv(g, p):
    if p == 2:
        return np.ones_like(g)
    s = g * g + GRAD_EPS ** 2
    return s ** ((p - 2) / 2) + (p - 2) * g * g * s ** ((p - 4) / 2)


def grad_density(g, p):
    if p == 2:
        return 0.5 * g * g
    return ((g * g + GRAD_EPS ** 2) ** (p / 2) - GRAD_EPS ** p) / p


def mass_flux(u, p):
    return np.abs(u) ** (p - 1) * np.sign(u)


def mass_flux_deriv(u, p):
    return (p - 1) * np.abs(u) ** (p - 2)


# functionals --------------------------------------------------------------

def energy(grid: RadialGrid, spec: ProblemSpec, u) -> float:
    """Discrete ``J(u) = ∫ [|u'|^p/p + |u|^p/p - F(r,u)] r^{N-1} dr``."""
    u = _vals(u)
    p = spec.p
    g = np.diff(u) / grid.h
    uq = grid.at_quad(u)
    e_grad = np.sum(grid.elem_w * grad_density(g, p))
    e_rest = np.sum(grid.qw * (np.abs(uq) ** p / p - spec.F(grid.qr, uq)))
    return float(e_grad + e_rest)


def full_residual(grid: RadialGrid, spec: ProblemSpec, u) -> np.ndarray:
    """Pairings ``<J'(u), φ_i>`` against every hat function, boundary included."""
    u = _vals(u)
    p = spec.p
    g = np.diff(u) / grid.h
    flux = grad_flux(g, p) * grid.elem_w / grid.h
    uq = grid.at_quad(u)
    s = grid.qw * (mass_flux(uq, p) - spec.f(grid.qr, uq))
    R = np.zeros_like(u)
    R[:-1] += -flux + s @ (1.0 - GAUSS_XI)
    R[1:] += flux + s @ GAUSS_XI
    return R


def residual(grid: RadialGrid, spec: ProblemSpec, u) -> np.ndarray:
    """Discrete weak-form gradient of J with Dirichlet entries zeroed."""
    R = full_residual(grid, spec, u)
    R[~grid.free] = 0.0
    return R


def pairing(grid: RadialGrid, spec: ProblemSpec, u, v) -> float:
    """``<J'(u), v> = ∫ [|u'|^{p-2}u'v' + |u|^{p-2}uv - f(r,u)v] r^{N-1} dr``."""
    return float(full_residual(grid, spec, u) @ _vals(v))


def norm_w1p(grid: RadialGrid, u, p: float) -> float:
    u = _vals(u)
    g = np.diff(u) / grid.h
    uq = grid.at_quad(u)
    total = np.sum(grid.elem_w * np.abs(g) ** p) + np.sum(grid.qw * np.abs(uq) ** p)
    return float(total ** (1.0 / p))


def lq_integral(grid: RadialGrid, u, q: float) -> float:
    """``∫ |u|^q r^{N-1} dr``."""
    return grid.integrate(np.abs(grid.at_quad(_vals(u))) ** q)


def jacobian_banded(grid: RadialGrid, spec: ProblemSpec, u) -> np.ndarray:
    """Tridiagonal Hessian of the discrete energy in ``solve_banded`` layout."""
    u = _vals(u)
    p = spec.p
    g = np.diff(u) / grid.h
    k = grad_flux_deriv(g, p) * grid.elem_w / grid.h ** 2
    uq = grid.at_quad(u)
    c = grid.qw * (mass_flux_deriv(uq, p) - spec.df(grid.qr, uq))
    a, b = 1.0 - GAUSS_XI, GAUSS_XI
    m00 = c @ (a * a)
    m11 = c @ (b * b)
    m01 = c @ (a * b)
    n = u.size
    ab = np.zeros((3, n))
    ab[1, :-1] += k + m00
    ab[1, 1:] += k + m11
    ab[0, 1:] = -k + m01
    ab[2, :-1] = -k + m01
    return ab


def gram_banded(grid: RadialGrid) -> np.ndarray:
    """Weighted H^1 Gram matrix (stiffness + mass) in ``solve_banded`` layout."""
    k = grid.elem_w / grid.h ** 2
    a, b = 1.0 - GAUSS_XI, GAUSS_XI
    n = grid.nodes.size
    ab = np.zeros((3, n))
    ab[1, :-1] += k + grid.qw @ (a * a)
    ab[1, 1:] += k + grid.qw @ (b * b)
    off = -k + grid.qw @ (a * b)
    ab[0, 1:] = off
    ab[2, :-1] = off
    return ab


def restrict_banded(ab: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """Drop Dirichlet rows/columns (they sit at the ends only)."""
    idx = np.flatnonzero(mask)
    lo, hi = idx[0], idx[-1] + 1
    sub = ab[:, lo:hi].copy()
    sub[0, 0] = 0.0
    sub[2, -1] = 0.0
    return sub


def tail_ratio(u, fraction: float = 0.1) -> float:
    """``max |u|`` on the outer ``fraction`` of the grid over ``||u||_inf``."""
    if not isinstance(u, RadialFunction):
        raise TypeError("tail_ratio needs a RadialFunction")
    r = u.grid.nodes
    vals = np.abs(u.values)
    peak = vals.max()
    if peak == 0:
        return 0.0
    cut = r[-1] - fraction * (r[-1] - r[0])
    return float(vals[r >= cut].max() / peak)


def tail_check(u, fraction: float = 0.1, rel: float = 1e-6, warn: bool = True) -> bool:
    """True if ``|u| <= rel * ||u||_inf`` on the outer ``fraction`` of the grid."""
    if not isinstance(u, RadialFunction):
        raise TypeError("tail_check needs a RadialFunction")
    r = u.grid.nodes
    vals = np.abs(u.values)
    cut = r[-1] - fraction * (r[-1] - r[0])
    ok = tail_ratio(u, fraction) <= rel
    if not ok and warn:
        warnings.warn(
            f"profile not decayed on [{cut:.4g}, {r[-1]:.4g}]: "
            f"max |u| = {vals[r >= cut].max():.3e} vs ||u||_inf = {vals.max():.3e}",
            TailWarning, stacklevel=2)
    return ok
