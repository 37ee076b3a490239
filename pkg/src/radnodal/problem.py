"""PDE instance: exponents, dimension, truncation radius and nonlinearity.

The equation is ``-Δ_p u + |u|^{p-2} u = f(|x|, u)`` on R^N, restricted to
radial profiles on ``[0, r_max]``.  Nonlinearities are finite sums of odd
pure powers ``λ_i(r) |u|^{q_i-2} u`` with ``q_i`` in the subcritical window
``(p, p*)``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import SpecError


def critical_exponent(p: float, dim: int) -> float:
    """Sobolev exponent ``Np/(N-p)`` for ``N > p``, infinity otherwise."""
    if dim > p:
        return dim * p / (dim - p)
    return math.inf


@dataclass(frozen=True)
class PowerTerm:
    """One term ``coef * weight(r) * |u|^{q-2} u`` of the nonlinearity."""

    coef: float
    q: float
    weight: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def lam(self, r):
        r = np.asarray(r, dtype=float)
        if self.weight is None:
            return self.coef * np.ones_like(r)
        return self.coef * np.asarray(self.weight(r), dtype=float) * np.ones_like(r)


@dataclass(frozen=True)
class Nonlinearity:
    terms: tuple[PowerTerm, ...]

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise SpecError("nonlinearity needs at least one term")
        for t in self.terms:
            if not (t.coef > 0 and math.isfinite(t.coef)):
                raise SpecError(f"coefficient must be positive and finite, got {t.coef}")

    @classmethod
    def power(cls, q: float, coef: float = 1.0) -> "Nonlinearity":
        return cls((PowerTerm(coef, q),))

    @property
    def exponents(self) -> tuple[float, ...]:
        return tuple(t.q for t in self.terms)

    def f(self, r, u):
        u = np.asarray(u, dtype=float)
        au = np.abs(u)
        out = np.zeros(np.broadcast(np.asarray(r), u).shape)
        for t in self.terms:
            out = out + t.lam(r) * au ** (t.q - 1.0) * np.sign(u)
        return out

    def F(self, r, u):
        au = np.abs(np.asarray(u, dtype=float))
        out = np.zeros(np.broadcast(np.asarray(r), au).shape)
        for t in self.terms:
            out = out + t.lam(r) * au ** t.q / t.q
        return out

    def df(self, r, u):
        """Derivative of ``f`` in ``u`` (used by the Newton solver)."""
        au = np.abs(np.asarray(u, dtype=float))
        out = np.zeros(np.broadcast(np.asarray(r), au).shape)
        for t in self.terms:
            out = out + t.lam(r) * (t.q - 1.0) * au ** (t.q - 2.0)
        return out


@dataclass(frozen=True)
class ProblemSpec:
    """Immutable description of one PDE instance.

    Construction validates ``p > 1``, ``dim >= 1``, ``r_max > 0``, that every
    exponent lies in ``(p, p*)`` and that radial weights are bounded and
    bounded away from zero on ``[0, r_max]``.
    """

    p: float
    dim: int
    nonlinearity: Nonlinearity
    r_max: float = 40.0

    def __post_init__(self):
        if not (self.p > 1 and math.isfinite(self.p)):
            raise SpecError(f"need p > 1, got {self.p}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise SpecError(f"need integer dim >= 1, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if not (self.r_max > 0 and math.isfinite(self.r_max)):
            raise SpecError(f"need r_max > 0, got {self.r_max}")
        ps = self.p_star
        for q in self.nonlinearity.exponents:
            if not (self.p < q < ps):
                raise SpecError(
                    f"exponent q={q} outside the subcritical window ({self.p}, {ps})"
                )
        rs = np.linspace(0.0, self.r_max, 257)
        for t in self.nonlinearity.terms:
            if t.weight is None:
                continue
            w = np.asarray(t.weight(rs), dtype=float) * np.ones_like(rs)
            if not np.all(np.isfinite(w)) or w.min() <= 0:
                raise SpecError("radial weights must be finite and bounded away from zero")

    @classmethod
    def power(cls, p: float, dim: int, q: float, coef: float = 1.0, r_max: float = 40.0):
        return cls(p, dim, Nonlinearity.power(q, coef), r_max)

    @property
    def p_star(self) -> float:
        return critical_exponent(self.p, self.dim)

    def f(self, r, u):
        return self.nonlinearity.f(r, u)

    def F(self, r, u):
        return self.nonlinearity.F(r, u)

    def df(self, r, u):
        return self.nonlinearity.df(r, u)

    def to_dict(self) -> dict:
        terms = []
        for t in self.nonlinearity.terms:
            if t.weight is not None:
                raise ValueError("radial weights are not serializable")
            terms.append({"lambda": t.coef, "q": t.q})
        return {"p": self.p, "dim": self.dim, "r_max": self.r_max, "terms": terms}

    @classmethod
    def from_dict(cls, d: dict) -> "ProblemSpec":
        try:
            terms = tuple(PowerTerm(float(t.get("lambda", 1.0)), float(t["q"])) for t in d["terms"])
            return cls(float(d["p"]), int(d["dim"]), Nonlinearity(terms), float(d.get("r_max", 40.0)))
        except (KeyError, TypeError) as exc:
            raise SpecError(f"malformed problem document: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "ProblemSpec":
        return cls.from_dict(json.loads(text))


def eval_f(spec: ProblemSpec, r, u):
    return spec.f(r, u)


def eval_F(spec: ProblemSpec, r, u):
    return spec.F(r, u)


def eval_f_branch(spec: ProblemSpec, branch: str, r, u):
    """Odd reflection of ``f`` about the branch's sign.

    ``plus``: ``f(r,u)`` for ``u >= 0`` and ``-f(r,-u)`` otherwise; ``minus``
    mirrors this for ``u <= 0``.
    """
    u = np.asarray(u, dtype=float)
    if branch in ("plus", "+"):
        keep = u >= 0
    elif branch in ("minus", "-"):
        keep = u <= 0
    else:
        raise ValueError(f"unknown branch {branch!r}")
    direct = spec.f(r, u)
    mirrored = -spec.f(r, -u)
    return np.where(keep, direct, mirrored)


def eval_F_branch(spec: ProblemSpec, branch: str, r, u):
    u = np.asarray(u, dtype=float)
    keep = u >= 0 if branch in ("plus", "+") else u <= 0
    return np.where(keep, spec.F(r, u), spec.F(r, -u))


# --------------------------------------------------------------------------
# assumption scan

@dataclass
class AssumptionReport:
    verdicts: dict[str, bool]
    notes: dict[str, str]
    t: np.ndarray
    ratio_f: np.ndarray  # f(r,t) / |t|^{p-2} t, worst case over sampled r
    ratio_F: np.ndarray  # F(r,t) / |t|^p
    f4_threshold: float
    ar_mu: Optional[float]
    radii: tuple[float, ...] = field(default=())

    @property
    def all_pass(self) -> bool:
        return all(self.verdicts.values())

    def format_table(self) -> str:
        lines = [f"{'assumption':<12}{'verdict':<9}witness", "-" * 60]
        for name, ok in self.verdicts.items():
            lines.append(f"{name:<12}{'pass' if ok else 'FAIL':<9}{self.notes.get(name, '')}")
        lines.append("")
        lines.append(f"{'t':>12} {'f/|t|^(p-2)t':>16} {'F/|t|^p':>16}")
        idx = np.unique(np.linspace(0, len(self.t) - 1, 9).astype(int))
        for i in idx:
            lines.append(f"{self.t[i]:12.4e} {self.ratio_f[i]:16.6e} {self.ratio_F[i]:16.6e}")
        return "\n".join(lines)


def _loglog_slope(t, y):
    return float(np.polyfit(np.log(t), np.log(y), 1)[0])


def check_assumptions(spec: ProblemSpec, t_min: float = 1e-4, t_max: float = 1e4,
                      n: int = 161, radii: Sequence[float] | None = None) -> AssumptionReport:
    """Sample the structural conditions on ``f`` over a logarithmic t-grid.

    Verdicts are numerical surrogates for asymptotic statements: limits are
    judged from log-log slopes over the first/last decade of the scan.
    """
    if not (0 < t_min < t_max) or n < 2:
        raise ValueError("scan grid must be nonempty with 0 < t_min < t_max")
    if t_min > 1e-4 or t_max < 1e4:
        raise ValueError("scan grid must span at least [1e-4, 1e4]")
    p = spec.p
    ps = spec.p_star
    for q in spec.nonlinearity.exponents:
        if not (p < q < ps):
            raise SpecError(f"exponent q={q} outside ({p}, {ps})")
    if radii is None:
        radii = (0.0, 0.5 * spec.r_max, spec.r_max)
    t = np.logspace(np.log10(t_min), np.log10(t_max), n)
    R = np.asarray(radii, dtype=float)[:, None]
    rf_pos = spec.f(R, t) / t ** (p - 1)
    rf_neg = spec.f(R, -t) / (-(t ** (p - 1)))
    rF = spec.F(R, t) / t ** p
    # worst case over radii: max near zero (f1), min at infinity (f3)
    ratio_f = rf_pos.max(axis=0)
    ratio_F = rF.min(axis=0)

    verdicts: dict[str, bool] = {}
    notes: dict[str, str] = {}

    low = t <= t_min * 10
    s1 = min(_loglog_slope(t[low], rf_pos[i, low]) for i in range(len(R)))
    ok1 = bool(np.all(spec.f(R, 0.0) == 0.0)) and s1 > 0
    verdicts["f1"] = ok1
    notes["f1"] = f"f(r,0)=0, ratio ~ t^{s1:.3g} as t->0 (max ratio {ratio_f[0]:.3e} at t={t[0]:.0e})"

    qmax = max(spec.nonlinearity.exponents)
    bound = np.abs(spec.f(R, t)) / (1.0 + t ** (qmax - 1.0))
    verdicts["f2"] = bool(qmax < ps and np.all(np.isfinite(bound)))
    notes["f2"] = f"q_max={qmax:g} < p*={ps:g}, C >= {bound.max():.4g}"

    high = t >= t_max / 10
    s3 = min(_loglog_slope(t[high], rF[i, high]) for i in range(len(R)))
    verdicts["f3"] = s3 > 0
    notes["f3"] = f"F/|t|^p ~ t^{s3:.3g} as t->inf (min ratio {ratio_F[-1]:.3e} at t={t[-1]:.0e})"

    # smallest sampled R beyond which the ratio is monotone on both signs
    inc = np.all(np.diff(rf_pos, axis=1) >= 0, axis=0)
    dec = np.all(np.diff(rf_neg, axis=1) >= 0, axis=0)
    good = inc & dec
    R4 = math.inf
    for i in range(len(good)):
        if np.all(good[i:]):
            R4 = float(t[i])
            break
    verdicts["f4"] = R4 <= t_max / 10
    notes["f4"] = f"ratio increasing for t >= R={R4:.3g}"

    sq = spec.F(R, t[high]) / t[high] ** 2
    s_sq = min(_loglog_slope(t[high], sq[i]) for i in range(len(R)))
    verdicts["SQ"] = s_sq > 0
    notes["SQ"] = f"F/t^2 ~ t^{s_sq:.3g} as t->inf"

    mu = min(spec.nonlinearity.exponents)
    big = t >= 1.0
    ft = spec.f(R, t[big]) * t[big]
    Ft = spec.F(R, t[big])
    ar = mu > p and bool(np.all(mu * Ft <= ft * (1 + 1e-12))) and bool(np.all(Ft > 0))
    verdicts["AR"] = ar
    notes["AR"] = f"mu={mu:g} > p={p:g}: {'holds' if ar else 'fails'} (mu F <= f t for t >= 1)"

    return AssumptionReport(verdicts, notes, t, ratio_f, ratio_F, R4, mu if ar else None,
                            tuple(float(x) for x in np.ravel(R)))
