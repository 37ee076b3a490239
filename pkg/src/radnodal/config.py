from __future__ import annotations

import os
from dataclasses import asdict, dataclass, fields


@dataclass(frozen=True)
class SolverConfig:
    # discretization: `grid` elements over [0, r_max]; annuli inherit that spacing
    grid: int = 2000
    stretch: float = 1.0
    # annulus solver
    tol: float = 1e-8            # sup-norm residual / ||u||^{p-1}
    nehari_tol: float = 1e-10    # |<J'(u),u>| / ||u||^p
    max_iter: int = 20000
    newton_switch: float = 1e-3  # descent hands over to Newton below this residual
    armijo_shrink: float = 0.5
    armijo_c: float = 1e-4
    step0: float = 1.0
    noise: float = 1e-3
    seed: int = 0
    # node optimization
    nm_simplex: float = 0.2
    nm_fatol: float = 1e-6
    nm_xatol: float = 1e-4
    nm_maxiter: int = 200
    polish: bool = True
    polish_tol: float = 1e-10
    min_gap_elements: int = 4
    min_gap: float = 0.0
    collapse_tail: float = 1e-2  # outermost lobe still above this fraction of its peak near r_max
    tau: float = 0.5
    # shooting oracle
    ode_rtol: float = 1e-10
    ode_h0: float = 1e-6
    decay_tol: float = 1e-3      # closest approach / |a| accepted as decay
    bisect_rtol: float = 1e-10
    oracle_grid: int = 8000
    out_dir: str = ""

    def __post_init__(self):
        for name in ("tol", "nehari_tol", "newton_switch", "armijo_c", "step0",
                     "nm_simplex", "nm_fatol", "nm_xatol", "polish_tol", "tau",
                     "ode_rtol", "ode_h0", "decay_tol", "bisect_rtol", "collapse_tail"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.armijo_shrink < 1:
            raise ValueError("armijo_shrink must lie in (0, 1)")
        if self.grid < 8:
            raise ValueError("grid needs at least 8 elements")
        if not 0 < self.tau < 1:
            raise ValueError("tau must lie in (0, 1)")
        if not self.out_dir:
            object.__setattr__(self, "out_dir", os.environ.get("RADNODAL_OUT", "radnodal_out"))

    def replace(self, **kw) -> "SolverConfig":
        d = asdict(self)
        d.update(kw)
        return SolverConfig(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("out_dir")
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SolverConfig":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})
