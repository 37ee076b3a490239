"""Run reports: JSON record plus profile files.

Every diagnostic in a report is recomputed from the emitted profiles, so a
report never carries stale solver state.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .config import SolverConfig
from .discretization import RadialFunction, energy, full_residual, norm_w1p
from .nodal import NodalSolution, count_nodes, flux_balance, h_certificate
from .problem import ProblemSpec


def _clean(x):
    """Plain Python scalars and lists for ``json``."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_clean(v) for v in x.tolist()]
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        x = float(x)
        return x if math.isfinite(x) else repr(x)
    return x


def _piece_residuals(spec: ProblemSpec, grid, values) -> tuple[float, float]:
    R = full_residual(grid, spec, values)
    nrm = norm_w1p(grid, values, spec.p)
    neh = abs(float(R @ values)) / nrm ** spec.p
    R[~grid.free] = 0.0
    return float(np.max(np.abs(R)) / nrm ** (spec.p - 1)), neh


def solution_record(spec: ProblemSpec, sol: NodalSolution) -> dict:
    """Serialized solution with residuals, certificate and node count recomputed."""
    pieces = []
    for pc, a in zip(sol.pieces, sol.alphas):
        v = a * pc.profile.values
        gres, neh = _piece_residuals(spec, pc.grid, v)
        d = pc.to_dict()
        d.update(energy=energy(pc.grid, spec, v), grad_residual=gres, nehari_residual=neh)
        pieces.append(d)
    n_obs, crossings = count_nodes(sol.glued)
    glued_res, _ = _piece_residuals(spec, sol.glued.grid, sol.glued.values)
    cert = h_certificate(spec, sol)
    nrm_p = norm_w1p(sol.glued.grid, sol.glued, spec.p) ** spec.p
    rec = {
        "k": sol.k,
        "leading_sign": "+" if sol.lead > 0 else "-",
        "nodes": list(sol.nodes.rho),
        "alphas": list(sol.alphas),
        "c_k": float(sum(p["energy"] for p in pieces)),
        "pieces": pieces,
        "h_certificate": list(cert),
        "h_certificate_rel": float(np.max(np.abs(cert)) / nrm_p),
        "node_count_observed": n_obs,
        "crossings": list(crossings),
        "glued_residual": glued_res,
        "flux_balance": list(flux_balance(spec, sol.pieces)),
        "polished": sol.polished,
        "nm_evaluations": sol.nm_evaluations,
        "notes": list(sol.notes),
        "converged": bool(sol.converged and n_obs == sol.k),
    }
    return _clean(rec)


@dataclass
class RunReport:
    command: str
    spec: ProblemSpec
    config: SolverConfig
    solution: Optional[dict] = None
    oracle: Optional[dict] = None
    converged: bool = False
    error: Optional[dict] = None
    timing: dict = field(default_factory=dict)

    def to_dict(self, timing: bool = True) -> dict:
        d = {
            "version": __version__,
            "command": self.command,
            "spec": self.spec.to_dict(),
            "config": self.config.to_dict(),
            "solution": self.solution,
            "oracle": self.oracle,
            "converged": self.converged,
            "error": self.error,
        }
        if timing:
            d["timing"] = dict(self.timing)
        return _clean(d)

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), indent=2) + "\n"


def write_profile(u: RadialFunction, out_dir: Path, stem: str = "profile") -> None:
    u.to_csv(out_dir / f"{stem}.csv")
    u.to_dat(out_dir / f"{stem}.dat")


def write_report(report: RunReport, out_dir, profile: Optional[RadialFunction] = None) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    if profile is not None:
        write_profile(profile, out)
    return out


def write_sweep(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["a", "node_count", "terminal_behavior"])
        for a, n, status in rows:
            w.writerow([repr(float(a)), int(n), status])
