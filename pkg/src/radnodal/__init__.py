"""Radial nodal solutions of -Δ_p u + |u|^{p-2} u = f(|x|, u) on R^N.

Per-annulus Nehari ground states are glued with alternating signs and the
node radii optimized; a shooting oracle integrates the radial ODE
independently for cross-checks.
"""

__version__ = "0.1.0"

from .config import SolverConfig
from .discretization import RadialFunction, RadialGrid, build_grid
from .errors import SolverError, SpecError
from .ground_state import AnnulusSolution, solve_ground_state
from .nodal import NodalSolution, NodeVector, count_nodes, minimize_nodes
from .problem import Nonlinearity, PowerTerm, ProblemSpec, check_assumptions
from .shooting import find_k_node_profile, shoot

__all__ = [
    "AnnulusSolution", "NodalSolution", "NodeVector", "Nonlinearity", "PowerTerm",
    "ProblemSpec", "RadialFunction", "RadialGrid", "SolverConfig", "SolverError", "SpecError",
    "build_grid", "check_assumptions", "count_nodes", "find_k_node_profile", "minimize_nodes",
    "shoot", "solve_ground_state",
]
