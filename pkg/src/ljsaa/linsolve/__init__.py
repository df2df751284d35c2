"""Self-contained dense LP / MILP solvers and polyhedral helpers."""

from .geometry import chebyshev_center, enumerate_vertices, is_feasible
from .milp import MilpSolution, solve_milp
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, LpInstance, LpSolution, solve_lp

__all__ = [
    "INFEASIBLE", "OPTIMAL", "UNBOUNDED",
    "LpInstance", "LpSolution", "MilpSolution",
    "chebyshev_center", "enumerate_vertices", "is_feasible",
    "solve_lp", "solve_milp",
]
