"""Best-first branch and bound on top of :func:`solve_lp`."""

import heapq
import math
from dataclasses import dataclass

import numpy as np

from ..errors import NodeLimitError, UnboundedError
from .simplex import INFEASIBLE, OPTIMAL, UNBOUNDED, solve_lp

INT_TOL = 1e-7


@dataclass(frozen=True, eq=False)
class MilpSolution:
    status: str
    value: float = np.nan
    x: np.ndarray = None
    nodes: int = 0
    root_bound: float = np.nan

    @property
    def optimal(self):
        return self.status == OPTIMAL


def _most_fractional(x, integer):
    frac = np.abs(x - np.round(x))
    frac[~integer] = 0.0
    j = int(np.argmax(frac))  # argmax returns the lowest index among ties
    if frac[j] <= INT_TOL:
        return None
    return j


def solve_milp(inst, node_limit=10**7, gap=1e-6):
    """Globally minimize ``inst`` with integrality on ``inst.integer``.

    Nodes are explored best-first by their parent's LP bound (ties by
    creation order) and branched on the most fractional variable.  The
    instance must be bounded; an unbounded root relaxation raises
    :class:`UnboundedError`.
    """
    integer = inst.integer
    if not integer.any():
        sol = solve_lp(inst)
        if sol.status == UNBOUNDED:
            raise UnboundedError("LP relaxation is unbounded")
        return MilpSolution(sol.status, sol.value, sol.x, 1, sol.value)

    lb0 = inst.lb.copy()
    ub0 = inst.ub.copy()
    lb0[integer] = np.ceil(lb0[integer] - INT_TOL)
    ub0[integer] = np.floor(ub0[integer] + INT_TOL)

    best_val = math.inf
    best_x = None
    nodes = 0
    root_bound = np.nan
    seq = 0
    heap = [(-math.inf, seq, lb0, ub0)]
    while heap:
        bound, _, lb, ub = heapq.heappop(heap)
        if bound >= best_val - gap:
            break
        if nodes >= node_limit:
            raise NodeLimitError(f"node limit {node_limit} reached",
                                 incumbent=(best_val, best_x) if best_x is not None else None)
        nodes += 1
        if np.any(lb > ub):
            continue
        sol = solve_lp(inst.with_bounds(lb, ub))
        if sol.status == UNBOUNDED:
            raise UnboundedError("LP relaxation is unbounded; branch and bound needs a bounded instance")
        if sol.status == INFEASIBLE:
            continue
        if nodes == 1:
            root_bound = sol.value
        if sol.value >= best_val - gap:
            continue
        j = _most_fractional(sol.x, integer)
        if j is None:
            x = sol.x.copy()
            x[integer] = np.round(x[integer])
            val = float(inst.c @ x)
            if val < best_val:
                best_val, best_x = val, x
            continue
        down_ub = ub.copy()
        down_ub[j] = math.floor(sol.x[j])
        up_lb = lb.copy()
        up_lb[j] = math.ceil(sol.x[j])
        seq += 1
        heapq.heappush(heap, (sol.value, seq, lb, down_ub))
        seq += 1
        heapq.heappush(heap, (sol.value, seq, up_lb, ub))

    if best_x is None:
        return MilpSolution(INFEASIBLE, nodes=nodes, root_bound=root_bound)
    return MilpSolution(OPTIMAL, best_val, best_x, nodes, root_bound)
