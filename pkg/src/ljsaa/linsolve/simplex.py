"""Dense bounded-variable primal simplex.

Problems are taken in the form ``min c.z  s.t.  G z <= g,  lb <= z <= ub``.
Rows with a single nonzero are folded into the bounds before solving, so a
polyhedron that lists its bounds as rows costs nothing extra.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError, NumericalError

FEAS_TOL = 1e-8
COST_TOL = 1e-9
PIVOT_TOL = 1e-9
BLAND_AFTER = 1000
REFACTOR_EVERY = 64

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True, eq=False)
class LpInstance:
    """``min c.z`` over ``G z <= g`` and optional per-variable bounds.

    ``integer`` flags are ignored by :func:`solve_lp` and honoured by
    :func:`solve_milp`.
    """

    c: np.ndarray
    G: np.ndarray
    g: np.ndarray
    lb: np.ndarray = None
    ub: np.ndarray = None
    integer: np.ndarray = None

    def __post_init__(self):
        c = np.array(self.c, dtype=float).ravel()
        n = c.size
        G = np.array(self.G, dtype=float).reshape(-1, n) if np.size(self.G) else np.zeros((0, n))
        g = np.array(self.g, dtype=float).ravel()
        if G.shape != (g.size, n):
            raise DimensionError(f"objective length {n} does not match G {G.shape} / g {g.shape}")
        lb = np.full(n, -np.inf) if self.lb is None else np.array(self.lb, dtype=float).ravel()
        ub = np.full(n, np.inf) if self.ub is None else np.array(self.ub, dtype=float).ravel()
        integer = (np.zeros(n, dtype=bool) if self.integer is None
                   else np.array(self.integer, dtype=bool).ravel())
        if lb.size != n or ub.size != n or integer.size != n:
            raise DimensionError("bounds / integrality length must equal objective length")
        for name, arr in (("c", c), ("G", G), ("g", g), ("lb", lb), ("ub", ub), ("integer", integer)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @classmethod
    def from_polyhedron(cls, c, P, integer=None):
        return cls(c, P.G, P.g, integer=integer)

    @property
    def n(self):
        return self.c.size

    def with_bounds(self, lb, ub):
        return LpInstance(self.c, self.G, self.g, lb, ub, self.integer)


@dataclass(frozen=True, eq=False)
class LpSolution:
    status: str
    value: float = np.nan
    x: np.ndarray = None
    active: tuple = field(default=())
    iterations: int = 0

    @property
    def optimal(self):
        return self.status == OPTIMAL


def _presolve(inst):
    """Fold singleton rows into bounds; return remaining rows or None if infeasible."""
    G, g = inst.G, inst.g
    lb, ub = inst.lb.copy(), inst.ub.copy()
    nnz = np.count_nonzero(G, axis=1)
    for i in np.flatnonzero(nnz == 0):
        if g[i] < -FEAS_TOL * max(1.0, abs(g[i])):
            return None
    for i in np.flatnonzero(nnz == 1):
        j = int(np.flatnonzero(G[i])[0])
        a = G[i, j]
        if a > 0:
            ub[j] = min(ub[j], g[i] / a)
        else:
            lb[j] = max(lb[j], g[i] / a)
    keep = nnz > 1
    return G[keep], g[keep], lb, ub


class _Tableau:
    """Full dense tableau ``B^-1 A`` with bounded nonbasic variables."""

    def __init__(self, A, b, u, basis):
        self.A = A
        self.b = b
        self.u = u
        self.m, self.N = A.shape
        self.basis = np.array(basis, dtype=np.intp)
        self.at_upper = np.zeros(self.N, dtype=bool)
        self.T = A.copy()
        self.beta = b.copy()
        self.since_refactor = 0
        self.iterations = 0
        self.bland = False
        self.degenerate_run = 0

    def refactor(self):
        B = self.A[:, self.basis]
        nonbasic_up = self.at_upper.copy()
        nonbasic_up[self.basis] = False
        rhs = self.b - self.A[:, nonbasic_up] @ self.u[nonbasic_up]
        try:
            self.T = np.linalg.solve(B, self.A)
            self.beta = np.linalg.solve(B, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("singular basis during refactorization") from exc
        if not (np.all(np.isfinite(self.T)) and np.all(np.isfinite(self.beta))):
            raise NumericalError("non-finite tableau after refactorization")
        self.T[:, self.basis] = np.eye(self.m)
        self.since_refactor = 0

    def pivot(self, r, j):
        T = self.T
        piv = T[r, j]
        T[r] /= piv
        col = T[:, j].copy()
        col[r] = 0.0
        T -= np.outer(col, T[r])
        T[:, j] = 0.0
        T[r, j] = 1.0
        self.basis[r] = j
        self.since_refactor += 1

    def run(self, cost, max_iter):
        """Iterate to optimality for ``cost``; return OPTIMAL or UNBOUNDED."""
        u = self.u
        ctol = COST_TOL * max(1.0, float(np.max(np.abs(cost))) if cost.size else 1.0)
        is_basic = np.zeros(self.N, dtype=bool)
        while True:
            if self.iterations >= max_iter:
                raise NumericalError(f"simplex iteration limit {max_iter} reached")
            if self.since_refactor >= REFACTOR_EVERY:
                self.refactor()
            d = cost - cost[self.basis] @ self.T
            is_basic[:] = False
            is_basic[self.basis] = True
            movable = ~is_basic & (u > 0)
            cand = movable & ((~self.at_upper & (d < -ctol)) | (self.at_upper & (d > ctol)))
            idx = np.flatnonzero(cand)
            if idx.size == 0:
                return OPTIMAL
            if self.bland:
                j = int(idx[0])
            else:
                j = int(idx[np.argmax(np.abs(d[idx]))])
            s = -1.0 if self.at_upper[j] else 1.0
            sa = s * self.T[:, j]
            beta = self.beta
            ub_basic = u[self.basis]
            theta = np.full(self.m, np.inf)
            dec = sa > PIVOT_TOL
            theta[dec] = np.maximum(beta[dec], 0.0) / sa[dec]
            inc = (sa < -PIVOT_TOL) & np.isfinite(ub_basic)
            theta[inc] = np.maximum(ub_basic[inc] - beta[inc], 0.0) / (-sa[inc])
            tmin = float(np.min(theta)) if self.m else np.inf
            self.iterations += 1
            if u[j] <= tmin:
                if not np.isfinite(u[j]):
                    return UNBOUNDED
                self.beta = beta - u[j] * sa
                self.at_upper[j] = not self.at_upper[j]
                self.degenerate_run = 0
                continue
            ties = np.flatnonzero(theta <= tmin + 1e-12 * max(1.0, tmin))
            if self.bland:
                r = int(ties[np.argmin(self.basis[ties])])
            else:
                r = int(ties[np.argmax(np.abs(sa[ties]))])
            leaving = self.basis[r]
            leaves_upper = bool(sa[r] < 0)
            entering_value = tmin if s > 0 else u[j] - tmin
            self.beta = beta - tmin * sa
            self.beta[r] = entering_value
            self.pivot(r, j)
            self.at_upper[j] = False
            self.at_upper[leaving] = leaves_upper
            if tmin <= 1e-12:
                self.degenerate_run += 1
                if self.degenerate_run >= BLAND_AFTER:
                    self.bland = True
            else:
                self.degenerate_run = 0

    def values(self):
        x = np.where(self.at_upper, self.u, 0.0)
        x[self.basis] = self.beta
        return x


def solve_lp(inst, max_iter=None):
    """Solve the LP relaxation of ``inst``.

    Returns an :class:`LpSolution`; infeasibility and unboundedness are
    reported through ``status``.  Loss of numerical control raises
    :class:`NumericalError`.
    """
    n = inst.n
    pre = _presolve(inst)
    if pre is None:
        return LpSolution(INFEASIBLE)
    G, g, lb, ub = pre
    if np.any(lb > ub + FEAS_TOL * np.maximum(1.0, np.abs(lb))):
        return LpSolution(INFEASIBLE)
    ub = np.maximum(ub, lb)

    # z = offset + M zp with zp >= 0
    cols = []
    offset = np.zeros(n)
    uprime = []
    for j in range(n):
        if np.isfinite(lb[j]):
            offset[j] = lb[j]
            cols.append((j, 1.0))
            uprime.append(ub[j] - lb[j])
        elif np.isfinite(ub[j]):
            offset[j] = ub[j]
            cols.append((j, -1.0))
            uprime.append(np.inf)
        else:
            cols.append((j, 1.0))
            uprime.append(np.inf)
            cols.append((j, -1.0))
            uprime.append(np.inf)
    npr = len(cols)
    M = np.zeros((n, npr))
    for k, (j, sgn) in enumerate(cols):
        M[j, k] = sgn
    Ap = G @ M
    bp = g - G @ offset
    cp = inst.c @ M
    m = Ap.shape[0]

    scale = np.max(np.abs(Ap), axis=1) if m else np.zeros(0)
    scale[scale == 0] = 1.0
    Ap = Ap / scale[:, None]
    bp = bp / scale

    flip = bp < 0
    n_art = int(np.count_nonzero(flip))
    A = np.zeros((m, npr + m + n_art))
    A[:, :npr] = Ap
    A[np.arange(m), npr + np.arange(m)] = 1.0
    A[flip] *= -1.0
    b = np.where(flip, -bp, bp)
    art_rows = np.flatnonzero(flip)
    art_cols = npr + m + np.arange(n_art)
    A[art_rows, art_cols] = 1.0
    u = np.concatenate([np.array(uprime, dtype=float), np.full(m + n_art, np.inf)])
    basis = npr + np.arange(m)
    basis[art_rows] = art_cols

    tab = _Tableau(A, b, u, basis)
    if max_iter is None:
        max_iter = 50 * (m + A.shape[1]) + 1000

    if n_art:
        cost1 = np.zeros(A.shape[1])
        cost1[art_cols] = 1.0
        tab.run(cost1, max_iter)
        tab.refactor()
        infeas = float(np.sum(tab.values()[art_cols]))
        if infeas > FEAS_TOL * max(1.0, float(np.max(np.abs(b)))):
            return LpSolution(INFEASIBLE, iterations=tab.iterations)
        u[art_cols] = 0.0
        tab.at_upper[art_cols] = False
        is_art = np.zeros(A.shape[1], dtype=bool)
        is_art[art_cols] = True
        for r in range(m):
            if not is_art[tab.basis[r]]:
                continue
            is_basic = np.zeros(A.shape[1], dtype=bool)
            is_basic[tab.basis] = True
            row = np.abs(tab.T[r])
            row[is_art | is_basic] = 0.0
            j = int(np.argmax(row))
            if row[j] > 1e-7:
                val = u[j] if tab.at_upper[j] else 0.0
                tab.pivot(r, j)
                tab.beta[r] = val
                tab.at_upper[j] = False
        tab.bland = False
        tab.degenerate_run = 0

    cost2 = np.zeros(A.shape[1])
    cost2[:npr] = cp
    status = tab.run(cost2, max_iter)
    if status == UNBOUNDED:
        return LpSolution(UNBOUNDED, iterations=tab.iterations)
    tab.refactor()
    zp = tab.values()[:npr]
    z = offset + M @ zp
    # guard against roundoff pushing a bounded variable outside its box
    z = np.minimum(np.maximum(z, inst.lb), inst.ub)
    value = float(inst.c @ z)
    slack = inst.g - inst.G @ z
    rn = np.maximum(np.linalg.norm(inst.G, axis=1), 1e-300)
    active = tuple(int(i) for i in np.flatnonzero(
        slack / rn <= FEAS_TOL * np.maximum(1.0, np.abs(inst.g) / rn)))
    return LpSolution(OPTIMAL, value, z, active, tab.iterations)
