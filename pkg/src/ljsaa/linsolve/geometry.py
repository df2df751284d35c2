"""Chebyshev center and brute-force vertex enumeration."""

import itertools

import numpy as np

from ..errors import InfeasibleError, ScaleGuardError
from .simplex import INFEASIBLE, UNBOUNDED, LpInstance, solve_lp

MAX_ENUM_DIM = 6
MAX_ENUM_ROWS = 40


def chebyshev_center(P):
    """Center and radius of the largest Euclidean ball inside ``P``.

    Rows are normalized first, so the radius is the largest minimum slack.
    A radius of zero means ``P`` is flat.  Raises :class:`InfeasibleError`
    for an empty ``P``; an unbounded ``P`` containing arbitrarily large
    balls yields radius ``inf``.
    """
    zero = ~P.G.any(axis=1)
    if np.any(P.g[zero] < 0):
        raise InfeasibleError("polyhedron has a violated all-zero row")
    Q = P.normalized()
    d = P.dim
    G = np.hstack([Q.G, np.ones((Q.n_rows, 1))])
    c = np.zeros(d + 1)
    c[-1] = -1.0
    lb = np.full(d + 1, -np.inf)
    lb[-1] = 0.0
    sol = solve_lp(LpInstance(c, G, Q.g, lb=lb))
    if sol.status == INFEASIBLE:
        raise InfeasibleError("polyhedron is empty")
    if sol.status == UNBOUNDED:
        return np.full(d, np.nan), np.inf
    return sol.x[:d], max(float(sol.x[d]), 0.0)


def is_feasible(P):
    try:
        chebyshev_center(P)
    except InfeasibleError:
        return False
    return True


def enumerate_vertices(P, tol=1e-9):
    """All vertices of ``P`` found by solving every ``d x d`` row subsystem.

    Restricted to ``dim <= 6`` and at most 40 rows.
    """
    d, m = P.dim, P.n_rows
    if d > MAX_ENUM_DIM or m > MAX_ENUM_ROWS:
        raise ScaleGuardError(f"vertex enumeration limited to dim<={MAX_ENUM_DIM}, rows<={MAX_ENUM_ROWS}")
    Q = P.normalized()
    G, g = Q.G, Q.g
    combos = np.array(list(itertools.combinations(range(G.shape[0]), d)), dtype=np.intp)
    if combos.size == 0:
        return np.zeros((0, d))
    found = []
    for chunk in np.array_split(combos, max(1, len(combos) // 20000)):
        As = G[chunk]
        bs = g[chunk]
        dets = np.linalg.det(As)
        ok = np.abs(dets) > 1e-12
        if not ok.any():
            continue
        pts = np.linalg.solve(As[ok], bs[ok][..., None])[..., 0]
        feas = np.all(pts @ G.T <= g + tol * np.maximum(1.0, np.abs(g)), axis=1)
        found.append(pts[feas])
    if not found:
        return np.zeros((0, d))
    pts = np.vstack(found)
    verts = []
    for p in pts[np.lexsort(pts.T[::-1])]:
        if not any(np.max(np.abs(p - v)) <= 1e-9 * max(1.0, np.max(np.abs(v))) for v in verts):
            verts.append(p)
    return np.array(verts).reshape(-1, d) + 0.0  # normalize -0.0
