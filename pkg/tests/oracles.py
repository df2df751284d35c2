"""Independent reference computations used by the tests.

None of these call into the package's solvers; they rely on brute force,
closed-form geometry or third-party code.
"""

import itertools
import math

import numpy as np


def brute_vertices(G, g, tol=1e-9):
    """Vertices of {G z <= g} by solving every square row subsystem."""
    G = np.asarray(G, dtype=float)
    g = np.asarray(g, dtype=float)
    m, d = G.shape
    out = []
    for rows in itertools.combinations(range(m), d):
        A = G[list(rows)]
        if abs(np.linalg.det(A)) < 1e-12:
            continue
        z = np.linalg.solve(A, g[list(rows)])
        if np.all(G @ z <= g + tol * np.maximum(1.0, np.abs(g))):
            if not any(np.allclose(z, v, atol=1e-9) for v in out):
                out.append(z)
    return np.array(out).reshape(-1, d)


def lp_min_by_vertices(c, G, g):
    V = brute_vertices(G, g)
    if len(V) == 0:
        return math.inf
    return float(np.min(V @ np.asarray(c, dtype=float)))


def milp_by_enumeration(c, G, g, domain):
    """Exhaustive minimum over integer points of ``domain`` (list of ranges)."""
    c = np.asarray(c, dtype=float)
    best, arg = math.inf, None
    pts = np.array(list(itertools.product(*domain)), dtype=float)
    feas = np.all(pts @ np.asarray(G).T <= np.asarray(g) + 1e-9, axis=1)
    if not feas.any():
        return best, arg
    vals = pts[feas] @ c
    i = int(np.argmin(vals))
    return float(vals[i]), pts[feas][i]


def random_polytope(rng, d, n_extra=None, box=3.0):
    """Bounded full-dimensional polytope: a box cut by random halfspaces
    that all keep the origin strictly inside."""
    n_extra = 2 * d + 2 if n_extra is None else n_extra
    N = rng.standard_normal((n_extra, d))
    N /= np.linalg.norm(N, axis=1, keepdims=True)
    off = rng.uniform(0.5, 2.0, n_extra)
    G = np.vstack([N, np.eye(d), -np.eye(d)])
    g = np.concatenate([off, np.full(2 * d, box)])
    return G, g


def triangle_steiner(P0, P1, P2):
    """Center and area of the Steiner inellipse of a triangle."""
    P0, P1, P2 = (np.asarray(p, dtype=float) for p in (P0, P1, P2))
    center = (P0 + P1 + P2) / 3.0
    tri = 0.5 * abs((P1[0] - P0[0]) * (P2[1] - P0[1]) - (P2[0] - P0[0]) * (P1[1] - P0[1]))
    return center, math.pi / (3.0 * math.sqrt(3.0)) * tri


def example1_objective(x1, x2):
    """c.x + expected shortage cost for the two-product example, in closed form."""
    xi1 = np.arange(310, 320)[:, None]
    xi2 = np.arange(292, 302)[None, :]
    s1 = np.maximum(0, xi1 - 2 * x1 - 6 * x2)
    s2 = np.maximum(0, xi2 - 3 * x1 - 3 * x2)
    return 2 * x1 + 3 * x2 + float(np.mean(7 * s1 + 12 * s2))


def example1_brute_force():
    """Global optimum over all integer x with x1 + x2 <= 100."""
    best = (math.inf, None)
    for x1 in range(101):
        for x2 in range(101 - x1):
            v = example1_objective(x1, x2)
            if v < best[0] - 1e-12:
                best = (v, (x1, x2))
    return best


def ellipsoid_min_sampled(center, S, w, n=100000, rounds=10, seed=0):
    """Minimum of w.z over sampled boundary points c + S u, |u| = 1.

    The first round samples the whole sphere; later rounds resample in a
    shrinking cap around the best point so far.  Uses only evaluations of
    the objective.
    """
    rng = np.random.default_rng(seed)
    d = len(center)
    per = n // rounds
    best_u, best = None, math.inf
    spread = None
    for _ in range(rounds):
        U = rng.standard_normal((per, d))
        if best_u is not None:
            U = best_u + spread * U
        U /= np.linalg.norm(U, axis=1, keepdims=True)
        vals = (center + U @ S.T) @ w
        i = int(np.argmin(vals))
        if vals[i] < best:
            best, best_u = float(vals[i]), U[i]
        spread = 0.3 if spread is None else spread * 0.3
    return best
