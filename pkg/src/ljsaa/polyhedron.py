"""Inequality-described polyhedra ``{z : G z <= g}``."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Polyhedron:
    """Rows ``G z <= g`` over a joint variable vector.

    ``names`` and ``roles`` label the columns; ``roles`` entries are ``"x"``
    for first-stage and ``"y"`` for second-stage variables.
    """

    G: np.ndarray
    g: np.ndarray
    names: tuple = field(default=())
    roles: tuple = field(default=())

    def __post_init__(self):
        G = _frozen(np.atleast_2d(self.G))
        g = _frozen(np.atleast_1d(self.g))
        if G.ndim != 2 or g.ndim != 1 or G.shape[0] != g.shape[0]:
            raise DimensionError(f"G {G.shape} and g {g.shape} do not match")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "g", g)
        d = G.shape[1]
        names = tuple(self.names) or tuple(f"z{j}" for j in range(d))
        roles = tuple(self.roles) or ("z",) * d
        if len(names) != d or len(roles) != d:
            raise DimensionError("names/roles length must equal the dimension")
        object.__setattr__(self, "names", names)
        object.__setattr__(self, "roles", roles)

    @property
    def dim(self):
        return self.G.shape[1]

    @property
    def n_rows(self):
        return self.G.shape[0]

    @classmethod
    def box(cls, lower, upper):
        lower = np.asarray(lower, dtype=float)
        upper = np.asarray(upper, dtype=float)
        d = lower.size
        eye = np.eye(d)
        return cls(np.vstack([-eye, eye]), np.concatenate([-lower, upper]))

    def normalized(self):
        """Same set with every row scaled to unit Euclidean norm.

        All-zero rows are dropped (they are either vacuous or make the set
        empty; callers that care check feasibility separately).
        """
        norms = np.linalg.norm(self.G, axis=1)
        keep = norms > 0
        return Polyhedron(self.G[keep] / norms[keep, None], self.g[keep] / norms[keep],
                          self.names, self.roles)

    def slack(self, z):
        return self.g - self.G @ np.asarray(z, dtype=float)

    def contains(self, z, tol=1e-9):
        """True if ``z`` satisfies every row within ``tol`` times the row norm."""
        norms = np.linalg.norm(self.G, axis=1)
        return bool(np.all(self.slack(z) >= -tol * np.maximum(norms, 1.0)))

    def intersect(self, G, g):
        G = np.atleast_2d(np.asarray(G, dtype=float))
        g = np.atleast_1d(np.asarray(g, dtype=float))
        return Polyhedron(np.vstack([self.G, G]), np.concatenate([self.g, g]),
                          self.names, self.roles)

    def affine_image(self, M, t):
        """Image of the set under ``z -> M z + t`` for invertible ``M``."""
        M = np.asarray(M, dtype=float)
        t = np.asarray(t, dtype=float)
        Minv = np.linalg.inv(M)
        return Polyhedron(self.G @ Minv, self.g + self.G @ Minv @ t, self.names, self.roles)

    def variable_bounds(self):
        """Per-variable bounds implied by single-variable rows alone."""
        lb = np.full(self.dim, -np.inf)
        ub = np.full(self.dim, np.inf)
        nnz = np.count_nonzero(self.G, axis=1)
        for i in np.flatnonzero(nnz == 1):
            j = int(np.flatnonzero(self.G[i])[0])
            a = self.G[i, j]
            if a > 0:
                ub[j] = min(ub[j], self.g[i] / a)
            else:
                lb[j] = max(lb[j], self.g[i] / a)
        return lb, ub

    def to_dict(self):
        return {"G": self.G.tolist(), "g": self.g.tolist(),
                "names": list(self.names), "roles": list(self.roles)}
