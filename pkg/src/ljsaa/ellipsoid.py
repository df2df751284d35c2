"""Maximum-volume inscribed ellipsoids of bounded polyhedra.

The ellipsoid ``{c + S u : |u| <= 1}`` is optimized through a lower
triangular factor ``L`` with ``L L^T = S^2``, so that

    maximize  sum_j log L_jj
    s.t.      |L^T a_i| <= g_i - a_i.c      for every row (a_i, g_i)

is a convex program in ``(L, c)`` with the positive-definiteness of ``S``
built in.  It is solved by a damped Newton barrier method on the smooth
second-order-cone barrier ``-log((g_i - a_i.c)^2 - |L^T a_i|^2)``.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .errors import DegenerateError, DimensionError, NumericalError
from .linsolve import chebyshev_center

DEGENERACY_THRESHOLD = 1e-6
BARRIER_SHRINK = 0.2
MAX_INNER = 50
INNER_TOL = 1e-8

CONVERGED = "converged"
DEGENERATE = "degenerate"
MAX_ITER = "max-iter"


@dataclass(frozen=True, eq=False)
class Ellipsoid:
    """``{center + S u : |u| <= 1}`` with ``S`` symmetric positive definite."""

    center: np.ndarray
    S: np.ndarray
    logdet: float
    L: np.ndarray  # lower-triangular, L @ L.T == S @ S

    @classmethod
    def from_factor(cls, center, L):
        center = np.array(center, dtype=float)
        L = np.tril(np.array(L, dtype=float))
        w, V = np.linalg.eigh(L @ L.T)
        if np.any(w <= 0):
            raise NumericalError("ellipsoid factor is singular")
        S = (V * np.sqrt(w)) @ V.T
        S = 0.5 * (S + S.T)
        logdet = float(np.sum(np.log(np.abs(np.diag(L)))))
        for a in (center, S, L):
            a.setflags(write=False)
        return cls(center, S, logdet, L)

    @classmethod
    def from_shape(cls, center, S):
        S = np.array(S, dtype=float)
        if not np.allclose(S, S.T, atol=1e-10, rtol=0):
            raise DimensionError("shape matrix must be symmetric")
        try:
            L = np.linalg.cholesky(S @ S)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("shape matrix must be positive definite") from exc
        return cls.from_factor(center, L)

    @property
    def dim(self):
        return self.center.size

    @property
    def volume_factor(self):
        """``det S``; multiply by the unit-ball volume for the true volume."""
        return float(np.exp(self.logdet))

    def support_min(self, w):
        """Minimum of ``w.z`` over the ellipsoid."""
        w = np.asarray(w, dtype=float)
        return float(w @ self.center - np.linalg.norm(self.L.T @ w))

    def norm_of(self, z):
        """``|S^-1 (z - center)|``, the gauge of ``z`` relative to the ellipsoid."""
        r = np.asarray(z, dtype=float) - self.center
        return float(np.linalg.norm(solve_triangular(self.L, r, lower=True)))

    def to_dict(self):
        return {"center": self.center.tolist(), "S": self.S.tolist(), "logdet": self.logdet}


@dataclass(frozen=True)
class MvieReport:
    iterations: int
    max_residual: float
    grad_norm: float  # Newton decrement of the t-normalized objective at exit
    status: str
    inradius: float = np.nan


def verify_inscribed(E, P):
    """Per-row containment residuals ``|S a_i| + a_i.c - g_i`` on unit-norm rows.

    All residuals ``<= 1e-8`` certify ``E`` lies inside ``P``.
    """
    if E.dim != P.dim:
        raise DimensionError(f"ellipsoid dim {E.dim} != polyhedron dim {P.dim}")
    Q = P.normalized()
    return np.linalg.norm(Q.G @ E.L, axis=1) + Q.G @ E.center - Q.g


def contains_point(E, z, scale=1.0):
    """True when ``z`` lies in ``E`` inflated about its center by ``scale``."""
    z = np.asarray(z, dtype=float)
    if z.shape != E.center.shape:
        raise DimensionError("point dimension does not match ellipsoid")
    return E.norm_of(z) <= scale + 1e-9


class _Barrier:
    """Barrier objective over z = (tril(L) entries, c) for unit-norm rows."""

    def __init__(self, G, g):
        m, d = G.shape
        self.d = d
        self.rows, self.cols = np.tril_indices(d)
        self.nL = self.rows.size
        nz = self.nL + d
        # (t_i, v_i) = M_i z + (g_i, 0)
        M = np.zeros((m, d + 1, nz))
        M[:, 0, self.nL:] = -G
        for p, (j, k) in enumerate(zip(self.rows, self.cols)):
            M[:, 1 + k, p] = G[:, j]
        self.M2 = M.reshape(m * (d + 1), nz)
        self.shape = (m, d + 1)
        self.g = g
        self.J = np.concatenate([[1.0], -np.ones(d)])
        self.MJ = (M * self.J[None, :, None]).reshape(m, (d + 1) * nz)
        self.K = np.einsum("iap,a,iaq->ipq", M, self.J, M).reshape(m, nz * nz)
        self.Mt = M.transpose(0, 2, 1).copy()
        self.diag = np.flatnonzero(self.rows == self.cols)
        self.nz = nz

    def pack(self, L, c):
        return np.concatenate([L[self.rows, self.cols], c])

    def unpack(self, z):
        L = np.zeros((self.d, self.d))
        L[self.rows, self.cols] = z[: self.nL]
        return L, z[self.nL:].copy()

    def slacks(self, z):
        """Affine images W and cone slacks s, or None if z leaves the domain."""
        W = (self.M2 @ z).reshape(self.shape)
        W[:, 0] += self.g
        if np.any(W[:, 0] <= 0) or np.any(z[self.diag] <= 0):
            return None
        s = W[:, 0] ** 2 - np.einsum("ij,ij->i", W[:, 1:], W[:, 1:])
        if np.any(s <= 0):
            return None
        return W, s

    def value(self, z, s, t):
        return -t * np.sum(np.log(z[self.diag])) - np.sum(np.log(s))

    def derivatives(self, z, W, s, t):
        r = 2.0 / s
        ds = np.einsum("ipa,ia->ip", self.Mt, W * self.J)
        dss = ds * r[:, None]
        grad = -dss.sum(axis=0)
        hess = dss.T @ dss - (r @ self.K).reshape(self.nz, self.nz)
        ld = z[self.diag]
        grad[self.diag] -= t / ld
        hess[self.diag, self.diag] += t / ld ** 2
        return grad, hess

    def feasible(self, z):
        return self.slacks(z) is not None


def _newton_step(hess, grad):
    try:
        return np.linalg.solve(hess, -grad)
    except np.linalg.LinAlgError:
        reg = 1e-12 * max(1.0, float(np.max(np.abs(np.diag(hess)))))
        return np.linalg.solve(hess + reg * np.eye(hess.shape[0]), -grad)


def _random_start(center, radius, d, rng):
    u = rng.standard_normal(d)
    u *= rng.uniform() ** (1.0 / d) / np.linalg.norm(u)
    c = center + 0.5 * radius * u
    R = np.tril(rng.standard_normal((d, d)))
    R[np.diag_indices(d)] = np.abs(R[np.diag_indices(d)]) + 0.1
    R *= 0.45 * radius / np.linalg.norm(R, 2)
    return c, R


def max_volume_inscribed_ellipsoid(P, tol=1e-8, threshold=DEGENERACY_THRESHOLD,
                                   seed=None, max_iter=2000):
    """Maximum-volume ellipsoid inscribed in the bounded polyhedron ``P``.

    Starts from the Chebyshev ball shrunk by 0.9 (or, with ``seed``, from a
    random feasible ellipsoid) and follows the central path, shrinking the
    barrier weight by 0.2 per outer round until the duality-gap bound drops
    below ``tol``.  Returns ``(Ellipsoid, MvieReport)``.

    Raises :class:`DegenerateError` if the Chebyshev radius is not above
    ``threshold``; flat polyhedra must be regularized by the caller.
    """
    center0, radius = chebyshev_center(P)
    if not np.isfinite(radius):
        raise DimensionError("polyhedron is unbounded")
    if radius <= threshold:
        raise DegenerateError(f"Chebyshev radius {radius:.3g} <= {threshold:.3g}", radius)
    d = P.dim
    if seed is None:
        c0, L0 = center0.copy(), 0.9 * radius * np.eye(d)
    else:
        c0, L0 = _random_start(center0, radius, d, np.random.default_rng(seed))

    # diagonal rescaling from single-variable bound rows; affine equivariance
    # makes the optimum independent of it, it only improves conditioning
    lb, ub = P.variable_bounds()
    width = np.where(np.isfinite(ub - lb), 0.5 * (ub - lb), radius)
    D = np.maximum(width, radius)
    Q = P.affine_image(np.diag(1.0 / D), -center0 / D).normalized()
    bar = _Barrier(Q.G, Q.g)
    z = bar.pack(L0 / D[:, None], (c0 - center0) / D)
    if not bar.feasible(z):
        raise NumericalError("initial ellipsoid is not strictly inside the polyhedron")

    n_cones = Q.n_rows
    t = 1.0
    iters = 0
    status = MAX_ITER
    kkt = np.inf
    W, sl = bar.slacks(z)
    while iters < max_iter:
        previous = np.inf
        for _ in range(MAX_INNER):
            grad, hess = bar.derivatives(z, W, sl, t)
            dz = _newton_step(hess, grad)
            lam2 = max(float(-grad @ dz), 0.0)
            decrement = float(np.sqrt(lam2))
            # decrement of the t-normalized objective (log det + barrier / t)
            kkt = decrement / np.sqrt(t)
            iters += 1
            # inside the quadratic region the decrement must square each step;
            # when it stops doing so the roundoff floor has been reached
            if decrement <= INNER_TOL or (previous < 1e-3 and decrement > 4.0 * previous ** 2 + INNER_TOL
                                          and decrement > 0.5 * previous):
                break
            previous = decrement
            f0 = bar.value(z, sl, t)
            step = 1.0
            while True:
                zn = z + step * dz
                ev = bar.slacks(zn)
                if ev is not None and bar.value(zn, ev[1], t) <= f0 - 0.25 * step * lam2:
                    break
                step *= 0.5
                if step < 1e-10:
                    ev = None
                    break
            if ev is None:
                # roundoff floor: no further decrease is representable
                break
            z = zn
            W, sl = ev
        if 2.0 * n_cones / t <= tol:
            status = CONVERGED
            break
        t /= BARRIER_SHRINK

    Lw, cw = bar.unpack(z)
    L = D[:, None] * Lw
    c = center0 + D * cw
    E = Ellipsoid.from_factor(c, L)
    res = verify_inscribed(E, P)
    return E, MvieReport(iters, float(np.max(res)), kkt, status, radius)
