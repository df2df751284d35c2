"""Two-stage stochastic (integer) linear programs and their scenario polyhedra.

First stage::

    min c.x   s.t.  A x <= b,  lb <= x <= ub,  x integer where flagged

Second stage for scenario ``k`` (one row per entry of ``senses``)::

    Q(x, k) = min q_k.y   s.t.  T_k x + W y  (<=|=|>=)  h_k,  ylb <= y <= yub

Scenario data ``(q_k, T_k, h_k)`` is an affine function of a random vector
``xi`` with independent, finitely supported marginals.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, FormatError, InfeasibleError, UnboundableError
from .linsolve import (
    INFEASIBLE,
    OPTIMAL,
    UNBOUNDED,
    LpInstance,
    chebyshev_center,
    solve_lp,
)
from .polyhedron import Polyhedron

SENSES = ("<=", "=", ">=")
PROB_TOL = 1e-12
DEFAULT_CAP = 10**6
DEFAULT_EPSILON = 1e-3


def _arr(a, shape=None, dtype=float, name="array"):
    out = np.array(a, dtype=dtype, copy=True)
    if shape is not None:
        try:
            out = out.reshape(shape)
        except ValueError as exc:
            raise DimensionError(f"{name}: cannot view shape {np.shape(a)} as {shape}") from exc
    if dtype is float and not np.all(np.isfinite(out[~np.isinf(out)] if out.size else out)):
        raise DimensionError(f"{name} contains NaN")
    out.setflags(write=False)
    return out


def _finite(name, a):
    if not np.all(np.isfinite(a)):
        raise DimensionError(f"{name} must be finite")


@dataclass(frozen=True, eq=False)
class FirstStage:
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    integer: np.ndarray = None
    lb: np.ndarray = None
    ub: np.ndarray = None

    def __post_init__(self):
        c = _arr(self.c, name="c").ravel()
        n = c.size
        A = _arr(self.A if np.size(self.A) else np.zeros((0, n)), name="A")
        if A.ndim == 1:
            A = A.reshape(1, -1)
        b = _arr(self.b, name="b").ravel()
        if A.shape[1] != n:
            raise DimensionError(f"A has {A.shape[1]} columns but c has length {n}")
        if A.shape[0] != b.size:
            raise DimensionError(f"A has {A.shape[0]} rows but b has length {b.size}")
        integer = _arr(np.zeros(n, bool) if self.integer is None else self.integer, dtype=bool).ravel()
        lb = _arr(np.zeros(n) if self.lb is None else self.lb, name="lb").ravel()
        ub = _arr(np.full(n, np.inf) if self.ub is None else self.ub, name="ub").ravel()
        if not (integer.size == lb.size == ub.size == n):
            raise DimensionError("integrality and bound vectors must have the length of c")
        _finite("c", c)
        _finite("A", A)
        _finite("b", b)
        if np.any(lb > ub):
            raise DimensionError("lower bound exceeds upper bound")
        # vacuous all-zero rows are removed; violated ones make X empty
        zero = ~A.any(axis=1)
        if np.any(b[zero] < 0):
            raise InfeasibleError("first-stage row 0 <= b with b < 0")
        A, b = _arr(A[~zero]), _arr(b[~zero])
        for k, v in dict(c=c, A=A, b=b, integer=integer, lb=lb, ub=ub).items():
            object.__setattr__(self, k, v)

    @property
    def n(self):
        return self.c.size


@dataclass(frozen=True, eq=False)
class ScenarioTemplate:
    """Fixed recourse ``W`` plus affine maps ``xi -> (q, T, h)``.

    ``q = q0 + q_coef @ xi``, ``T = T0 + T_coef @ xi``, ``h = h0 + h_coef @ xi``.
    With no random vector (``n_xi == 0``) scenarios must supply ``q, T, h``
    explicitly.
    """

    W: np.ndarray
    senses: tuple
    q0: np.ndarray
    T0: np.ndarray
    h0: np.ndarray
    q_coef: np.ndarray = None
    T_coef: np.ndarray = None
    h_coef: np.ndarray = None
    integer: np.ndarray = None
    lb: np.ndarray = None
    ub: np.ndarray = None

    def __post_init__(self):
        W = _arr(self.W, name="W")
        if W.ndim != 2:
            raise DimensionError("W must be a matrix")
        ell, m = W.shape
        senses = tuple(self.senses)
        if len(senses) != ell or any(s not in SENSES for s in senses):
            raise DimensionError(f"senses must be {ell} entries from {SENSES}")
        q0 = _arr(self.q0, name="q0").ravel()
        h0 = _arr(self.h0, name="h0").ravel()
        T0 = _arr(self.T0, name="T0")
        if T0.ndim == 1:
            T0 = T0.reshape(ell, -1)
        if q0.size != m or h0.size != ell or T0.shape[0] != ell:
            raise DimensionError("q0/h0/T0 sizes disagree with W")
        n = T0.shape[1]
        r = 0
        for coef in (self.q_coef, self.T_coef, self.h_coef):
            if coef is not None and np.size(coef):
                r = max(r, np.shape(coef)[-1])
        q_coef = _arr(np.zeros((m, r)) if self.q_coef is None else self.q_coef, (m, r), name="q_coef")
        T_coef = _arr(np.zeros((ell, n, r)) if self.T_coef is None else self.T_coef, (ell, n, r), name="T_coef")
        h_coef = _arr(np.zeros((ell, r)) if self.h_coef is None else self.h_coef, (ell, r), name="h_coef")
        integer = _arr(np.zeros(m, bool) if self.integer is None else self.integer, dtype=bool).ravel()
        lb = _arr(np.zeros(m) if self.lb is None else self.lb, name="y lb").ravel()
        ub = _arr(np.full(m, np.inf) if self.ub is None else self.ub, name="y ub").ravel()
        if not (integer.size == lb.size == ub.size == m):
            raise DimensionError("second-stage integrality/bounds must have length m")
        for name, a in (("W", W), ("q0", q0), ("T0", T0), ("h0", h0)):
            _finite(name, a)
        if np.any(lb > ub):
            raise DimensionError("second-stage lower bound exceeds upper bound")
        for k, v in dict(W=W, senses=senses, q0=q0, T0=T0, h0=h0, q_coef=q_coef,
                         T_coef=T_coef, h_coef=h_coef, integer=integer, lb=lb, ub=ub).items():
            object.__setattr__(self, k, v)

    @property
    def m(self):
        return self.W.shape[1]

    @property
    def ell(self):
        return self.W.shape[0]

    @property
    def n(self):
        return self.T0.shape[1]

    @property
    def n_xi(self):
        return self.h_coef.shape[1]

    def realize(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.size != self.n_xi:
            raise DimensionError(f"expected {self.n_xi} random components, got {xi.size}")
        return (self.q0 + self.q_coef @ xi, self.T0 + self.T_coef @ xi, self.h0 + self.h_coef @ xi)


@dataclass(frozen=True, eq=False)
class Scenario:
    k: int
    q: np.ndarray
    T: np.ndarray
    h: np.ndarray
    prob: float
    xi: tuple = None

    def __post_init__(self):
        if not (self.prob > 0 and self.prob <= 1 + PROB_TOL):
            raise DimensionError(f"scenario {self.k}: probability {self.prob} not in (0, 1]")
        for name in ("q", "T", "h"):
            object.__setattr__(self, name, _arr(getattr(self, name), name=name))
        if self.xi is not None:
            object.__setattr__(self, "xi", tuple(float(v) for v in self.xi))

    def with_prob(self, prob, k=None):
        return Scenario(self.k if k is None else k, self.q, self.T, self.h, prob, self.xi)

    def key(self):
        """Bytes identifying the realized data (not the index or probability)."""
        return self.q.tobytes() + self.T.tobytes() + self.h.tobytes()


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    """Independent discrete marginals; each is ``(values, probs)``."""

    marginals: tuple
    seed: int = 0

    def __post_init__(self):
        margs = []
        for i, (vals, probs) in enumerate(self.marginals):
            vals = _arr(vals, name="support").ravel()
            probs = _arr(probs, name="probs").ravel()
            if vals.size == 0 or vals.size != probs.size:
                raise DimensionError(f"marginal {i}: support and probabilities differ in length")
            _finite("support", vals)
            if np.any(probs < 0) or abs(math.fsum(probs) - 1.0) > PROB_TOL:
                raise DimensionError(f"marginal {i}: probabilities must be >= 0 and sum to 1")
            margs.append((vals, probs))
        object.__setattr__(self, "marginals", tuple(margs))
        object.__setattr__(self, "seed", int(self.seed))

    @property
    def size(self):
        return math.prod(v.size for v, _ in self.marginals)

    @classmethod
    def uniform(cls, *supports, seed=0):
        return cls(tuple((s, np.full(len(s), 1.0 / len(s))) for s in supports), seed)

    def support_vertices(self):
        """Corners of the box spanned by the marginal supports."""
        ranges = [(float(v.min()), float(v.max())) for v, _ in self.marginals]
        return [np.array(c) for c in itertools.product(*ranges)]


@dataclass(frozen=True, eq=False)
class StochasticProgram:
    first: FirstStage
    template: ScenarioTemplate
    x_lo: np.ndarray = field(repr=False, default=None)
    x_hi: np.ndarray = field(repr=False, default=None)
    y_hi: np.ndarray = field(repr=False, default=None)

    @property
    def n(self):
        return self.first.n

    @property
    def m(self):
        return self.template.m

    @property
    def dim(self):
        return self.n + self.m

    def joint_cost(self, scenario):
        return np.concatenate([self.first.c, scenario.q])


@dataclass(frozen=True)
class RelaxationConfig:
    epsilon: float = DEFAULT_EPSILON
    x_ub: tuple = None
    y_ub: tuple = None

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")


def _first_stage_box(first):
    """Tightest box of X = {Ax <= b, lb <= x <= ub} by 2n LPs (inf when unbounded)."""
    n = first.n
    lo = np.empty(n)
    hi = np.empty(n)
    for j in range(n):
        e = np.zeros(n)
        e[j] = 1.0
        for sign, out in ((1.0, lo), (-1.0, hi)):
            sol = solve_lp(LpInstance(sign * e, first.A, first.b, first.lb, first.ub))
            if sol.status == INFEASIBLE:
                raise InfeasibleError("first-stage feasible set is empty")
            out[j] = sign * sol.value if sol.status == OPTIMAL else sign * -np.inf
    # snap LP roundoff onto the user bounds
    return np.maximum(lo, first.lb), np.minimum(hi, first.ub)


def _ge_rows(template, T, h):
    """Recourse rows rewritten as ``Wge y >= hge - Tge x``."""
    W_rows, T_rows, h_rows = [], [], []
    for i, s in enumerate(template.senses):
        if s in (">=", "="):
            W_rows.append(template.W[i])
            T_rows.append(T[i])
            h_rows.append(h[i])
        if s in ("<=", "="):
            W_rows.append(-template.W[i])
            T_rows.append(-T[i])
            h_rows.append(-h[i])
    return np.array(W_rows).reshape(-1, template.m), np.array(T_rows).reshape(-1, template.n), np.array(h_rows)


def _shortage_bounds(template, x_lo, x_hi, realizations):
    """Data-derived upper bounds on second-stage variables of shortage type.

    ``y_j`` qualifies when every (>=-form) row it appears in has a positive
    coefficient on it and nonnegative coefficients on the other ``y``, and its
    cost is nonnegative in every realization.  Then ``y_j`` never needs to
    exceed the largest residual demand ``max (h_i - T_i x) / W_ij``.
    Returns NaN where the rule does not apply.
    """
    m = template.m
    out = np.full(m, np.nan)
    if not realizations:
        return out
    Wge, _, _ = _ge_rows(template, realizations[0][1], realizations[0][2])
    q_min = np.min([q for q, _, _ in realizations], axis=0)
    for j in range(m):
        if np.isfinite(template.ub[j]) or q_min[j] < 0:
            continue
        rows = np.flatnonzero(Wge[:, j] != 0)
        if rows.size == 0:
            continue
        sub = Wge[rows]
        if np.any(sub[:, j] <= 0) or np.any(np.delete(sub, j, axis=1) < 0):
            continue
        if not (np.all(np.isfinite(x_lo)) and np.all(np.isfinite(x_hi))):
            continue
        need = 0.0
        for _, T, h in realizations:
            _, Tge, hge = _ge_rows(template, T, h)
            Tr = Tge[rows]
            min_tx = np.sum(np.minimum(Tr * x_lo, Tr * x_hi), axis=1)
            need = max(need, float(np.max((hge[rows] - min_tx) / sub[:, j])))
        out[j] = max(need, template.lb[j], 0.0)
    return out


def build_problem(first, template, support=None):
    """Validate and bundle first-stage data with a scenario template.

    ``support`` (a :class:`DistributionSpec` or a scenario list) feeds the
    data-derived bounds used to make scenario polyhedra bounded.
    """
    if template.n != first.n:
        raise DimensionError(f"T has {template.n} columns but the first stage has {first.n} variables")
    x_lo, x_hi = _first_stage_box(first)
    realizations = []
    if isinstance(support, DistributionSpec):
        if len(support.marginals) != template.n_xi:
            raise DimensionError("distribution and template disagree on the number of random components")
        if len(support.marginals) > 16:
            raise DimensionError("at most 16 random components are supported")
        realizations = [template.realize(v) for v in support.support_vertices()]
    elif support is not None:
        realizations = [(s.q, s.T, s.h) for s in support]
    y_hi = _shortage_bounds(template, x_lo, x_hi, realizations)
    for a in (x_lo, x_hi, y_hi):
        a.setflags(write=False)
    return StochasticProgram(first, template, x_lo, x_hi, y_hi)


def check_scenario(program, scenario):
    t = program.template
    if scenario.q.shape != (t.m,) or scenario.T.shape != (t.ell, t.n) or scenario.h.shape != (t.ell,):
        raise DimensionError(f"scenario {scenario.k} data does not match the template")


def enumerate_scenarios(dist, template, cap=DEFAULT_CAP):
    """Full Cartesian product of the marginals, lexicographic in support index."""
    if dist.size > cap:
        raise ValueError(f"{dist.size} scenarios exceed the enumeration cap {cap}")
    out = []
    supports = [range(v.size) for v, _ in dist.marginals]
    for k, idx in enumerate(itertools.product(*supports)):
        xi = np.array([dist.marginals[i][0][j] for i, j in enumerate(idx)])
        p = math.prod(float(dist.marginals[i][1][j]) for i, j in enumerate(idx))
        if p <= 0:
            continue
        q, T, h = template.realize(xi)
        out.append(Scenario(len(out), q, T, h, p, tuple(xi)))
    total = math.fsum(s.prob for s in out)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"enumerated probabilities sum to {total}")
    return out


def sample_iid(dist, template, K, seed=None):
    """``K`` independent draws, each carrying probability ``1/K``."""
    if int(K) != K or K < 1:
        raise ValueError("sample size K must be a positive integer")
    K = int(K)
    rng = np.random.default_rng(dist.seed if seed is None else seed)
    cols = [vals[rng.choice(vals.size, size=K, p=probs)] for vals, probs in dist.marginals]
    draws = np.column_stack(cols) if cols else np.zeros((K, 0))
    out = []
    for k in range(K):
        q, T, h = template.realize(draws[k])
        out.append(Scenario(k, q, T, h, 1.0 / K, tuple(draws[k])))
    return out


def scenario_polyhedron(program, scenario, cfg=RelaxationConfig()):
    """Joint ``[x; y]`` polyhedron of one scenario with integrality dropped.

    Rows: first-stage ``A x <= b``; recourse rows in ``<=`` form, equality rows
    split into a pair each loosened by ``cfg.epsilon``; lower bound rows; and
    finite upper bound rows (user-supplied, implied by ``X``, or derived from
    the scenario data).  Raises :class:`InfeasibleError` for an empty set and
    :class:`UnboundableError` when some variable has no finite bound.
    """
    check_scenario(program, scenario)
    first, t = program.first, program.template
    n, m, eps = program.n, program.m, cfg.epsilon
    d = n + m

    lb = np.concatenate([first.lb, t.lb])
    if not np.all(np.isfinite(lb)):
        raise UnboundableError("every variable needs a finite lower bound")
    x_ub = program.x_hi.copy() if cfg.x_ub is None else np.minimum(program.x_hi, cfg.x_ub)
    y_ub = t.ub.copy()
    if cfg.y_ub is not None:
        y_ub = np.minimum(y_ub, np.asarray(cfg.y_ub, dtype=float))
    derived = np.isnan(program.y_hi)
    y_ub = np.where(np.isinf(y_ub) & ~derived, program.y_hi, y_ub)
    # the program-level bound comes from the support; widen it if this
    # scenario lies outside that support
    own = _shortage_bounds(t, program.x_lo, program.x_hi, [(scenario.q, scenario.T, scenario.h)])
    y_ub = np.where(np.isfinite(own) & np.isinf(t.ub) & np.isfinite(y_ub) & (cfg.y_ub is None),
                    np.maximum(y_ub, own), y_ub)

    rows, rhs = [], []
    if first.A.size:
        rows.append(np.hstack([first.A, np.zeros((first.A.shape[0], m))]))
        rhs.append(first.b)
    for i, s in enumerate(t.senses):
        row = np.concatenate([scenario.T[i], t.W[i]])
        hi = scenario.h[i]
        if s == "<=":
            rows.append(row[None])
            rhs.append([hi])
        elif s == ">=":
            rows.append(-row[None])
            rhs.append([-hi])
        else:
            rows.append(np.vstack([row, -row]))
            rhs.append([hi + eps, -hi + eps])
    eye = np.eye(d)
    rows.append(-eye)
    rhs.append(-lb)
    G = np.vstack(rows)
    g = np.concatenate([np.atleast_1d(r) for r in rhs]).astype(float)
    nonzero = G.any(axis=1)
    if np.any(g[~nonzero] < 0):
        raise InfeasibleError(f"scenario {scenario.k}: violated constant row")
    G, g = G[nonzero], g[nonzero]

    ub = np.concatenate([x_ub, y_ub])
    missing = np.flatnonzero(~np.isfinite(ub))
    for j in missing:
        # last resort: the polyhedron itself may bound the variable
        known = np.isfinite(ub)
        e = np.zeros(d)
        e[j] = -1.0
        sol = solve_lp(LpInstance(e, np.vstack([G, eye[known]]), np.concatenate([g, ub[known]])))
        if sol.status == INFEASIBLE:
            raise InfeasibleError(f"scenario {scenario.k}: polyhedron is empty")
        if sol.status == UNBOUNDED:
            role = "x" if j < n else "y"
            raise UnboundableError(f"scenario {scenario.k}: variable {role}{j if j < n else j - n} "
                                   "has no data-derived upper bound; supply one")
        ub[j] = -sol.value
    G = np.vstack([G, eye])
    g = np.concatenate([g, ub])

    names = tuple(f"x{j}" for j in range(n)) + tuple(f"y{j}" for j in range(m))
    roles = ("x",) * n + ("y",) * m
    P = Polyhedron(G + 0.0, g + 0.0, names, roles)
    try:
        chebyshev_center(P)
    except InfeasibleError as exc:
        raise InfeasibleError(f"scenario {scenario.k}: polyhedron is empty") from exc
    return P


def builtin_example1(seed=0):
    """Two products, random demands, shortage bought at prices (7, 12)."""
    first = FirstStage(c=[2.0, 3.0], A=[[1.0, 1.0]], b=[100.0], integer=[True, True])
    template = ScenarioTemplate(
        W=np.eye(2), senses=(">=", ">="), q0=[7.0, 12.0],
        T0=[[2.0, 6.0], [3.0, 3.0]], h0=[0.0, 0.0], h_coef=np.eye(2),
        integer=[True, True])
    dist = DistributionSpec.uniform(np.arange(310, 320), np.arange(292, 302), seed=seed)
    return build_problem(first, template, dist), dist


def builtin_newsvendor(cost=1.0, price=1.5, salvage=0.5, demands=(8.0, 9.0, 10.0, 11.0, 12.0),
                       x_max=20.0, seed=0):
    """Newsvendor with inventory balance ``x - y_over + y_under = demand``."""
    first = FirstStage(c=[cost], A=np.zeros((0, 1)), b=[], ub=[x_max])
    y_max = x_max + float(max(demands))
    template = ScenarioTemplate(
        W=[[-1.0, 1.0]], senses=("=",), q0=[cost - salvage, price - cost],
        T0=[[1.0]], h0=[0.0], h_coef=[[1.0]], ub=[y_max, y_max])
    dist = DistributionSpec.uniform(np.asarray(demands, dtype=float), seed=seed)
    return build_problem(first, template, dist), dist


def builtin_synthetic(seed=0):
    """Three-product shortage model with a slack-balance equality row.

    Random demands take 10, 15 and 5 values, giving 750 scenarios in total.
    Costs and technology rows are drawn once from ``seed``.
    """
    rng = np.random.default_rng(seed)
    n = 3
    c = np.round(rng.uniform(1.0, 4.0, n), 2)
    cap = 120.0
    first = FirstStage(c=c, A=np.ones((1, n)), b=[cap], integer=np.ones(n, bool))
    tech = np.round(rng.uniform(1.0, 5.0, (3, n)), 1)
    W = np.zeros((4, 4))
    W[:3, :3] = np.eye(3)
    W[3, 3] = 1.0
    T0 = np.vstack([tech, np.ones((1, n))])
    q0 = np.concatenate([np.round(rng.uniform(6.0, 15.0, 3), 1), [0.5]])
    h0 = np.array([0.0, 0.0, 0.0, cap])
    h_coef = np.zeros((4, 3))
    h_coef[:3, :3] = np.eye(3)
    template = ScenarioTemplate(W=W, senses=(">=", ">=", ">=", "="), q0=q0, T0=T0, h0=h0,
                                h_coef=h_coef)
    base = tech.sum(axis=1) * cap / n
    supports = [np.round(base[0] * np.linspace(0.8, 1.1, 10)),
                np.round(base[1] * np.linspace(0.8, 1.1, 15)),
                np.round(base[2] * np.linspace(0.8, 1.1, 5))]
    dist = DistributionSpec.uniform(*supports, seed=seed)
    return build_problem(first, template, dist), dist


BUILTINS = {
    "example1": builtin_example1,
    "newsvendor": builtin_newsvendor,
    "synthetic": builtin_synthetic,
}


def builtin(name, seed=0):
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise FormatError(f"unknown builtin {name!r}; choose from {sorted(BUILTINS)}") from None
    return factory(seed=seed)


def relax_integrality(program):
    """Same program with every integrality flag dropped."""
    f, t = program.first, program.template
    first = FirstStage(f.c, f.A, f.b, None, f.lb, f.ub)
    template = ScenarioTemplate(t.W, t.senses, t.q0, t.T0, t.h0, t.q_coef, t.T_coef, t.h_coef,
                                None, t.lb, t.ub)
    return StochasticProgram(first, template, program.x_lo, program.x_hi, program.y_hi)
