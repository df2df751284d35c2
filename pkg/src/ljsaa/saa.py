"""Extensive-form sample average approximation and full-vs-reduced reports."""

import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, InfeasibleError, ScaleGuardError, UnboundedError
from .linsolve import INFEASIBLE, OPTIMAL, UNBOUNDED, LpInstance, solve_lp, solve_milp
from .model import check_scenario

MAX_EXTENSIVE_VARS = 5000
N_RANDOM_PROBES = 20


@dataclass(frozen=True, eq=False)
class ExtensiveForm:
    """``min c.z`` over ``rows (sense) rhs`` with ``z = (x, y_0, ..., y_{K-1})``."""

    c: np.ndarray
    rows: np.ndarray
    senses: tuple
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    integer: np.ndarray
    n_first: int
    n_scenarios: int

    @property
    def n_vars(self):
        return self.c.size

    @property
    def n_constraints(self):
        return self.rows.shape[0]

    def to_lp(self):
        """Equivalent ``<=`` instance (equalities become row pairs)."""
        G, g = [], []
        for a, s, b in zip(self.rows, self.senses, self.rhs):
            if s in ("<=", "="):
                G.append(a)
                g.append(b)
            if s in (">=", "="):
                G.append(-a)
                g.append(-b)
        G = np.array(G).reshape(-1, self.n_vars)
        return LpInstance(self.c, G, np.array(g), self.lb, self.ub, self.integer)


def _check_probs(scenarios):
    if not scenarios:
        raise ValueError("empty scenario list")
    total = math.fsum(s.prob for s in scenarios)
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"scenario probabilities sum to {total}, not 1")


def extensive_form(program, scenarios):
    """Deterministic equivalent: x first, then one copy of y per scenario."""
    _check_probs(scenarios)
    first, t = program.first, program.template
    n, m, ell, K = program.n, program.m, t.ell, len(scenarios)
    N = n + K * m
    c = np.concatenate([first.c] + [s.prob * s.q for s in scenarios])
    rows = np.zeros((first.A.shape[0] + K * ell, N))
    rhs = np.empty(rows.shape[0])
    senses = ["<="] * first.A.shape[0]
    rows[: first.A.shape[0], :n] = first.A
    rhs[: first.A.shape[0]] = first.b
    r = first.A.shape[0]
    for i, s in enumerate(scenarios):
        check_scenario(program, s)
        rows[r: r + ell, :n] = s.T
        rows[r: r + ell, n + i * m: n + (i + 1) * m] = t.W
        rhs[r: r + ell] = s.h
        senses.extend(t.senses)
        r += ell
    lb = np.concatenate([first.lb] + [t.lb] * K)
    ub = np.concatenate([first.ub] + [t.ub] * K)
    integer = np.concatenate([first.integer] + [t.integer] * K)
    return ExtensiveForm(c, rows, tuple(senses), rhs, lb, ub, integer, n, K)


def merge_duplicates(scenarios):
    """Collapse scenarios with identical data, summing their probabilities.

    The SAA objective is unchanged; the first index of each group is kept.
    """
    groups = {}
    for s in scenarios:
        key = s.key()
        if key in groups:
            groups[key][1] += s.prob
        else:
            groups[key] = [s, s.prob]
    out = [s.with_prob(p) for s, p in groups.values()]
    return sorted(out, key=lambda s: s.k)


def evaluate_recourse(program, x, scenario):
    """Second-stage optimum ``Q(x, scenario)``, honouring y-integrality."""
    check_scenario(program, scenario)
    t = program.template
    x = np.asarray(x, dtype=float)
    if x.size != program.n:
        raise DimensionError(f"x has length {x.size}, expected {program.n}")
    need = scenario.h - scenario.T @ x
    G, g = [], []
    for i, s in enumerate(t.senses):
        if s in ("<=", "="):
            G.append(t.W[i])
            g.append(need[i])
        if s in (">=", "="):
            G.append(-t.W[i])
            g.append(-need[i])
    inst = LpInstance(scenario.q, np.array(G).reshape(-1, program.m), np.array(g), t.lb, t.ub, t.integer)
    if t.integer.any():
        try:
            sol = solve_milp(inst)
        except UnboundedError:
            raise UnboundedError(f"scenario {scenario.k}: recourse unbounded at x") from None
    else:
        sol = solve_lp(inst)
    if sol.status == INFEASIBLE:
        raise InfeasibleError(f"scenario {scenario.k}: recourse infeasible at x "
                              "(relatively complete recourse fails)")
    if sol.status == UNBOUNDED:
        raise UnboundedError(f"scenario {scenario.k}: recourse unbounded at x")
    return float(sol.value)


class RecourseCache:
    """Memoizes ``Q(x, data)`` by first-stage point and scenario data."""

    def __init__(self, program):
        self.program = program
        self.store = {}

    def __call__(self, x, scenario):
        key = (np.asarray(x, dtype=float).tobytes(), scenario.key())
        if key not in self.store:
            self.store[key] = evaluate_recourse(self.program, x, scenario)
        return self.store[key]


def evaluate_objective(program, x, scenarios, cache=None):
    """``c.x + sum_k p_k Q(x, xi_k)``."""
    q = cache or RecourseCache(program)
    x = np.asarray(x, dtype=float)
    vals = [s.prob * q(x, s) for s in scenarios]
    return float(program.first.c @ x) + math.fsum(vals)


@dataclass(frozen=True, eq=False)
class SolveReport:
    nu: float
    x_star: np.ndarray
    per_scenario_Q: tuple  # (k, Q) pairs
    n_vars: int
    n_constraints: int
    n_scenarios: int
    nodes: int
    wall_time: float
    stats: dict = field(default_factory=dict)

    def to_dict(self, timings=False):
        d = {
            "nu": self.nu,
            "x_star": self.x_star.tolist(),
            "per_scenario_Q": [{"k": k, "Q": q} for k, q in self.per_scenario_Q],
            "n_scenarios": self.n_scenarios,
            "n_vars": self.n_vars,
            "n_constraints": self.n_constraints,
            "nodes": self.nodes,
            "stats": self.stats,
        }
        if timings:
            d["timings"] = {"wall_time": self.wall_time}
        return d


def solve_saa(program, scenarios, merge=True, node_limit=10**7, max_vars=MAX_EXTENSIVE_VARS):
    """Globally solve the SAA problem over ``scenarios``.

    With ``merge`` the extensive form is built over scenarios with distinct
    data (probabilities summed), which leaves the problem unchanged.
    """
    _check_probs(scenarios)
    t0 = time.perf_counter()
    solved = merge_duplicates(scenarios) if merge else list(scenarios)
    ef = extensive_form(program, solved)
    if ef.n_vars > max_vars:
        raise ScaleGuardError(f"extensive form has {ef.n_vars} variables (limit {max_vars})")
    inst = ef.to_lp()
    if ef.integer.any():
        sol = solve_milp(inst, node_limit=node_limit)
    else:
        sol = solve_lp(inst)
        if sol.status == UNBOUNDED:
            raise UnboundedError("SAA problem is unbounded")
    if sol.status != OPTIMAL:
        raise InfeasibleError("SAA problem is infeasible")
    nodes = getattr(sol, "nodes", 1)
    x = sol.x[: program.n].copy()
    x[program.first.integer] = np.round(x[program.first.integer])
    x = x + 0.0
    cache = RecourseCache(program)
    per = tuple((s.k, cache(x, s)) for s in scenarios)
    nu_check = evaluate_objective(program, x, scenarios, cache)
    wall = time.perf_counter() - t0
    stats = {
        "solver_value": float(sol.value),
        "decomposition_residual": abs(float(sol.value) - nu_check),
        "distinct_scenarios": len(solved),
    }
    return SolveReport(nu_check, x, per, ef.n_vars, ef.n_constraints, len(scenarios), nodes, wall, stats)


def random_feasible_points(program, count=N_RANDOM_PROBES, seed=0, max_tries=100000):
    """Seeded uniform points of the first-stage box, rounded where integral,
    kept when they satisfy ``A x <= b``."""
    first = program.first
    lo, hi = program.x_lo, program.x_hi
    if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
        raise ScaleGuardError("random probes need a bounded first-stage set")
    rng = np.random.default_rng(seed)
    pts = []
    tries = 0
    while len(pts) < count and tries < max_tries:
        tries += 1
        x = rng.uniform(lo, hi)
        x[first.integer] = np.round(x[first.integer])
        x = np.clip(x, lo, hi)
        if first.A.size == 0 or np.all(first.A @ x <= first.b + 1e-9):
            pts.append(x + 0.0)
    return pts


def consistency_report(program, full, reduced, full_report, reduced_report, beta=None,
                       beta_prime=None, probes=None, seed=0):
    """Compare the full and reduced SAA problems at their optima and probes."""
    cache = RecourseCache(program)
    x_full, x_red = full_report.x_star, reduced_report.x_star
    nu_full = full_report.nu
    nu_red = reduced_report.nu
    red_at_full = evaluate_objective(program, x_full, reduced, cache)
    full_at_red = evaluate_objective(program, x_red, full, cache)
    if probes is None:
        probes = [x_full, x_red] + random_feasible_points(program, seed=seed)
    probe_rows = []
    for x in probes:
        a = evaluate_objective(program, x, full, cache)
        b = evaluate_objective(program, x, reduced, cache)
        row = {"x": np.asarray(x, dtype=float).tolist(), "nu_full": a, "nu_reduced": b,
               "gap": abs(b - a)}
        if beta_prime is not None:
            row["within_beta_prime"] = bool(abs(b - a) <= beta_prime + 1e-6)
        probe_rows.append(row)
    report = {
        "nu_full": nu_full,
        "nu_reduced": nu_red,
        "x_full": x_full.tolist(),
        "x_reduced": x_red.tolist(),
        "nu_gap": abs(nu_red - nu_full),
        "full_at_reduced_gap": abs(full_at_red - nu_full),
        "eq21_reduced": bool(nu_red <= red_at_full + 1e-7),
        "eq21_full": bool(nu_full <= full_at_red + 1e-7),
        "probe_gaps": probe_rows,
        "max_probe_gap": max(r["gap"] for r in probe_rows) if probe_rows else 0.0,
        "beta": beta,
        "beta_prime": beta_prime,
    }
    if beta_prime is not None:
        report["nu_gap_within_beta_prime"] = bool(report["nu_gap"] <= beta_prime + 1e-6)
    return report


def report_json(d):
    return json.dumps(d, indent=2) + "\n"
