"""Similarity coordinates (kappa, sigma) of scenarios.

``kappa`` is the minimum of the joint cost ``c.x + q_k.y`` over the scenario
polyhedron and ``sigma`` its minimum over the polyhedron's maximum-volume
inscribed ellipsoid.  Since the ellipsoid lies inside the polyhedron,
``kappa <= sigma``.
"""

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .ellipsoid import CONVERGED, DEGENERACY_THRESHOLD, max_volume_inscribed_ellipsoid
from .errors import (
    DegenerateError,
    DimensionError,
    FormatError,
    InfeasibleError,
    LjsaaError,
    NodeLimitError,
)
from .linsolve import OPTIMAL, LpInstance, solve_lp, solve_milp
from .model import DEFAULT_EPSILON, RelaxationConfig, scenario_polyhedron

OK = "ok"
REGULARIZED = "regularized"
DEGENERATE = "degenerate"
INFEASIBLE = "infeasible"
FAILED = "failed"
STATUSES = (OK, REGULARIZED, DEGENERATE, INFEASIBLE, FAILED)
USABLE = (OK, REGULARIZED)
CSV_HEADER = ("k", "kappa", "sigma", "status")


@dataclass(frozen=True)
class Coordinate:
    k: int
    kappa: float
    sigma: float
    status: str

    @property
    def usable(self):
        return self.status in USABLE

    def to_dict(self):
        return {"k": self.k, "kappa": self.kappa, "sigma": self.sigma, "status": self.status}

    @classmethod
    def from_dict(cls, d):
        return cls(int(d["k"]), _num(d["kappa"]), _num(d["sigma"]), str(d["status"]))


def _num(v):
    return math.nan if v is None else float(v)


@dataclass(frozen=True)
class CoordinateConfig:
    epsilon: float = DEFAULT_EPSILON
    tol: float = 1e-8
    kappa_mode: str = "lp"
    threshold: float = DEGENERACY_THRESHOLD

    def __post_init__(self):
        if not self.epsilon >= 0:
            raise ValueError("epsilon must be >= 0")
        if not self.tol > 0:
            raise ValueError("tolerance must be > 0")
        if self.kappa_mode not in ("lp", "milp"):
            raise ValueError("kappa_mode must be 'lp' or 'milp'")

    def relaxation(self):
        return RelaxationConfig(epsilon=self.epsilon)

    def to_dict(self):
        return {"epsilon": self.epsilon, "tol": self.tol, "kappa_mode": self.kappa_mode,
                "threshold": self.threshold}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["epsilon"]), float(d["tol"]), str(d["kappa_mode"]), float(d["threshold"]))


def kappa(program, scenario, cfg=CoordinateConfig(), P=None):
    """Minimum joint cost over the scenario polyhedron (LP, or MILP if asked)."""
    if P is None:
        P = scenario_polyhedron(program, scenario, cfg.relaxation())
    w = program.joint_cost(scenario)
    if cfg.kappa_mode == "milp":
        integer = np.concatenate([program.first.integer, program.template.integer])
        sol = solve_milp(LpInstance.from_polyhedron(w, P, integer))
    else:
        sol = solve_lp(LpInstance.from_polyhedron(w, P))
    if sol.status != OPTIMAL:
        raise InfeasibleError(f"scenario {scenario.k}: no optimum over the polyhedron ({sol.status})")
    return float(sol.value)


def sigma(program, scenario, E):
    """Closed-form minimum of ``[c; q_k].z`` over the ellipsoid ``E``."""
    w = program.joint_cost(scenario)
    if w.size != E.dim:
        raise DimensionError(f"cost length {w.size} != ellipsoid dim {E.dim}")
    return E.support_min(w)


def coordinate(program, scenario, cfg=CoordinateConfig()):
    """Full per-scenario pipeline; failures are encoded in ``status``."""
    k = scenario.k
    has_eq = "=" in program.template.senses
    try:
        P = scenario_polyhedron(program, scenario, cfg.relaxation())
    except InfeasibleError:
        return Coordinate(k, math.nan, math.nan, INFEASIBLE)
    except LjsaaError:
        return Coordinate(k, math.nan, math.nan, FAILED)
    try:
        kap = kappa(program, scenario, cfg, P)
    except InfeasibleError:
        return Coordinate(k, math.nan, math.nan, INFEASIBLE)
    except (LjsaaError, NodeLimitError):
        return Coordinate(k, math.nan, math.nan, FAILED)
    try:
        E, rep = max_volume_inscribed_ellipsoid(P, tol=cfg.tol, threshold=cfg.threshold)
    except DegenerateError:
        return Coordinate(k, kap, math.nan, DEGENERATE)
    except InfeasibleError:
        return Coordinate(k, math.nan, math.nan, INFEASIBLE)
    except LjsaaError:
        return Coordinate(k, kap, math.nan, FAILED)
    if rep.status != CONVERGED:
        return Coordinate(k, kap, math.nan, FAILED)
    status = REGULARIZED if has_eq and cfg.epsilon > 0 else OK
    return Coordinate(k, kap, sigma(program, scenario, E), status)


def epsilon_k(sigma_k, recourse_value):
    """Gap between the ellipsoid coordinate and a recourse value; may be negative."""
    return sigma_k - recourse_value


def spread(coords):
    """Empirical max of ``sigma - kappa`` over usable coordinates (0 if none)."""
    vals = [c.sigma - c.kappa for c in coords if c.usable]
    return max(vals) if vals else 0.0


def _fmt(v):
    return repr(float(v))


def coordinates_to_csv(coords):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for c in sorted(coords, key=lambda c: c.k):
        w.writerow([c.k, _fmt(c.kappa), _fmt(c.sigma), c.status])
    return buf.getvalue()


def write_coordinates_csv(path, coords):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(coordinates_to_csv(coords))


def read_coordinates_csv(path):
    with open(path, "rb") as fh:
        data = fh.read()
    return parse_coordinates_csv(data)


def parse_coordinates_csv(data):
    """Parse coordinate CSV bytes; errors name the byte offset of the bad line."""
    if isinstance(data, str):
        data = data.encode("utf-8")
    offset = 0
    out = []
    for lineno, raw in enumerate(data.splitlines(keepends=True)):
        line = raw.decode("utf-8", errors="replace").strip()
        here = offset
        offset += len(raw)
        if lineno == 0:
            if tuple(line.split(",")) != CSV_HEADER:
                raise FormatError(f"coordinates csv: bad header at byte {here}")
            continue
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 4 or parts[3] not in STATUSES:
            raise FormatError(f"coordinates csv: malformed row at byte {here}")
        try:
            out.append(Coordinate(int(parts[0]), float(parts[1]), float(parts[2]), parts[3]))
        except ValueError:
            raise FormatError(f"coordinates csv: bad number at byte {here}") from None
    if not data:
        raise FormatError("coordinates csv: empty file at byte 0")
    return out
