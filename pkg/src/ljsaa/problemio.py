"""JSON problem files.

Layout::

    {"first_stage":  {"c", "A", "b", "integer", "lb", "ub"},
     "second_stage": {"W", "senses", "q", "T", "h", "integer", "lb", "ub",
                      "distribution": {"marginals": [{"values", "probs"}], "seed",
                                       "q_coef", "T_coef", "h_coef"}},
     "scenarios":    [{"q", "T", "h", "prob", "xi"}]}

``q``, ``T``, ``h`` under ``second_stage`` are the constant parts of the
affine maps from the random vector.  Infinite bounds are written as ``null``.
Floats use Python's shortest round-trip repr.
"""

import json
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError, FormatError
from .model import (
    DistributionSpec,
    FirstStage,
    Scenario,
    ScenarioTemplate,
    StochasticProgram,
    build_problem,
)


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    program: StochasticProgram
    dist: DistributionSpec = None
    scenarios: tuple = None


def _vec(a, fill=None):
    """Array to list with non-finite entries as ``null``."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        v = float(a)
        return v if np.isfinite(v) else fill
    return [_vec(r, fill) for r in a]


def _load(v, name, null=np.inf):
    def fix(x):
        if isinstance(x, list):
            return [fix(e) for e in x]
        if x is None:
            return null
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise FormatError(f"{name}: expected a number, got {x!r}")
        return float(x)
    try:
        return np.array(fix(v), dtype=float)
    except ValueError as exc:
        raise FormatError(f"{name}: ragged array") from exc


def _get(d, key, where, default=KeyError):
    if not isinstance(d, dict):
        raise FormatError(f"{where}: expected an object")
    if key not in d:
        if default is KeyError:
            raise FormatError(f"{where}: missing key {key!r}")
        return default
    return d[key]


def scenario_to_dict(s):
    d = {"k": s.k, "q": _vec(s.q), "T": _vec(s.T), "h": _vec(s.h), "prob": s.prob}
    if s.xi is not None:
        d["xi"] = list(s.xi)
    return d


def scenario_from_dict(d, k=None):
    where = f"scenario {k if k is not None else d.get('k', '?')}"
    xi = d.get("xi")
    return Scenario(int(d.get("k", k) if k is None else k),
                    _load(_get(d, "q", where), where + ".q"),
                    _load(_get(d, "T", where), where + ".T"),
                    _load(_get(d, "h", where), where + ".h"),
                    float(_get(d, "prob", where)),
                    None if xi is None else tuple(float(v) for v in xi))


def program_to_dict(program, dist=None, scenarios=None, derived=False):
    f, t = program.first, program.template
    out = {
        "first_stage": {"c": _vec(f.c), "A": _vec(f.A), "b": _vec(f.b),
                        "integer": f.integer.tolist(), "lb": _vec(f.lb), "ub": _vec(f.ub)},
        "second_stage": {"W": _vec(t.W), "senses": list(t.senses), "q": _vec(t.q0),
                         "T": _vec(t.T0), "h": _vec(t.h0), "integer": t.integer.tolist(),
                         "lb": _vec(t.lb), "ub": _vec(t.ub)},
    }
    if t.n_xi:
        out["second_stage"]["maps"] = {"q_coef": _vec(t.q_coef), "T_coef": _vec(t.T_coef),
                                       "h_coef": _vec(t.h_coef)}
    if dist is not None:
        out["second_stage"]["distribution"] = {
            "marginals": [{"values": _vec(v), "probs": _vec(p)} for v, p in dist.marginals],
            "seed": dist.seed,
        }
    if scenarios is not None:
        out["scenarios"] = [scenario_to_dict(s) for s in scenarios]
    if derived:
        out["derived_bounds"] = {"x_lo": _vec(program.x_lo), "x_hi": _vec(program.x_hi),
                                 "y_hi": _vec(program.y_hi)}
    return out


def program_from_dict(d):
    """Inverse of :func:`program_to_dict`; returns a :class:`ProblemInstance`."""
    try:
        fs = _get(d, "first_stage", "problem")
        ss = _get(d, "second_stage", "problem")
        c = _load(_get(fs, "c", "first_stage"), "first_stage.c")
        n = c.size
        A = _load(_get(fs, "A", "first_stage", []), "first_stage.A")
        first = FirstStage(
            c=c, A=A.reshape(-1, n) if A.size else np.zeros((0, n)),
            b=_load(_get(fs, "b", "first_stage", []), "first_stage.b"),
            integer=_get(fs, "integer", "first_stage", None),
            lb=None if fs.get("lb") is None else _load(fs["lb"], "first_stage.lb", -np.inf),
            ub=None if fs.get("ub") is None else _load(fs["ub"], "first_stage.ub"))
        W = _load(_get(ss, "W", "second_stage"), "second_stage.W")
        if W.ndim != 2:
            raise FormatError("second_stage.W: expected a matrix")
        ell, m = W.shape
        maps = ss.get("maps") or {}
        template = ScenarioTemplate(
            W=W, senses=tuple(_get(ss, "senses", "second_stage")),
            q0=_load(ss.get("q", [0.0] * m), "second_stage.q"),
            T0=_load(ss.get("T", [[0.0] * n] * ell), "second_stage.T"),
            h0=_load(ss.get("h", [0.0] * ell), "second_stage.h"),
            q_coef=None if "q_coef" not in maps else _load(maps["q_coef"], "maps.q_coef"),
            T_coef=None if "T_coef" not in maps else _load(maps["T_coef"], "maps.T_coef"),
            h_coef=None if "h_coef" not in maps else _load(maps["h_coef"], "maps.h_coef"),
            integer=ss.get("integer"),
            lb=None if ss.get("lb") is None else _load(ss["lb"], "second_stage.lb", -np.inf),
            ub=None if ss.get("ub") is None else _load(ss["ub"], "second_stage.ub"))
        dist = None
        if "distribution" in ss:
            dd = ss["distribution"]
            margs = tuple((_load(_get(mg, "values", "marginal"), "marginal.values"),
                           _load(_get(mg, "probs", "marginal"), "marginal.probs"))
                          for mg in _get(dd, "marginals", "distribution"))
            dist = DistributionSpec(margs, int(dd.get("seed", 0)))
        scenarios = None
        if d.get("scenarios") is not None:
            scenarios = tuple(scenario_from_dict(s, k) for k, s in enumerate(d["scenarios"]))
        if "derived_bounds" in d:
            db = d["derived_bounds"]
            program = StochasticProgram(first, template,
                                        _load(db["x_lo"], "x_lo", -np.inf),
                                        _load(db["x_hi"], "x_hi", np.inf),
                                        _load(db["y_hi"], "y_hi", np.nan))
            for a in (program.x_lo, program.x_hi, program.y_hi):
                a.setflags(write=False)
        else:
            if dist is None and scenarios is None:
                raise FormatError("problem needs second_stage.distribution or scenarios")
            program = build_problem(first, template, dist if dist is not None else scenarios)
    except (DimensionError, TypeError, ValueError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"invalid problem data: {exc}") from exc
    return ProblemInstance(program, dist, scenarios)


def dumps_problem(program, dist=None, scenarios=None):
    return json.dumps(program_to_dict(program, dist, scenarios), indent=1) + "\n"


def loads_problem(text):
    """Parse problem JSON; syntax errors report the byte offset."""
    if isinstance(text, bytes):
        raw = text
        try:
            text = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise FormatError(f"problem file is not UTF-8 (byte offset {exc.start})") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        offset = len(text[: exc.pos].encode("utf-8"))
        raise FormatError(f"problem JSON syntax error at byte offset {offset}: {exc.msg}") from None
    return program_from_dict(data)


def load_problem(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise FormatError(f"cannot read problem file {path}: {exc.strerror}") from None
    return loads_problem(raw)


def save_problem(path, program, dist=None, scenarios=None):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_problem(program, dist, scenarios))


__all__ = ["ProblemInstance", "dumps_problem", "load_problem", "loads_problem",
           "program_from_dict", "program_to_dict", "save_problem", "scenario_from_dict",
           "scenario_to_dict"]
