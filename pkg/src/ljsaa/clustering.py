"""Grid clustering of (kappa, sigma) coordinates and the reduction error bound."""

import json
import math
from dataclasses import dataclass

import numpy as np

from .coordinates import spread

MIN_CORNER = "min-corner"
ORIGIN = "origin"
CENTROID = "nearest-cell-centroid"
LOWEST = "lowest-index"


@dataclass(frozen=True)
class GridConfig:
    delta: float
    anchor: str = MIN_CORNER
    representative: str = CENTROID

    def __post_init__(self):
        if not (self.delta >= 0 and math.isfinite(self.delta)):
            raise ValueError("delta must be finite and >= 0")
        if self.anchor not in (MIN_CORNER, ORIGIN):
            raise ValueError(f"anchor must be {MIN_CORNER!r} or {ORIGIN!r}")
        if self.representative not in (CENTROID, LOWEST):
            raise ValueError(f"representative must be {CENTROID!r} or {LOWEST!r}")


@dataclass(frozen=True)
class Cell:
    cell_id: str
    members: tuple
    representative: int
    probability: float


@dataclass(frozen=True)
class ClusterResult:
    delta: float
    anchor: str
    cells: tuple
    degenerate: tuple  # (k, probability) kept as their own representatives
    n_total: int
    K_delta: int
    clustered_mass: float
    D: float
    beta: float
    beta_prime: float

    @property
    def assignment(self):
        return {k: c.cell_id for c in self.cells for k in c.members}

    @property
    def representatives(self):
        """Sorted ``[(k, probability)]`` including degenerate scenarios."""
        reps = [(c.representative, c.probability) for c in self.cells] + list(self.degenerate)
        return sorted(reps)

    @property
    def replaced(self):
        """``{j: representative}`` for every clustered (non-representative) index."""
        return {j: c.representative for c in self.cells for j in c.members if j != c.representative}

    @property
    def n_representatives(self):
        return len(self.cells) + len(self.degenerate)

    def to_dict(self):
        return {
            "delta": self.delta,
            "anchor": self.anchor,
            "cells": [{"cell_id": c.cell_id, "members": list(c.members),
                       "representative": c.representative, "probability": c.probability}
                      for c in self.cells],
            "degenerate": [{"k": k, "probability": p} for k, p in self.degenerate],
            "K": self.n_total,
            "K_delta": self.K_delta,
            "clustered_mass": self.clustered_mass,
            "D": self.D,
            "beta": self.beta,
            "beta_prime": self.beta_prime,
        }

    @classmethod
    def from_dict(cls, d):
        cells = tuple(Cell(str(c["cell_id"]), tuple(int(m) for m in c["members"]),
                           int(c["representative"]), float(c["probability"])) for c in d["cells"])
        degenerate = tuple((int(e["k"]), float(e["probability"])) for e in d.get("degenerate", ()))
        return cls(float(d["delta"]), str(d["anchor"]), cells, degenerate, int(d["K"]),
                   int(d["K_delta"]), float(d["clustered_mass"]), float(d["D"]),
                   float(d["beta"]), float(d["beta_prime"]))


def _cell_keys(kap, sig, cfg):
    if cfg.delta == 0:
        return list(zip(kap.tolist(), sig.tolist()))
    h = 0.5 * cfg.delta
    if cfg.anchor == MIN_CORNER:
        k0, s0 = kap.min(), sig.min()
    else:
        k0 = s0 = 0.0
    ik = np.floor((kap - k0) / h).astype(np.int64)
    js = np.floor((sig - s0) / h).astype(np.int64)
    return list(zip(ik.tolist(), js.tolist()))


def error_bound(K_delta, clustered_mass, delta, D):
    """``(beta, beta_prime)``: ``mass * (delta + D) / 2`` and ``mass * (delta + 2 D) / 2``.

    ``clustered_mass`` is the probability carried by the replaced scenarios,
    which equals ``K_delta / K`` for equally likely scenarios.
    """
    if K_delta == 0:
        return 0.0, 0.0
    return 0.5 * clustered_mass * (delta + D), 0.5 * clustered_mass * (delta + 2.0 * D)


def grid_cluster(coords, cfg, probs=None):
    """Cluster usable coordinates into square cells of side ``delta / 2``.

    ``probs`` maps scenario index to probability (default: uniform).
    Coordinates that are not usable (degenerate, infeasible, failed) are kept
    apart as their own representatives.
    """
    coords = list(coords)
    if not coords:
        raise ValueError("no coordinates to cluster")
    K = len(coords)
    if probs is None:
        probs = {c.k: 1.0 / K for c in coords}
    ks = [c.k for c in coords]
    if len(set(ks)) != K:
        raise ValueError("duplicate scenario index among coordinates")
    missing = [k for k in ks if k not in probs]
    if missing:
        raise ValueError(f"no probability for scenario {missing[0]}")

    good = sorted((c for c in coords if c.usable), key=lambda c: c.k)
    degenerate = tuple(sorted((c.k, float(probs[c.k])) for c in coords if not c.usable))
    cells = []
    if good:
        kap = np.array([c.kappa for c in good])
        sig = np.array([c.sigma for c in good])
        if not (np.all(np.isfinite(kap)) and np.all(np.isfinite(sig))):
            raise ValueError("usable coordinates must be finite")
        groups = {}
        for i, key in enumerate(_cell_keys(kap, sig, cfg)):
            groups.setdefault(key, []).append(i)
        for n, key in enumerate(sorted(groups)):
            idx = groups[key]
            p = np.array([probs[good[i].k] for i in idx], dtype=float)
            if cfg.representative == LOWEST or len(idx) == 1:
                rep = good[idx[0]].k
            else:
                ck = float(p @ kap[idx]) / p.sum()
                cs = float(p @ sig[idx]) / p.sum()
                dist = np.hypot(kap[idx] - ck, sig[idx] - cs)
                rep = good[idx[int(np.argmin(dist))]].k
            cell_id = f"{key[0]}:{key[1]}" if cfg.delta > 0 else str(n)
            cells.append(Cell(cell_id, tuple(good[i].k for i in idx), rep, math.fsum(p)))

    K_delta = sum(len(c.members) - 1 for c in cells)
    mass = math.fsum(probs[j] for c in cells for j in c.members if j != c.representative)
    D = spread(good)
    beta, beta_prime = error_bound(K_delta, mass, cfg.delta, D)
    return ClusterResult(cfg.delta, cfg.anchor, tuple(cells), degenerate, K, K_delta, mass,
                         D, beta, beta_prime)


def select_representatives(result, scenarios):
    """Reduced scenario list ordered by representative index."""
    by_k = {s.k: s for s in scenarios}
    if len(by_k) != result.n_total or any(k not in by_k for c in result.cells for k in c.members):
        raise ValueError("cluster result does not match the scenario list")
    for k, _ in result.degenerate:
        if k not in by_k:
            raise ValueError("cluster result does not match the scenario list")
    return [by_k[k].with_prob(p) for k, p in result.representatives]


def cluster_to_json(result):
    return json.dumps(result.to_dict(), indent=2) + "\n"


def cluster_from_json(text):
    return ClusterResult.from_dict(json.loads(text))


def representative_table(result, scenarios):
    """Rows of ``(k, xi..., probability)`` for the representatives."""
    by_k = {s.k: s for s in scenarios}
    rows = []
    for k, p in result.representatives:
        xi = by_k[k].xi or ()
        rows.append((k, *xi, p))
    return rows


def representative_table_csv(result, scenarios):
    rows = representative_table(result, scenarios)
    width = max((len(r) - 2 for r in rows), default=0)
    lines = [",".join(["k"] + [f"xi{i}" for i in range(width)] + ["probability"])]
    for r in rows:
        lines.append(",".join([str(r[0])] + [repr(float(v)) for v in r[1:]]))
    return "\n".join(lines) + "\n"
