"""Command-line front end.

Stages compose through files in ``--out``::

    gen      -> problem.json
    coords   -> coordinates.csv, scatter.gp, scatter.png
    cluster  -> clusters.json, representatives.csv
    solve    -> solve_full.json [, solve_reduced.json, consistency.json]
    pipeline -> all of the above
"""

import argparse
import contextlib
import json
import logging
import os
import sys
from dataclasses import dataclass

from . import __version__
from .clustering import (
    GridConfig,
    cluster_from_json,
    cluster_to_json,
    grid_cluster,
    representative_table_csv,
    select_representatives,
)
from .coordinates import CoordinateConfig, read_coordinates_csv, write_coordinates_csv
from .distribute import (
    coordinate_remote,
    parse_endpoints,
    run_parallel_coordinates,
    serve_worker,
)
from .errors import FormatError
from .model import BUILTINS, builtin, enumerate_scenarios, sample_iid
from .plotting import write_gnuplot_script, write_scatter_png
from .problemio import dumps_problem, load_problem
from .saa import consistency_report, report_json, solve_saa

log = logging.getLogger("ljsaa")


class StageError(Exception):
    def __init__(self, stage, exc):
        super().__init__(f"stage: {stage}: {exc}")
        self.stage = stage


@contextlib.contextmanager
def stage(name):
    try:
        yield
    except StageError:
        raise
    except Exception as exc:  # every failure is reported with its stage
        raise StageError(name, exc) from exc


@dataclass
class PipelineConfig:
    problem: str = None
    builtin: str = None
    enumerate: bool = False
    sample: int = None
    seed: int = None
    deltas: tuple = ()
    sweep: bool = False
    epsilon: float = 1e-3
    tol: float = 1e-8
    kappa_mode: str = "lp"
    threads: int = 1
    backend: str = "process"
    workers: str = None
    out: str = "."
    timings: bool = False

    def __post_init__(self):
        if (self.problem is None) == (self.builtin is None):
            raise ValueError("give exactly one of --problem or --builtin")
        if self.sample is not None and self.sample < 1:
            raise ValueError("--sample K needs K >= 1")
        if any(d < 0 for d in self.deltas):
            raise ValueError("delta must be >= 0")

    @classmethod
    def from_args(cls, a):
        deltas = ()
        sweep = False
        if getattr(a, "delta_sweep", None):
            deltas = tuple(float(v) for v in a.delta_sweep.split(",") if v.strip())
            sweep = True
        elif getattr(a, "delta", None) is not None:
            deltas = (a.delta,)
        return cls(problem=a.problem, builtin=a.builtin, enumerate=a.enumerate, sample=a.sample,
                   seed=a.seed, deltas=deltas, sweep=sweep,
                   epsilon=getattr(a, "epsilon", 1e-3), tol=getattr(a, "tol", 1e-8),
                   kappa_mode=getattr(a, "kappa_mode", "lp"), threads=getattr(a, "threads", 1),
                   backend=getattr(a, "backend", "process"), workers=getattr(a, "workers", None),
                   out=a.out, timings=getattr(a, "timings", False))

    def coord_config(self):
        return CoordinateConfig(epsilon=self.epsilon, tol=self.tol, kappa_mode=self.kappa_mode)


# ---------------------------------------------------------------- stage bodies

def load_instance(cfg):
    """``(program, dist, scenarios)`` from the configured source."""
    with stage("ingest"):
        if cfg.builtin is not None:
            program, dist = builtin(cfg.builtin)
            given = None
        else:
            inst = load_problem(cfg.problem)
            program, dist, given = inst.program, inst.dist, inst.scenarios
    with stage("generate"):
        if cfg.sample is not None:
            if dist is None:
                raise FormatError("--sample needs a distribution in the problem")
            scenarios = sample_iid(dist, program.template, cfg.sample, cfg.seed)
        elif cfg.enumerate or given is None:
            if dist is None:
                raise FormatError("--enumerate needs a distribution in the problem")
            scenarios = enumerate_scenarios(dist, program.template)
        else:
            scenarios = list(given)
    return program, dist, scenarios


def _path(cfg, name):
    return os.path.join(cfg.out, name)


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def do_gen(cfg, program, dist, scenarios):
    with stage("output"):
        _write(_path(cfg, "problem.json"), dumps_problem(program, dist, scenarios))
    print(f"problem.json: {len(scenarios)} scenarios")


def do_coords(cfg, program, scenarios):
    ccfg = cfg.coord_config()
    with stage("coordinates"):
        if cfg.workers:
            coords = coordinate_remote(parse_endpoints(cfg.workers), program, scenarios, ccfg)
        else:
            coords = run_parallel_coordinates(program, scenarios, cfg.threads, ccfg,
                                              backend=cfg.backend)
    with stage("output"):
        write_coordinates_csv(_path(cfg, "coordinates.csv"), coords)
        write_gnuplot_script(_path(cfg, "scatter.gp"))
        write_scatter_png(_path(cfg, "scatter.png"), coords)
    counts = {}
    for c in coords:
        counts[c.status] = counts.get(c.status, 0) + 1
    print(f"coordinates.csv: {len(coords)} scenarios "
          + ", ".join(f"{k}={v}" for k, v in sorted(counts.items())))
    return coords


def _cluster_name(cfg, delta, base, ext):
    return f"{base}_{delta!r}.{ext}" if cfg.sweep else f"{base}.{ext}"


def do_cluster(cfg, coords, scenarios):
    if not cfg.deltas:
        raise StageError("cluster", ValueError("give --delta or --delta-sweep"))
    probs = {s.k: s.prob for s in scenarios}
    results = []
    for delta in cfg.deltas:
        with stage("cluster"):
            res = grid_cluster(coords, GridConfig(delta), probs)
            table = representative_table_csv(res, scenarios)
        with stage("output"):
            _write(_path(cfg, _cluster_name(cfg, delta, "clusters", "json")), cluster_to_json(res))
            _write(_path(cfg, _cluster_name(cfg, delta, "representatives", "csv")), table)
        print(f"delta={delta!r}: representatives={res.n_representatives} K_delta={res.K_delta} "
              f"D={res.D!r} beta={res.beta!r} beta_prime={res.beta_prime!r}")
        results.append(res)
    if cfg.sweep:
        summary = [{"delta": r.delta, "representatives": r.n_representatives, "K_delta": r.K_delta,
                    "D": r.D, "beta": r.beta, "beta_prime": r.beta_prime} for r in results]
        with stage("output"):
            _write(_path(cfg, "sweep.json"), json.dumps(summary, indent=2) + "\n")
    return results


def _solve_doc(rep, timings, gaps=None, beta=None, beta_prime=None):
    d = rep.to_dict(timings=timings)
    d["gaps"] = gaps
    d["beta"] = beta
    d["beta_prime"] = beta_prime
    return d


def do_solve(cfg, program, scenarios, clusters=()):
    with stage("solve-full"):
        full = solve_saa(program, scenarios)
    with stage("output"):
        _write(_path(cfg, "solve_full.json"), report_json(_solve_doc(full, cfg.timings)))
    print(f"solve_full.json: nu={full.nu!r} x={full.x_star.tolist()} vars={full.n_vars}")
    for res in clusters:
        with stage("solve-reduced"):
            reduced = select_representatives(res, scenarios)
            red = solve_saa(program, reduced, merge=False)
        with stage("consistency"):
            cons = consistency_report(program, scenarios, reduced, full, red, res.beta,
                                      res.beta_prime)
        gaps = {"nu_gap": cons["nu_gap"],
                "probe_gaps": [{"x": r["x"], "gap": r["gap"]} for r in cons["probe_gaps"]]}
        with stage("output"):
            _write(_path(cfg, _cluster_name(cfg, res.delta, "solve_reduced", "json")),
                   report_json(_solve_doc(red, cfg.timings, gaps, res.beta, res.beta_prime)))
            _write(_path(cfg, _cluster_name(cfg, res.delta, "consistency", "json")),
                   report_json(cons))
        print(f"delta={res.delta!r}: reduced nu={red.nu!r} x={red.x_star.tolist()} "
              f"vars={red.n_vars} cons={red.n_constraints} nu_gap={cons['nu_gap']!r} "
              f"beta_prime={res.beta_prime!r}")
    return full


# ---------------------------------------------------------------- commands

def cmd_gen(a):
    cfg = PipelineConfig.from_args(a)
    os.makedirs(cfg.out, exist_ok=True)
    program, dist, scenarios = load_instance(cfg)
    do_gen(cfg, program, dist, scenarios)


def cmd_coords(a):
    cfg = PipelineConfig.from_args(a)
    os.makedirs(cfg.out, exist_ok=True)
    program, _, scenarios = load_instance(cfg)
    do_coords(cfg, program, scenarios)


def cmd_cluster(a):
    cfg = PipelineConfig.from_args(a)
    os.makedirs(cfg.out, exist_ok=True)
    _, _, scenarios = load_instance(cfg)
    with stage("ingest"):
        coords = read_coordinates_csv(a.coords or _path(cfg, "coordinates.csv"))
    do_cluster(cfg, coords, scenarios)


def cmd_solve(a):
    cfg = PipelineConfig.from_args(a)
    os.makedirs(cfg.out, exist_ok=True)
    program, _, scenarios = load_instance(cfg)
    clusters = []
    with stage("ingest"):
        for path in a.clusters or ():
            with open(path, encoding="utf-8") as fh:
                clusters.append(cluster_from_json(fh.read()))
    if clusters and len(clusters) > 1:
        cfg.sweep = True
    do_solve(cfg, program, scenarios, clusters)


def cmd_pipeline(a):
    cfg = PipelineConfig.from_args(a)
    if not cfg.deltas:
        raise StageError("ingest", ValueError("give --delta or --delta-sweep"))
    with stage("output"):
        os.makedirs(cfg.out, exist_ok=True)
    program, dist, scenarios = load_instance(cfg)
    do_gen(cfg, program, dist, scenarios)
    coords = do_coords(cfg, program, scenarios)
    clusters = do_cluster(cfg, coords, scenarios)
    do_solve(cfg, program, scenarios, clusters)


def cmd_worker(a):
    host, _, port = a.listen.rpartition(":")
    with stage("worker"):
        serve_worker(host or "127.0.0.1", int(port), crash_after=a.crash_after)


# ---------------------------------------------------------------- parser

def _instance_args(p):
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", metavar="PATH", help="problem JSON file")
    src.add_argument("--builtin", metavar="NAME", choices=sorted(BUILTINS),
                     help="built-in instance: " + ", ".join(sorted(BUILTINS)))
    how = p.add_mutually_exclusive_group()
    how.add_argument("--enumerate", action="store_true", help="use every support point")
    how.add_argument("--sample", metavar="K", type=int, help="draw K iid scenarios")
    p.add_argument("--seed", type=int, default=None, help="sampling seed (default: the problem's)")
    p.add_argument("--out", metavar="DIR", default=".", help="output directory")


def _coord_args(p):
    p.add_argument("--epsilon", type=float, default=1e-3, help="equality-row relaxation")
    p.add_argument("--tol", type=float, default=1e-8, help="ellipsoid solver tolerance")
    p.add_argument("--kappa-mode", choices=("lp", "milp"), default="lp")
    p.add_argument("--threads", type=int, default=1, help="local pool size")
    p.add_argument("--backend", choices=("process", "thread"), default="process",
                   help="local pool kind")
    p.add_argument("--workers", metavar="HOST:PORT[,...]", help="remote worker endpoints")


def _delta_args(p, required):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--delta", type=float, help="grid parameter")
    g.add_argument("--delta-sweep", metavar="LIST", help="comma-separated grid parameters")


def build_parser():
    parser = argparse.ArgumentParser(prog="ljsaa", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write the scenario set to problem.json")
    _instance_args(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("coords", help="compute (kappa, sigma) for every scenario")
    _instance_args(p)
    _coord_args(p)
    p.set_defaults(func=cmd_coords)

    p = sub.add_parser("cluster", help="grid-cluster coordinates")
    _instance_args(p)
    _delta_args(p, required=True)
    p.add_argument("--coords", metavar="PATH", help="coordinates CSV (default OUT/coordinates.csv)")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("solve", help="solve full and reduced SAA problems")
    _instance_args(p)
    p.add_argument("--clusters", metavar="PATH", nargs="*", help="cluster JSON file(s)")
    p.add_argument("--timings", action="store_true", help="add wall times to reports")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("pipeline", help="run every stage")
    _instance_args(p)
    _coord_args(p)
    _delta_args(p, required=True)
    p.add_argument("--timings", action="store_true", help="add wall times to reports")
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("worker", help="serve coordinate jobs over TCP")
    p.add_argument("--listen", default="127.0.0.1:0", metavar="HOST:PORT")
    p.add_argument("--crash-after", type=int, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_worker)
    return parser


def main(argv=None):
    parser = build_parser()
    a = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        a.func(a)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: stage: ingest: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
