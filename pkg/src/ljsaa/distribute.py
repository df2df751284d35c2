"""Parallel and networked evaluation of scenario coordinates.

Local runs use a thread or process pool.  Remote runs speak a small framed
protocol over TCP: each frame is a 4-byte big-endian length followed by that
many bytes of UTF-8 JSON.  A worker expects ``hello`` (answering ``ready``),
then one ``header`` carrying the program and configuration, then any number
of ``job`` frames, each answered by a ``result``.  ``shutdown`` stops it.
"""

import json
import logging
import math
import os
import queue
import socket
import struct
import sys
import threading
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass

from .coordinates import Coordinate, CoordinateConfig, coordinate
from .errors import ProtocolError, RemoteError
from .problemio import (
    program_from_dict,
    program_to_dict,
    scenario_from_dict,
    scenario_to_dict,
)

log = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
MAX_FRAME = 64 * 1024 * 1024
_LEN = struct.Struct(">I")


@dataclass(frozen=True)
class JobResult:
    k: int
    coordinate: Coordinate
    worker: str
    seconds: float


# ---------------------------------------------------------------- local pools

def _distinct(scenarios):
    """Group scenario indices by identical data; coordinates depend on nothing else."""
    groups = {}
    for s in scenarios:
        groups.setdefault(s.key(), []).append(s)
    return list(groups.values())


def _fan_out(groups, coords):
    out = []
    for members, c in zip(groups, coords):
        for s in members:
            out.append(Coordinate(s.k, c.kappa, c.sigma, c.status))
    return sorted(out, key=lambda c: c.k)


_STATE = {}


def _init_process(program, cfg):
    _STATE["program"] = program
    _STATE["cfg"] = cfg


def _process_job(scenario):
    return coordinate(_STATE["program"], scenario, _STATE["cfg"])


def run_parallel_coordinates(program, scenarios, workers=1, cfg=CoordinateConfig(),
                             backend="thread", dedupe=True):
    """Coordinates of ``scenarios`` in index order, using ``workers`` pool slots.

    ``backend`` is ``"thread"`` or ``"process"``.  With ``dedupe`` each
    distinct scenario data set is computed once and its result shared by all
    indices carrying it.
    """
    if workers < 1:
        raise ValueError("worker count must be >= 1")
    scenarios = list(scenarios)
    if not scenarios:
        return []
    groups = _distinct(scenarios) if dedupe else [[s] for s in scenarios]
    heads = [g[0] for g in groups]
    if workers == 1:
        coords = [coordinate(program, s, cfg) for s in heads]
    elif backend == "thread":
        with ThreadPoolExecutor(max_workers=workers) as pool:
            coords = list(pool.map(lambda s: coordinate(program, s, cfg), heads))
    elif backend == "process":
        chunk = max(1, len(heads) // (8 * workers))
        with ProcessPoolExecutor(max_workers=workers, initializer=_init_process,
                                 initargs=(program, cfg)) as pool:
            coords = list(pool.map(_process_job, heads, chunksize=chunk))
    else:
        raise ValueError(f"unknown backend {backend!r}")
    return _fan_out(groups, coords)


# ---------------------------------------------------------------- framing

def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    return v


def encode_frame(obj):
    body = json.dumps(obj, allow_nan=False, separators=(",", ":")).encode("utf-8")
    if len(body) > MAX_FRAME:
        raise ProtocolError("frame too large")
    return _LEN.pack(len(body)) + body


def _recv_exact(sock, n):
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return bytes(buf)


def send_frame(sock, obj):
    sock.sendall(encode_frame(obj))


def recv_frame(sock):
    """Next frame as a dict, or None on a clean end of stream."""
    head = _recv_exact(sock, _LEN.size)
    if head is None:
        return None
    (n,) = _LEN.unpack(head)
    if n > MAX_FRAME:
        raise ProtocolError(f"frame length {n} exceeds limit")
    body = _recv_exact(sock, n)
    if body is None:
        raise ProtocolError("connection closed mid-frame")
    try:
        obj = json.loads(body.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ProtocolError(f"malformed frame body: {exc}") from None
    if not isinstance(obj, dict) or "type" not in obj:
        raise ProtocolError("frame is not a typed object")
    return obj


def header_frame(program, cfg):
    frame = {"type": "header"}
    frame.update(program_to_dict(program, derived=True))
    frame["config"] = cfg.to_dict()
    return frame


def job_frame(scenario):
    return {"type": "job", "k": scenario.k, "scenario": scenario_to_dict(scenario)}


def result_frame(c):
    return {"type": "result", "k": c.k, "kappa": _clean(c.kappa), "sigma": _clean(c.sigma),
            "status": c.status}


# ---------------------------------------------------------------- worker

def _serve_connection(conn, crash_after, counter):
    """Handle one coordinator; return True when asked to shut down."""
    def fail(msg):
        try:
            send_frame(conn, {"type": "error", "msg": msg})
        except OSError:
            pass
        return False

    try:
        hello = recv_frame(conn)
        if hello is None:
            return False
        if hello.get("type") != "hello":
            return fail("expected hello")
        if hello.get("version") != PROTOCOL_VERSION:
            return fail(f"protocol version {hello.get('version')!r} not supported "
                        f"(want {PROTOCOL_VERSION})")
        send_frame(conn, {"type": "ready"})
        program = cfg = None
        while True:
            frame = recv_frame(conn)
            if frame is None:
                return False
            kind = frame["type"]
            if kind == "shutdown":
                return True
            if kind == "header":
                body = {k: v for k, v in frame.items() if k not in ("type", "config")}
                program = program_from_dict(body).program
                cfg = CoordinateConfig.from_dict(frame["config"])
                continue
            if kind != "job":
                return fail(f"unexpected frame type {kind!r}")
            if program is None:
                return fail("job before header")
            scenario = scenario_from_dict(frame["scenario"], int(frame["k"]))
            c = coordinate(program, scenario, cfg)
            counter[0] += 1
            if crash_after is not None and counter[0] > crash_after:
                # fault-injection hook: die without answering
                os._exit(3)
            send_frame(conn, result_frame(c))
    except ProtocolError as exc:
        return fail(str(exc))
    except (KeyError, TypeError, ValueError) as exc:
        return fail(f"bad frame: {exc}")
    except OSError:
        return False


def serve_worker(host="127.0.0.1", port=0, announce=None, crash_after=None):
    """Serve coordinators one connection at a time until a ``shutdown`` frame.

    ``announce`` receives the bound ``(host, port)``; by default it is printed
    as ``listening HOST:PORT`` on stdout.
    """
    srv = socket.create_server((host, port))
    bound = srv.getsockname()[:2]
    if announce is None:
        print(f"listening {bound[0]}:{bound[1]}", flush=True)
    else:
        announce(bound)
    counter = [0]
    try:
        while True:
            conn, _ = srv.accept()
            with conn:
                conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
                if _serve_connection(conn, crash_after, counter):
                    return
    finally:
        srv.close()


# ---------------------------------------------------------------- coordinator

def parse_endpoints(spec):
    out = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        host, _, port = part.rpartition(":")
        if not host or not port.isdigit():
            raise ValueError(f"bad endpoint {part!r}; expected host:port")
        out.append((host, int(port)))
    return out


def _handshake(sock):
    send_frame(sock, {"type": "hello", "version": PROTOCOL_VERSION})
    reply = recv_frame(sock)
    if reply is None or reply.get("type") != "ready":
        msg = reply.get("msg") if reply else "connection closed"
        raise ProtocolError(f"handshake refused: {msg}")


def coordinate_remote(endpoints, program, scenarios, cfg=CoordinateConfig(), shutdown=False,
                      connect_timeout=5.0, dedupe=True):
    """Coordinates computed by remote workers, in index order.

    Jobs are dispatched at least once; a worker that disconnects has its
    in-flight job put back on the queue, and the first result per index wins.
    Raises :class:`RemoteError` (carrying completed coordinates) if every
    worker is lost first, or if none can be reached.
    """
    scenarios = list(scenarios)
    if not scenarios:
        return []
    groups = _distinct(scenarios) if dedupe else [[s] for s in scenarios]
    heads = {g[0].k: g[0] for g in groups}
    jobs = queue.Queue()
    for k in heads:
        jobs.put(k)
    results = {}
    lock = threading.Lock()
    done = threading.Event()
    header = header_frame(program, cfg)

    socks = []
    for host, port in endpoints:
        try:
            s = socket.create_connection((host, port), timeout=connect_timeout)
            s.settimeout(None)
            s.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
            _handshake(s)
            send_frame(s, header)
            socks.append((f"{host}:{port}", s))
        except (OSError, ProtocolError) as exc:
            log.warning("worker %s:%s unavailable: %s", host, port, exc)
    if not socks:
        raise RemoteError("no workers reachable", completed=[])

    def drive(name, sock):
        k = None
        try:
            while not done.is_set():
                try:
                    k = jobs.get(timeout=0.05)
                except queue.Empty:
                    k = None
                    continue
                if k in results:
                    k = None
                    continue
                send_frame(sock, job_frame(heads[k]))
                reply = recv_frame(sock)
                if reply is None or reply.get("type") != "result" or int(reply.get("k", -1)) != k:
                    raise ProtocolError(f"worker {name} sent {reply!r}")
                c = Coordinate.from_dict(reply)
                with lock:
                    results.setdefault(k, c)
                    if len(results) == len(heads):
                        done.set()
                k = None
            if shutdown:
                send_frame(sock, {"type": "shutdown"})
        except (OSError, ProtocolError, ValueError) as exc:
            log.warning("worker %s lost: %s", name, exc)
            if k is not None:
                jobs.put(k)
        finally:
            sock.close()

    threads = [threading.Thread(target=drive, args=(name, s), daemon=True) for name, s in socks]
    for t in threads:
        t.start()
    while not done.is_set():
        if not any(t.is_alive() for t in threads):
            break
        done.wait(0.05)
    done.set()
    for t in threads:
        t.join()
    finished = [g for g in groups if g[0].k in results]
    coords = _fan_out(finished, [results[g[0].k] for g in finished])
    if len(finished) != len(groups):
        raise RemoteError(f"all workers lost; {len(coords)} of {len(scenarios)} coordinates done",
                          completed=coords)
    return coords


def main_worker(argv=None):
    """Entry for ``python -m ljsaa.distribute HOST PORT [CRASH_AFTER]``."""
    argv = sys.argv[1:] if argv is None else argv
    host = argv[0] if argv else "127.0.0.1"
    port = int(argv[1]) if len(argv) > 1 else 0
    crash = int(argv[2]) if len(argv) > 2 else None
    serve_worker(host, port, crash_after=crash)


if __name__ == "__main__":
    main_worker()
