import socket
import struct
import threading

import pytest
from workers import spawn_worker, stop

from ljsaa.coordinates import CoordinateConfig, coordinate, coordinates_to_csv
from ljsaa.distribute import (
    PROTOCOL_VERSION,
    coordinate_remote,
    encode_frame,
    header_frame,
    job_frame,
    parse_endpoints,
    recv_frame,
    run_parallel_coordinates,
    send_frame,
    serve_worker,
)
from ljsaa.errors import ProtocolError, RemoteError
from ljsaa.model import builtin_synthetic, enumerate_scenarios


@pytest.fixture
def local_worker():
    """In-process worker thread on an ephemeral port."""
    ready = threading.Event()
    box = {}

    def announce(addr):
        box["addr"] = addr
        ready.set()

    t = threading.Thread(target=serve_worker, kwargs={"port": 0, "announce": announce}, daemon=True)
    t.start()
    ready.wait(5)
    yield box["addr"]
    try:
        with socket.create_connection(box["addr"], timeout=2) as s:
            send_frame(s, {"type": "hello", "version": PROTOCOL_VERSION})
            recv_frame(s)
            send_frame(s, {"type": "shutdown"})
    except OSError:
        pass
    t.join(5)


def test_frame_layout():
    raw = encode_frame({"type": "ready"})
    (n,) = struct.unpack(">I", raw[:4])
    assert raw[4:] == b'{"type":"ready"}'
    assert n == len(raw) - 4


def test_frame_roundtrip_full_precision():
    a, b = socket.socketpair()
    with a, b:
        send_frame(a, {"type": "result", "k": 3, "kappa": 0.1 + 0.2, "sigma": 1e-300,
                       "status": "ok"})
        got = recv_frame(b)
    assert got["kappa"] == 0.1 + 0.2 and got["sigma"] == 1e-300


def test_malformed_frame():
    a, b = socket.socketpair()
    with a, b:
        a.sendall(struct.pack(">I", 3) + b"abc")
        with pytest.raises(ProtocolError):
            recv_frame(b)


def test_handshake_and_version_mismatch(local_worker):
    with socket.create_connection(local_worker) as s:
        send_frame(s, {"type": "hello", "version": PROTOCOL_VERSION})
        assert recv_frame(s) == {"type": "ready"}
    with socket.create_connection(local_worker) as s:
        send_frame(s, {"type": "hello", "version": 99})
        reply = recv_frame(s)
        assert reply["type"] == "error"
        assert recv_frame(s) is None


def test_remote_job_bit_exact(local_worker, ex1):
    program, _, scenarios = ex1
    s = scenarios[0]
    assert s.xi == (310.0, 292.0)
    cfg = CoordinateConfig()
    with socket.create_connection(local_worker) as sock:
        send_frame(sock, {"type": "hello", "version": PROTOCOL_VERSION})
        recv_frame(sock)
        send_frame(sock, header_frame(program, cfg))
        send_frame(sock, job_frame(s))
        reply = recv_frame(sock)
    local = coordinate(program, s, cfg)
    assert reply["type"] == "result" and reply["k"] == 0
    assert reply["kappa"] == local.kappa and reply["sigma"] == local.sigma
    assert reply["status"] == local.status


def test_job_before_header_is_error(local_worker, ex1):
    _, _, scenarios = ex1
    with socket.create_connection(local_worker) as sock:
        send_frame(sock, {"type": "hello", "version": PROTOCOL_VERSION})
        recv_frame(sock)
        send_frame(sock, job_frame(scenarios[0]))
        assert recv_frame(sock)["type"] == "error"


def test_empty_lists(ex1):
    program, _, _ = ex1
    assert run_parallel_coordinates(program, [], workers=4) == []
    assert coordinate_remote([("127.0.0.1", 1)], program, []) == []


def test_threads_and_processes_match_serial(ex1, ex1_coords):
    program, _, scenarios = ex1
    serial = coordinates_to_csv(ex1_coords)
    for backend in ("thread", "process"):
        got = run_parallel_coordinates(program, scenarios, workers=8, backend=backend)
        assert coordinates_to_csv(got) == serial
    nodedupe = run_parallel_coordinates(program, scenarios, workers=4, dedupe=False)
    assert coordinates_to_csv(nodedupe) == serial


def test_worker_count_validated(ex1):
    program, _, scenarios = ex1
    with pytest.raises(ValueError):
        run_parallel_coordinates(program, scenarios, workers=0)


def test_synthetic_750_with_8_workers():
    program, dist = builtin_synthetic()
    scenarios = enumerate_scenarios(dist, program.template)
    coords = run_parallel_coordinates(program, scenarios, workers=8, backend="process")
    assert [c.k for c in coords] == list(range(750))
    for c in coords:
        assert c.usable and c.kappa <= c.sigma + 1e-7


def test_two_remote_workers_match_serial(ex1, ex1_coords):
    program, _, scenarios = ex1
    procs = [spawn_worker(), spawn_worker()]
    try:
        got = coordinate_remote([a for _, a in procs], program, scenarios, dedupe=False)
    finally:
        for p, _ in procs:
            stop(p)
    assert coordinates_to_csv(got) == coordinates_to_csv(ex1_coords)


def test_worker_crash_is_survived(ex1, ex1_coords):
    program, _, scenarios = ex1
    crashing, a = spawn_worker(crash_after=10)
    healthy, b = spawn_worker()
    try:
        got = coordinate_remote([a, b], program, scenarios, dedupe=False)
    finally:
        stop(crashing)
        stop(healthy)
    assert crashing.returncode == 3
    assert [c.k for c in got] == list(range(100))
    assert coordinates_to_csv(got) == coordinates_to_csv(ex1_coords)


def test_all_workers_lost_carries_completed(ex1):
    program, _, scenarios = ex1
    proc, addr = spawn_worker(crash_after=5)
    try:
        with pytest.raises(RemoteError) as info:
            coordinate_remote([addr], program, scenarios, dedupe=False)
    finally:
        stop(proc)
    assert len(info.value.completed) == 5


def test_no_workers_reachable(ex1):
    program, _, scenarios = ex1
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    with pytest.raises(RemoteError) as info:
        coordinate_remote([("127.0.0.1", port)], program, scenarios, connect_timeout=1.0)
    assert info.value.completed == []


def test_parse_endpoints():
    assert parse_endpoints("a:1, b:2") == [("a", 1), ("b", 2)]
    with pytest.raises(ValueError):
        parse_endpoints("nohost")
