"""Start real worker processes for network tests."""

import subprocess
import sys


def spawn_worker(crash_after=None):
    """Launch ``python -m ljsaa.distribute`` on an ephemeral port; returns (proc, (host, port))."""
    cmd = [sys.executable, "-m", "ljsaa.distribute", "127.0.0.1", "0"]
    if crash_after is not None:
        cmd.append(str(crash_after))
    proc = subprocess.Popen(cmd, stdout=subprocess.PIPE, text=True)
    line = proc.stdout.readline().strip()
    if not line.startswith("listening "):
        proc.kill()
        raise RuntimeError(f"worker did not start: {line!r}")
    host, _, port = line.split()[1].rpartition(":")
    return proc, (host, int(port))


def stop(proc):
    if proc.poll() is None:
        proc.kill()
    proc.wait(timeout=10)
    proc.stdout.close()
