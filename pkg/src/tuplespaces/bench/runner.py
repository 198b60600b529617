"""Benchmark orchestration: topologies, repetitions, dumps and manifests.

Three topologies:

* threads -- every role is a thread of this process, each with its own local
  space served on a loopback port; cross-role traffic still flows through
  TCP, so the communication structure matches the multi-process layouts.
* procs   -- every role is a spawned local process (`run-role` entry point);
  roles find each other through pre-assigned ports.
* hosts   -- addresses come from a hosts file (master first); this process
  runs the master and the workers are started elsewhere with `run-role`.

One repetition = fresh spaces, fresh connections, fresh profiler state.  The
rep seed is seed + rep_index, so repetitions have fresh inputs that remain
reproducible.  Every rep writes its dump file(s) and the whole run writes a
key=value manifest used by `aggregate` and `compare`.
"""

from __future__ import annotations

import json
import os
import socket
import subprocess
import sys
import threading
import time

from .. import profiler
from ..client import NodeAddress, RemoteSpace
from ..errors import AddressInUse, TupleSpaceError
from ..labels import NODE_VISITED
from ..search import PeerDirectory, SuccessStats
from ..server import SpaceServer
from ..store import LocalSpace
from ..tuples import make_tuple, template
from .config import BenchConfig, CaseResult, SHUTDOWN_NAME
from .roles import RoleHandles
from . import matmul, ocean, password, sorting

CASE_MODULES = {
    "password": password,
    "sort": sorting,
    "ocean": ocean,
    "matmul": matmul,
}

JOIN_GRACE = 10.0  # seconds past the rep deadline before giving up on roles
PROC_CONNECT_ATTEMPTS = 25  # procs start unordered; 25 x 200 ms window

_run_counter = 0
_run_counter_lock = threading.Lock()


def new_run_key(seed: int) -> str:
    global _run_counter
    with _run_counter_lock:
        _run_counter += 1
        n = _run_counter
    return f"{time.strftime('%Y%m%d%H%M%S')}-s{seed}-p{os.getpid()}-{n}"


def role_names(workers: int) -> list[str]:
    return ["master"] + [f"worker{k}" for k in range(workers)]


def find_free_base_port(count: int, start: int = 20011, end: int = 60000) -> int:
    """A base such that base..base+count-1 are all currently bindable."""
    for base in range(start, end, max(count, 7)):
        ok = True
        socks = []
        try:
            for off in range(count):
                s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
                try:
                    s.bind(("127.0.0.1", base + off))
                except OSError:
                    ok = False
                    s.close()
                    break
                socks.append(s)
        finally:
            for s in socks:
                s.close()
        if ok:
            return base
    raise AddressInUse(f"no free port range of {count} found")


def check_ports_free(addresses: list[NodeAddress]) -> None:
    for addr in addresses:
        s = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        # SO_REUSEADDR mirrors the servers' bind semantics, so TIME_WAIT
        # leftovers from the previous repetition do not trip the check.
        s.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            s.bind((addr.host, addr.port))
        except OSError as e:
            raise AddressInUse(f"port {addr.port} for {addr.name} is taken: {e}") from None
        finally:
            s.close()


def planned_addresses(cfg: BenchConfig) -> list[NodeAddress]:
    """Addresses for procs/hosts topologies (threads mode assigns live ports)."""
    names = role_names(cfg.workers)
    if cfg.mode == "hosts":
        return [NodeAddress(h.host, h.port, names[i]) for i, h in enumerate(cfg.hosts)]
    return [NodeAddress("127.0.0.1", cfg.base_port + i, names[i]) for i in range(len(names))]


def node_visited_from_dumps(paths) -> int:
    total = 0
    for path in paths:
        for record in profiler.parse_dump(path):
            if record.kind == profiler.KIND_COUNTER and record.label == NODE_VISITED:
                total += record.value
    return total


# -- threads topology -----------------------------------------------------------

def _worker_handles(cfg, k, rep_index, rep_seed, run_key, addresses, space, deadline_at,
                    attempts) -> RoleHandles:
    name = f"worker{k}"
    h = RoleHandles(cfg, name, rep_index, rep_seed, run_key, addresses, space, deadline_at,
                    worker_id=k)
    h.master = RemoteSpace.connect(addresses[0], name, attempts=attempts)
    for j in range(cfg.workers):
        if j != k:
            h.worker_remotes[j] = RemoteSpace.connect(addresses[j + 1], name, attempts=attempts)
    peers = [h.worker_remotes[j] for j in sorted(h.worker_remotes)]
    h.directory = PeerDirectory(h.local, peers)
    h.stats = SuccessStats()
    return h


def _master_handles(cfg, rep_index, rep_seed, run_key, addresses, space, deadline_at,
                    attempts) -> RoleHandles:
    h = RoleHandles(cfg, "master", rep_index, rep_seed, run_key, addresses, space, deadline_at)
    for k in range(cfg.workers):
        h.worker_remotes[k] = RemoteSpace.connect(addresses[k + 1], "master", attempts=attempts)
    return h


def run_rep_threads(cfg: BenchConfig, rep_index: int, run_key: str, dump_path) -> CaseResult:
    rep_seed = (cfg.seed + rep_index) & ((1 << 64) - 1)
    names = role_names(cfg.workers)
    started = time.monotonic()
    deadline_at = started + cfg.deadline
    profiler.reset()
    profiler.set_process("main")

    spaces = [LocalSpace(n) for n in names]
    servers = []
    try:
        for i, name in enumerate(names):
            port = cfg.base_port + i if cfg.base_port else 0
            servers.append(SpaceServer(spaces[i], "127.0.0.1", port, name).start())
    except AddressInUse:
        for srv in servers:
            srv.stop()
        raise
    addresses = [NodeAddress("127.0.0.1", srv.port, names[i]) for i, srv in enumerate(servers)]

    case = CASE_MODULES[cfg.case]
    outcome: dict = {}
    failures: dict[str, BaseException] = {}

    def master_body():
        h = None
        try:
            h = _master_handles(cfg, rep_index, rep_seed, run_key, addresses, spaces[0],
                                deadline_at, attempts=5)
            outcome["result"] = case.run_master(h)
        except BaseException as e:  # deliberate: any role failure fails the rep
            failures["master"] = e
        finally:
            if h is not None:
                h.close_remotes()

    def worker_body(k: int):
        h = None
        try:
            h = _worker_handles(cfg, k, rep_index, rep_seed, run_key, addresses,
                                spaces[k + 1], deadline_at, attempts=5)
            case.run_worker(h)
        except BaseException as e:
            failures[f"worker{k}"] = e
        finally:
            if h is not None:
                h.close_remotes()

    threads = [threading.Thread(target=master_body, name="master", daemon=True)]
    threads += [threading.Thread(target=worker_body, args=(k,), name=f"worker{k}", daemon=True)
                for k in range(cfg.workers)]
    for t in threads:
        t.start()
    stuck = False
    for t in threads:
        left = deadline_at + JOIN_GRACE - time.monotonic()
        t.join(max(left, 0.1))
        if t.is_alive():
            stuck = True
    for srv in servers:
        srv.stop()  # unblocks any role still parked on a remote op
    if stuck:
        for t in threads:
            t.join(2.0)

    profiler.dump(dump_path)
    elapsed = time.monotonic() - started

    result = outcome.get("result")
    if stuck:
        result = CaseResult(correct=False, error="repetition deadline exceeded (roles stuck)")
    elif failures:
        parts = "; ".join(f"{who}: {type(e).__name__}: {e}" for who, e in sorted(failures.items()))
        result = CaseResult(correct=False, error=f"role failure: {parts}")
    elif result is None:
        result = CaseResult(correct=False, error="master produced no result")
    result.elapsed = elapsed
    result.dump_paths = [str(dump_path)]
    result.node_visited_total = node_visited_from_dumps([dump_path])
    return result


# -- single-role execution (procs children, hosts master) -------------------------

def run_role_inline(cfg: BenchConfig, role: str, index: int, addresses, rep_index: int,
                    run_key: str, dump_path, connect_attempts: int = PROC_CONNECT_ATTEMPTS):
    """Run one role to completion in this process; returns the master's result.

    Used by the `run-role` subcommand (procs children, remote hosts) and by
    hosts mode for the local master.
    """
    rep_seed = (cfg.seed + rep_index) & ((1 << 64) - 1)
    name = role if role == "master" else f"worker{index}"
    threading.current_thread().name = name
    profiler.reset()
    profiler.set_process(name)
    deadline_at = time.monotonic() + cfg.deadline

    my_addr = addresses[0] if role == "master" else addresses[index + 1]
    space = LocalSpace(name)
    server = SpaceServer(space, my_addr.host, my_addr.port, name).start()
    case = CASE_MODULES[cfg.case]
    result = None
    h = None
    try:
        if role == "master":
            h = _master_handles(cfg, rep_index, rep_seed, run_key, addresses, space,
                                deadline_at, attempts=connect_attempts)
            result = case.run_master(h)
            for k in range(cfg.workers):
                try:
                    h.worker_remotes[k].out(make_tuple(SHUTDOWN_NAME))
                except TupleSpaceError:
                    pass  # a dead worker cannot be told to stop
        else:
            h = _worker_handles(cfg, index, rep_index, rep_seed, run_key, addresses, space,
                                deadline_at, attempts=connect_attempts)
            case.run_worker(h)
            space.in_(template(SHUTDOWN_NAME), timeout=max(deadline_at - time.monotonic(), 0.1))
    finally:
        if h is not None:
            h.close_remotes()
        profiler.dump(dump_path)
        server.stop()
    return result


def run_rep_procs(cfg: BenchConfig, rep_index: int, run_key: str, out_dir) -> CaseResult:
    names = role_names(cfg.workers)
    addresses = planned_addresses(cfg)
    check_ports_free(addresses)
    started = time.monotonic()

    result_path = os.path.join(out_dir, f"{run_key}_rep{rep_index}_result.json")
    config_path = write_role_config(cfg, addresses, rep_index, run_key, out_dir, result_path)

    env = os.environ.copy()
    pkg_root = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
    env["PYTHONPATH"] = pkg_root + os.pathsep + env.get("PYTHONPATH", "")

    def spawn(role: str, index: int) -> subprocess.Popen:
        argv = [sys.executable, "-m", "tuplespaces", "run-role",
                "--config", config_path, "--role", role, "--index", str(index)]
        return subprocess.Popen(argv, env=env, stdout=subprocess.DEVNULL,
                                stderr=subprocess.PIPE)

    procs = {"master": spawn("master", 0)}
    for k in range(cfg.workers):
        procs[f"worker{k}"] = spawn("worker", k)

    deadline_at = started + cfg.deadline + JOIN_GRACE
    error = None
    while True:
        master_rc = procs["master"].poll()
        if master_rc is not None:
            break
        for name, p in procs.items():
            rc = p.poll()
            if name != "master" and rc is not None and rc != 0:
                error = f"{name} exited with code {rc}"
                break
        if error or time.monotonic() > deadline_at:
            error = error or "repetition deadline exceeded"
            break
        time.sleep(0.05)

    if error:
        for p in procs.values():
            if p.poll() is None:
                p.terminate()
    for name, p in procs.items():
        try:
            p.wait(timeout=15.0)
        except subprocess.TimeoutExpired:
            p.kill()
            p.wait()

    dump_paths = [os.path.join(out_dir, f"{run_key}_rep{rep_index}_{n}.csv")
                  for n in names if os.path.exists(os.path.join(out_dir, f"{run_key}_rep{rep_index}_{n}.csv"))]
    result = CaseResult(correct=False, error=error)
    if error is None and os.path.exists(result_path):
        with open(result_path, encoding="utf-8") as fh:
            data = json.load(fh)
        result = CaseResult(correct=data["correct"], digest=data["digest"],
                            detail=data["detail"], error=data.get("error"))
    elif error is None:
        stderr = procs["master"].stderr.read().decode("utf-8", "replace") if procs["master"].stderr else ""
        result = CaseResult(correct=False, error=f"master wrote no result: {stderr[-500:]}")
    for p in procs.values():
        if p.stderr is not None:
            p.stderr.close()
    result.elapsed = time.monotonic() - started
    result.dump_paths = dump_paths
    result.node_visited_total = node_visited_from_dumps(dump_paths)
    return result


def write_role_config(cfg: BenchConfig, addresses, rep_index: int, run_key: str,
                      out_dir, result_path=None) -> str:
    """The JSON a `run-role` invocation needs to join this repetition."""
    path = os.path.join(out_dir, f"{run_key}_rep{rep_index}_roles.json")
    payload = {
        "config": dict(cfg.__dict__) | {"hosts": None},
        "addresses": [{"host": a.host, "port": a.port, "name": a.name} for a in addresses],
        "rep_index": rep_index,
        "run_key": run_key,
        "out_dir": str(out_dir),
        "result_path": result_path or os.path.join(out_dir, f"{run_key}_rep{rep_index}_result.json"),
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh)
    return path


def run_rep_hosts(cfg: BenchConfig, rep_index: int, run_key: str, out_dir) -> CaseResult:
    """Hosts mode: run the master here; workers join via `run-role` using the
    role-config file this writes before the master starts waiting."""
    addresses = planned_addresses(cfg)
    started = time.monotonic()
    write_role_config(cfg, addresses, rep_index, run_key, out_dir)
    dump_path = os.path.join(out_dir, f"{run_key}_rep{rep_index}_master.csv")
    result = run_role_inline(cfg, "master", 0, addresses, rep_index, run_key, dump_path)
    result.elapsed = time.monotonic() - started
    result.dump_paths = [dump_path]
    result.node_visited_total = node_visited_from_dumps([dump_path])
    return result


# -- whole runs --------------------------------------------------------------------

def run_benchmark(cfg: BenchConfig, out_dir, run_key: str | None = None):
    """Run cfg.reps repetitions; returns (results, manifest_path, run_key)."""
    os.makedirs(out_dir, exist_ok=True)
    run_key = run_key or new_run_key(cfg.seed)
    results: list[CaseResult] = []
    for rep in range(cfg.reps):
        if cfg.mode == "threads":
            dump_path = os.path.join(out_dir, f"{run_key}_rep{rep}.csv")
            results.append(run_rep_threads(cfg, rep, run_key, dump_path))
        elif cfg.mode == "procs":
            results.append(run_rep_procs(cfg, rep, run_key, out_dir))
        else:
            results.append(run_rep_hosts(cfg, rep, run_key, out_dir))
    manifest_path = os.path.join(out_dir, f"manifest_{run_key}.txt")
    write_manifest(manifest_path, cfg, run_key, results, out_dir)
    return results, manifest_path, run_key


def write_manifest(path, cfg: BenchConfig, run_key: str, results, out_dir) -> None:
    lines = [
        f"run_key={run_key}",
        f"case={cfg.case}",
        f"workers={cfg.workers}",
        f"size={cfg.size}",
        f"strategy={cfg.strategy}",
        f"distribution={cfg.distribution}",
        f"reps={cfg.reps}",
        f"seed={cfg.seed}",
        f"threshold={cfg.sort_threshold}",
        f"iters={cfg.ocean_iters}",
        f"mode={cfg.mode}",
        f"base_port={cfg.base_port}",
        f"poll_interval_ms={cfg.poll_interval * 1000:g}",
        f"deadline_s={cfg.deadline:g}",
    ]
    for i, r in enumerate(results):
        rel = [os.path.relpath(p, out_dir) for p in r.dump_paths]
        lines.append(f"rep{i}.dumps={';'.join(rel)}")
        lines.append(f"rep{i}.correct={'true' if r.correct else 'false'}")
        lines.append(f"rep{i}.digest={r.digest}")
        lines.append(f"rep{i}.node_visited={r.node_visited_total}")
        lines.append(f"rep{i}.elapsed_s={r.elapsed:.3f}")
        if r.error:
            lines.append(f"rep{i}.error={r.error}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def parse_manifest(path) -> dict:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and "=" in line:
                key, value = line.split("=", 1)
                out[key] = value
    return out


def parse_hosts_file(path) -> list[NodeAddress]:
    """Lines of `name host:port`, master first, one per role."""
    hosts = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            name, _, addr = line.partition(" ")
            host, _, port = addr.strip().rpartition(":")
            if not name or not host or not port.isdigit():
                raise ValueError(f"bad hosts line: {raw.rstrip()}")
            hosts.append(NodeAddress(host, int(port), name))
    return hosts
