"""Fault-tolerant task distribution.

The server spools tasks in a single queue and leases them to workers on
request.  Workers send ``hello`` while they compute; a lease whose holder
has been silent for longer than the timeout goes back to the queue.  The
wire format is newline-delimited JSON over TCP, one object per line, each
with a ``type`` field.

Task kinds are dispatched through :data:`HANDLERS`; only ``pipeline`` is
registered by default.
"""

from __future__ import annotations

import json
import logging
import queue
import socket
import socketserver
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Callable, Iterable, Mapping

from .pipeline import PipelineJob, RunResult, best_result, result_key, run_pipeline

__all__ = [
    "TaskState",
    "TaskEnvelope",
    "WorkerRecord",
    "TaskBoard",
    "Server",
    "ServerReport",
    "ConfigInvalid",
    "BindFailure",
    "ConnectFailure",
    "HANDLERS",
    "register_handler",
    "execute",
    "serve",
    "work",
    "run_parallel",
    "run_all",
    "run_tasks",
]

log = logging.getLogger(__name__)

DEFAULT_HELLO = 5.0
DEFAULT_TIMEOUT = 15.0


class ConfigInvalid(ValueError):
    pass


class BindFailure(OSError):
    pass


class ConnectFailure(ConnectionError):
    pass


Handler = Callable[[Mapping[str, Any], str], Mapping[str, Any]]


def _pipeline_handler(payload: Mapping[str, Any], task_id: str) -> Mapping[str, Any]:
    return run_pipeline(PipelineJob.from_json(payload), task_id).to_json()


HANDLERS: dict[str, Handler] = {"pipeline": _pipeline_handler}


def register_handler(kind: str, fn: Handler) -> None:
    HANDLERS[kind] = fn


def execute(payload: Mapping[str, Any], task_id: str) -> Mapping[str, Any]:
    kind = payload.get("kind", "pipeline")
    try:
        handler = HANDLERS[kind]
    except KeyError:
        raise ValueError(f"no handler for task kind {kind!r}") from None
    return handler(payload, task_id)


class TaskState(str, Enum):
    QUEUED = "queued"
    LEASED = "leased"
    DONE = "done"


@dataclass
class TaskEnvelope:
    task_id: str
    payload: dict
    state: TaskState = TaskState.QUEUED
    lease: tuple[str, float] | None = None  # (worker_id, last hello)
    result: dict | None = None


@dataclass
class WorkerRecord:
    worker_id: str
    last_hello: float
    current_task: str | None = None


@dataclass
class TaskBoard:
    """Task state store; every transition happens under one lock."""

    timeout: float = DEFAULT_TIMEOUT
    clock: Callable[[], float] = time.monotonic
    tasks: dict[str, TaskEnvelope] = field(default_factory=dict)
    workers: dict[str, WorkerRecord] = field(default_factory=dict)
    events: list[tuple[float, str, str | None, str | None]] = field(default_factory=list)

    def __post_init__(self):
        self._lock = threading.RLock()
        self._queue: deque[str] = deque()
        self._done = threading.Condition(self._lock)

    def _event(self, kind: str, task: str | None, worker: str | None) -> None:
        self.events.append((self.clock(), kind, task, worker))

    def add(self, task_id: str, payload: dict) -> None:
        with self._lock:
            if task_id in self.tasks:
                raise ValueError(f"duplicate task id {task_id!r}")
            self.tasks[task_id] = TaskEnvelope(task_id, dict(payload))
            self._queue.append(task_id)

    def register(self, worker_id: str) -> None:
        with self._lock:
            rec = self.workers.get(worker_id)
            if rec is None:
                self.workers[worker_id] = WorkerRecord(worker_id, self.clock())
            else:
                rec.last_hello = self.clock()
            self._event("register", None, worker_id)

    def lease(self, worker_id: str) -> TaskEnvelope | None:
        with self._lock:
            self.register_if_missing(worker_id)
            rec = self.workers[worker_id]
            rec.last_hello = self.clock()
            while self._queue:
                tid = self._queue.popleft()
                task = self.tasks[tid]
                if task.state is not TaskState.QUEUED:
                    continue
                task.state = TaskState.LEASED
                task.lease = (worker_id, self.clock())
                rec.current_task = tid
                self._event("lease", tid, worker_id)
                return task
            return None

    def register_if_missing(self, worker_id: str) -> None:
        if worker_id not in self.workers:
            self.workers[worker_id] = WorkerRecord(worker_id, self.clock())

    def hello(self, worker_id: str, task_id: str | None = None) -> None:
        with self._lock:
            now = self.clock()
            self.register_if_missing(worker_id)
            self.workers[worker_id].last_hello = now
            task = self.tasks.get(task_id) if task_id else None
            if task is not None and task.lease is not None and task.lease[0] == worker_id:
                task.lease = (worker_id, now)

    def complete(self, worker_id: str, task_id: str, result: dict) -> bool:
        """Record a result; False when it is stale (lease lost or task done)."""
        with self._lock:
            task = self.tasks.get(task_id)
            rec = self.workers.get(worker_id)
            if rec is not None:
                rec.last_hello = self.clock()
                if rec.current_task == task_id:
                    rec.current_task = None
            if task is None or task.state is not TaskState.LEASED or task.lease is None or task.lease[0] != worker_id:
                self._event("discard", task_id, worker_id)
                return False
            task.state = TaskState.DONE
            task.lease = None
            task.result = dict(result)
            self._event("done", task_id, worker_id)
            if self.all_done():
                self._done.notify_all()
            return True

    def reap(self) -> list[str]:
        """Requeue tasks whose lease holder has been silent past the timeout."""
        requeued = []
        with self._lock:
            now = self.clock()
            for task in self.tasks.values():
                if task.state is TaskState.LEASED and task.lease and now - task.lease[1] > self.timeout:
                    worker = task.lease[0]
                    task.state = TaskState.QUEUED
                    task.lease = None
                    self._queue.append(task.task_id)
                    rec = self.workers.get(worker)
                    if rec is not None and rec.current_task == task.task_id:
                        rec.current_task = None
                    self._event("timeout", task.task_id, worker)
                    requeued.append(task.task_id)
        return requeued

    def all_done(self) -> bool:
        with self._lock:
            return all(t.state is TaskState.DONE for t in self.tasks.values())

    def wait(self, timeout: float | None = None) -> bool:
        with self._done:
            return self._done.wait_for(self.all_done, timeout)

    def results(self) -> dict[str, dict]:
        with self._lock:
            return {tid: t.result for tid, t in self.tasks.items() if t.result is not None}

    def leased_to(self, worker_id: str) -> list[str]:
        with self._lock:
            return [t.task_id for t in self.tasks.values() if t.lease and t.lease[0] == worker_id]


# ---------------------------------------------------------------- server


def _send(wfile, msg: Mapping[str, Any], lock: threading.Lock) -> None:
    data = (json.dumps(msg, separators=(",", ":")) + "\n").encode()
    with lock:
        wfile.write(data)
        wfile.flush()


class _Handler(socketserver.StreamRequestHandler):
    server: _TCPServer

    def setup(self):
        super().setup()
        self.write_lock = threading.Lock()
        self.worker_id: str | None = None
        self.server.connections.add(self)

    def finish(self):
        self.server.connections.discard(self)
        try:
            super().finish()
        except OSError:
            pass

    def send(self, msg: Mapping[str, Any]) -> None:
        try:
            _send(self.wfile, msg, self.write_lock)
        except OSError:
            pass

    def handle(self):
        board = self.server.board
        for raw in self.rfile:
            if not raw.strip():
                continue
            try:
                msg = json.loads(raw)
                kind = msg["type"]
            except (ValueError, KeyError, TypeError):
                self.send({"type": "error", "reason": "malformed message"})
                continue
            worker = msg.get("worker_id") or self.worker_id
            if kind == "register":
                self.worker_id = msg["worker_id"]
                board.register(self.worker_id)
                self.send({"type": "ack"})
            elif kind == "fetch":
                self.worker_id = worker
                if board.all_done() or self.server.stopping.is_set():
                    self.send({"type": "shutdown"})
                    continue
                task = board.lease(worker)
                if task is None:
                    self.send({"type": "no_task"})
                else:
                    self.send({"type": "task", "task_id": task.task_id, "payload": task.payload})
            elif kind == "hello":
                board.hello(worker, msg.get("task_id"))
                self.send({"type": "ack"})
            elif kind == "result":
                board.complete(worker, msg["task_id"], msg.get("payload", {}))
                self.send({"type": "ack"})
            else:
                self.send({"type": "error", "reason": f"unknown message type {kind!r}"})


class _TCPServer(socketserver.ThreadingTCPServer):
    daemon_threads = True
    allow_reuse_address = True

    def __init__(self, address, board: TaskBoard):
        self.board = board
        self.connections: set[_Handler] = set()
        self.stopping = threading.Event()
        super().__init__(address, _Handler)


@dataclass
class ServerReport:
    results: dict[str, RunResult]
    best: RunResult | None
    events: list[tuple[float, str, str | None, str | None]]

    def to_json(self) -> dict:
        return {
            "tasks": len(self.results),
            "best": self.best.to_json() if self.best else None,
            "results": [
                {"task_id": r.task_id, "seed": r.seed, "total_wirelength": r.total_wirelength,
                 "bounding_volume": list(r.bounding_volume)}
                for r in sorted(self.results.values(), key=result_key)
            ],
            "timeouts": [{"task_id": t, "worker_id": w} for _, e, t, w in self.events if e == "timeout"],
        }


class Server:
    """TCP task server.  ``start`` runs it in the background; ``serve`` blocks."""

    def __init__(
        self,
        tasks: Mapping[str, Mapping[str, Any]] | Iterable[Mapping[str, Any]],
        host: str = "127.0.0.1",
        port: int = 0,
        hello_period: float = DEFAULT_HELLO,
        timeout: float | None = None,
    ):
        timeout = 3 * hello_period if timeout is None else timeout
        if not timeout > hello_period > 0:
            raise ConfigInvalid(f"timeout ({timeout}) must exceed the hello period ({hello_period})")
        items = list(tasks.items()) if isinstance(tasks, Mapping) else [
            (f"t{k:04d}", p) for k, p in enumerate(tasks)
        ]
        if not items:
            raise ConfigInvalid("no tasks to serve")
        self.hello_period = hello_period
        self.board = TaskBoard(timeout=timeout)
        for tid, payload in items:
            self.board.add(tid, dict(payload))
        try:
            self._tcp = _TCPServer((host, port), self.board)
        except OSError as exc:
            raise BindFailure(exc.errno, f"cannot bind {host}:{port}: {exc.strerror}") from exc
        self._threads: list[threading.Thread] = []

    @property
    def address(self) -> tuple[str, int]:
        return self._tcp.server_address[:2]

    def _reaper(self) -> None:
        period = min(self.hello_period, self.board.timeout) / 4
        while not self._tcp.stopping.wait(period):
            for tid in self.board.reap():
                log.info("task %s timed out, requeued", tid)

    def start(self) -> Server:
        for target in (self._tcp.serve_forever, self._reaper):
            t = threading.Thread(target=target, daemon=True)
            t.start()
            self._threads.append(t)
        return self

    def wait(self, timeout: float | None = None) -> bool:
        return self.board.wait(timeout)

    def stop(self) -> None:
        self._tcp.stopping.set()
        for conn in list(self._tcp.connections):
            conn.send({"type": "shutdown"})
        if self._threads:  # shutdown() would block forever without a serve loop
            self._tcp.shutdown()
            self._threads.clear()
        self._tcp.server_close()

    def report(self) -> ServerReport:
        results = {tid: RunResult.from_json(r) for tid, r in self.board.results().items() if "placement" in r}
        return ServerReport(results, best_result(results.values()) if results else None, list(self.board.events))

    def serve(self, timeout: float | None = None) -> ServerReport:
        self.start()
        try:
            self.wait(timeout)
        finally:
            self.stop()
        return self.report()


def serve(
    tasks, port: int = 0, hello_period: float = DEFAULT_HELLO, timeout: float | None = None, host: str = "127.0.0.1"
) -> ServerReport:
    return Server(tasks, host, port, hello_period, timeout).serve()


# ---------------------------------------------------------------- worker


class _Connection:
    def __init__(self, sock: socket.socket):
        self.sock = sock
        self.rfile = sock.makefile("rb")
        self.wfile = sock.makefile("wb")
        self.lock = threading.Lock()

    def request(self, msg: Mapping[str, Any]) -> dict:
        with self.lock:
            self.wfile.write((json.dumps(msg, separators=(",", ":")) + "\n").encode())
            self.wfile.flush()
            line = self.rfile.readline()
        if not line:
            raise ConnectionError("server closed the connection")
        return json.loads(line)

    def close(self) -> None:
        for f in (self.rfile, self.wfile):
            try:
                f.close()
            except OSError:
                pass
        self.sock.close()


def _connect(host: str, port: int, retries: int, backoff: float) -> _Connection:
    delay = backoff
    for attempt in range(retries + 1):
        try:
            return _Connection(socket.create_connection((host, port), timeout=None))
        except OSError as exc:
            if attempt == retries:
                raise ConnectFailure(f"cannot reach {host}:{port}: {exc}") from exc
            time.sleep(delay)
            delay = min(delay * 2, 5.0)
    raise AssertionError("unreachable")


def work(
    host: str,
    port: int,
    worker_id: str,
    hello_period: float = DEFAULT_HELLO,
    retries: int = 5,
    backoff: float = 0.1,
) -> int:
    """Fetch and execute tasks until the server says stop; returns tasks completed."""
    conn = _connect(host, port, retries, backoff)
    done = 0
    stop = threading.Event()
    try:
        if conn.request({"type": "register", "worker_id": worker_id}).get("type") == "shutdown":
            return 0
        idle = backoff
        while not stop.is_set():
            reply = conn.request({"type": "fetch", "worker_id": worker_id})
            if reply["type"] == "shutdown":
                break
            if reply["type"] == "no_task":
                time.sleep(idle)
                idle = min(idle * 2, hello_period)
                continue
            idle = backoff
            task_id = reply["task_id"]
            beat_done = threading.Event()

            def beat():
                while not beat_done.wait(hello_period):
                    try:
                        r = conn.request({"type": "hello", "worker_id": worker_id, "task_id": task_id})
                    except (OSError, ValueError):
                        stop.set()
                        return
                    if r.get("type") == "shutdown":
                        stop.set()

            heart = threading.Thread(target=beat, daemon=True)
            heart.start()
            try:
                payload = execute(reply["payload"], task_id)
            finally:
                beat_done.set()
                heart.join()
            if stop.is_set():
                break
            if conn.request({"type": "result", "task_id": task_id, "payload": payload}).get("type") == "shutdown":
                break
            done += 1
    except (OSError, ValueError) as exc:
        log.info("worker %s lost the server: %s", worker_id, exc)
    finally:
        conn.close()
    return done


# ---------------------------------------------------------------- in-process


def run_tasks(jobs: Iterable[PipelineJob | Mapping[str, Any]], worker_count: int = 1) -> dict[str, dict]:
    """Run every job on ``worker_count`` threads sharing one task board; raw results by task id."""
    if worker_count < 1:
        raise ConfigInvalid("worker_count must be >= 1")
    board = TaskBoard(timeout=float("inf"))
    for k, job in enumerate(jobs):
        payload = job.to_json() if isinstance(job, PipelineJob) else dict(job)
        board.add(f"t{k:04d}", payload)
    errors: queue.Queue[BaseException] = queue.Queue()

    def loop(wid: str) -> None:
        while True:
            task = board.lease(wid)
            if task is None:
                return
            try:
                board.complete(wid, task.task_id, dict(execute(task.payload, task.task_id)))
            except BaseException as exc:  # surfaced to the caller below
                errors.put(exc)
                return

    threads = [threading.Thread(target=loop, args=(f"w{i}",)) for i in range(worker_count)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    if not errors.empty():
        raise errors.get()
    return board.results()


def run_all(jobs: Iterable[PipelineJob | Mapping[str, Any]], worker_count: int = 1) -> dict[str, RunResult]:
    return {tid: RunResult.from_json(r) for tid, r in run_tasks(jobs, worker_count).items()}


def run_parallel(jobs: Iterable[PipelineJob | Mapping[str, Any]], worker_count: int = 1) -> RunResult:
    return best_result(run_all(jobs, worker_count).values())
