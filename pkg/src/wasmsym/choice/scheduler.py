"""Multi-worker scheduler over the pledged FIFO queue.

Workers are always threads driving the shared queue; what varies is where a
coroutine step executes. The local executor runs it on the worker thread
itself. The process executor ships the (picklable) coroutine to a forked
child process and gets the resulting status tree back, so CPU-bound steps
run outside the GIL; queue discipline, choice handling and callbacks are
identical in both cases and stay on the parent worker thread.
"""

from __future__ import annotations

import os
import threading
import traceback
from dataclasses import dataclass, field

from wasmsym.choice.core import Choice, Coroutine, Now, Stop, Yield
from wasmsym.choice.queue import WorkQueue
from wasmsym.errors import InternalEngineError


@dataclass
class SchedulerStats:
    steps: int = 0
    forks: int = 0
    yields: int = 0
    finals: int = 0
    stops: int = 0
    pushed: int = 0

    def merge(self, other: "SchedulerStats") -> None:
        self.steps += other.steps
        self.forks += other.forks
        self.yields += other.yields
        self.finals += other.finals
        self.stops += other.stops


class LocalStepExecutor:
    """Run steps in-thread; worker-local storage lives on the worker."""

    def start(self, n_workers: int, wls_init) -> None:
        self._wls_init = wls_init

    def runner_for(self, worker_idx: int):
        wls = self._wls_init() if self._wls_init else None
        def run(cor: Coroutine):
            return cor.step(wls)
        return run

    def stop(self) -> None:
        pass


def _process_child_main(conn, wls_init):
    try:
        wls = wls_init() if wls_init else None
    except BaseException:
        conn.send(("err", traceback.format_exc()))
        return
    while True:
        try:
            msg = conn.recv()
        except EOFError:
            return
        if msg is None:
            return
        try:
            status = msg.step(wls)
            conn.send(("ok", status))
        except BaseException:
            conn.send(("err", traceback.format_exc()))


class ProcessStepExecutor:
    """Execute coroutine steps in forked worker processes.

    Coroutines and the statuses they produce must be picklable. Linux only
    (uses the fork start method so closures and loaded modules are
    inherited).
    """

    def __init__(self):
        self._procs = []
        self._conns = []

    def start(self, n_workers: int, wls_init) -> None:
        import multiprocessing as mp

        ctx = mp.get_context("fork")
        for _ in range(n_workers):
            parent_conn, child_conn = ctx.Pipe()
            proc = ctx.Process(
                target=_process_child_main, args=(child_conn, wls_init), daemon=True
            )
            proc.start()
            child_conn.close()
            self._procs.append(proc)
            self._conns.append(parent_conn)

    def runner_for(self, worker_idx: int):
        conn = self._conns[worker_idx]
        def run(cor: Coroutine):
            conn.send(cor)
            tag, payload = conn.recv()
            if tag == "err":
                raise InternalEngineError(f"worker process failed:\n{payload}")
            return payload
        return run

    def stop(self) -> None:
        for conn in self._conns:
            try:
                conn.send(None)
                conn.close()
            except OSError:
                pass
        for proc in self._procs:
            proc.join(timeout=5)
            if proc.is_alive():
                proc.terminate()
        self._procs.clear()
        self._conns.clear()


def available_parallelism() -> int:
    return max(1, os.cpu_count() or 1)


def run_scheduler(
    roots,
    *,
    workers: int = 1,
    wls_init=None,
    on_final=None,
    step_executor=None,
    queue: WorkQueue | None = None,
) -> SchedulerStats:
    """Run coroutines to completion on N workers.

    Every Now leaf is passed to on_final (which may run concurrently on
    different workers); Yield continuations go back through the queue;
    Choice sides are handled depth-first, left then right, within the same
    worker turn. Returns merged instrumentation counters.

    The queue may be pre-closed by a callback (fail-fast) at any point; the
    run then winds down promptly. A worker exception closes the queue and is
    re-raised as InternalEngineError after all workers stop.
    """
    if workers < 1:
        raise InternalEngineError("worker count must be >= 1")
    executor = step_executor or LocalStepExecutor()
    q = queue if queue is not None else WorkQueue()
    for root in roots:
        q.push(root)

    failures: list[BaseException] = []
    all_stats: list[SchedulerStats] = []
    stats_lock = threading.Lock()
    executor.start(workers, wls_init)

    def worker(idx: int):
        stats = SchedulerStats()
        try:
            run = executor.runner_for(idx)

            def handle(status, push_back):
                kind = type(status)
                if kind is Now:
                    stats.finals += 1
                    if on_final is not None:
                        on_final(status.value)
                elif kind is Yield:
                    stats.yields += 1
                    push_back(status.cont)
                elif kind is Choice:
                    stats.forks += 1
                    handle(status.left, push_back)
                    handle(status.right, push_back)
                elif kind is Stop:
                    stats.stops += 1
                else:
                    raise InternalEngineError(f"bad status {status!r}")

            def body(cor, push_back):
                stats.steps += 1
                handle(run(cor), push_back)

            q.work_while(body)
        except BaseException as e:  # noqa: BLE001 - propagated after join
            failures.append(e)
            q.close()
        finally:
            with stats_lock:
                all_stats.append(stats)

    threads = [threading.Thread(target=worker, args=(i,), name=f"wasmsym-worker-{i}")
               for i in range(workers)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    executor.stop()

    merged = SchedulerStats()
    for s in all_stats:
        merged.merge(s)
    merged.pushed = q.pushed
    if failures:
        first = failures[0]
        if isinstance(first, InternalEngineError):
            raise first
        raise InternalEngineError(f"worker failed: {first!r}") from first
    return merged
