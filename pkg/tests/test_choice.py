"""Coroutine monad laws, queue pledge protocol, and scheduler equivalence.

The oracle throughout is a sequential reference runner that enumerates a
coroutine tree depth-first without any queue or worker machinery.
"""

import random
import threading
import time
from collections import Counter

import pytest

from wasmsym.choice import (
    Choice,
    Coroutine,
    Now,
    ProcessStepExecutor,
    Stop,
    WorkQueue,
    Yield,
    bind,
    choose,
    fork,
    get_wls,
    pure,
    run_scheduler,
    run_step,
    stop,
    yield_,
)


def reference_outcomes(cor: Coroutine, wls=None) -> Counter:
    """Sequential enumeration of a finite coroutine tree's Now leaves."""
    out: Counter = Counter()

    def walk(st):
        k = type(st)
        if k is Now:
            out[st.value] += 1
        elif k is Yield:
            walk(st.cont.step(wls))
        elif k is Choice:
            walk(st.left)
            walk(st.right)
        else:
            assert k is Stop

    walk(cor.step(wls))
    return out


def scheduled_outcomes(roots, workers=1, wls_init=None, step_executor=None):
    got: Counter = Counter()
    lock = threading.Lock()

    def on_final(v):
        with lock:
            got[v] += 1

    stats = run_scheduler(roots, workers=workers, wls_init=wls_init,
                          on_final=on_final, step_executor=step_executor)
    return got, stats


def gen_tree(rng: random.Random, depth: int) -> Coroutine:
    r = rng.random()
    if depth <= 0 or r < 0.25:
        return pure(rng.randrange(64))
    if r < 0.35:
        return stop()
    if r < 0.5:
        sub = gen_tree(rng, depth - 1)
        return bind(yield_(), lambda _v, s=sub: s)
    if r < 0.75:
        return choose(gen_tree(rng, depth - 1), gen_tree(rng, depth - 1))
    sub = gen_tree(rng, depth - 1)
    return bind(sub, lambda v: pure(v * 2 + 1))


class TestPrimitives:
    def test_pure(self):
        st = run_step(pure(7), None)
        assert st == Now(7)

    def test_bind_left_identity_example(self):
        f = lambda x: pure(x + 1)
        assert reference_outcomes(bind(pure(3), f)) == reference_outcomes(f(3))

    def test_yield_shape(self):
        st = run_step(yield_(), None)
        assert isinstance(st, Yield)
        assert run_step(st.cont, None) == Now(None)

    def test_yield_composition_steps(self):
        # n yields need exactly n+1 scheduler steps
        cor = bind(yield_(), lambda _: bind(yield_(), lambda _: pure("done")))
        _, stats = scheduled_outcomes([cor])
        assert stats.steps == 3
        assert stats.yields == 2

    def test_choose_outcomes(self):
        assert reference_outcomes(choose(pure(1), pure(2))) == Counter({1: 1, 2: 1})

    def test_choose_with_stop(self):
        assert reference_outcomes(choose(pure(1), stop())) == Counter({1: 1})

    def test_nested_choose_leaf_count(self):
        d = 8
        cor = pure(0)
        for _ in range(d):
            cor = choose(cor, cor)
        assert sum(reference_outcomes(cor).values()) == 2 ** d

    def test_bind_over_choice(self):
        cor = bind(choose(pure(1), pure(2)), lambda v: pure(v * 2))
        assert reference_outcomes(cor) == Counter({2: 1, 4: 1})

    def test_bind_stop_skips_fn(self):
        called = []
        cor = bind(stop(), lambda v: called.append(v) or pure(v))
        assert reference_outcomes(cor) == Counter()
        assert called == []

    def test_fork_outcomes(self):
        assert reference_outcomes(fork()) == Counter({False: 1, True: 1})

    def test_fork_both_sides_reenter_queue(self):
        _, stats = scheduled_outcomes([fork()])
        assert stats.yields == 2

    def test_fork_in_fork(self):
        cor = bind(fork(), lambda a: bind(fork(), lambda b: pure((a, b))))
        got = reference_outcomes(cor)
        assert got == Counter({(False, False): 1, (False, True): 1,
                               (True, False): 1, (True, True): 1})

    def test_get_wls(self):
        assert run_step(get_wls(), "storage") == Now("storage")

    def test_coroutine_reusable(self):
        cor = choose(pure(1), pure(2))
        assert reference_outcomes(cor) == reference_outcomes(cor)


class TestMonadLaws:
    N_TREES = 1100

    def _fn_from_seed(self, seed):
        def f(v):
            return gen_tree(random.Random(seed * 100003 + v), 2)
        return f

    def test_laws_on_generated_trees(self):
        rng = random.Random(2024)
        for i in range(self.N_TREES):
            m = gen_tree(rng, 3)
            f = self._fn_from_seed(i * 2 + 1)
            g = self._fn_from_seed(i * 2 + 2)
            x = rng.randrange(64)
            # left identity
            assert reference_outcomes(bind(pure(x), f)) == reference_outcomes(f(x))
            # right identity
            assert reference_outcomes(bind(m, pure)) == reference_outcomes(m)
            # associativity
            lhs = bind(bind(m, f), g)
            rhs = bind(m, lambda v: bind(f(v), g))
            assert reference_outcomes(lhs) == reference_outcomes(rhs)


class TestWorkQueue:
    def test_fifo_of_one(self):
        q = WorkQueue()
        q.push("x")
        assert q.pop() == "x"

    def test_empty_no_pledge_returns_none(self):
        q = WorkQueue()
        assert q.pop() is None

    def test_fifo_order(self):
        q = WorkQueue()
        for i in range(5):
            q.push(i)
        assert [q.pop() for _ in range(5)] == [0, 1, 2, 3, 4]

    def test_pop_blocks_on_pledge_until_push(self):
        q = WorkQueue()
        q.make_pledge()
        got = []
        t = threading.Thread(target=lambda: got.append(q.pop()))
        t.start()
        time.sleep(0.08)
        assert t.is_alive(), "pop must block while a pledge is outstanding"
        q.push(42)
        t.join(5)
        assert got == [42]
        q.end_pledge()

    def test_pop_unblocks_on_end_pledge(self):
        q = WorkQueue()
        q.make_pledge()
        got = []
        t = threading.Thread(target=lambda: got.append(q.pop()))
        t.start()
        time.sleep(0.08)
        assert t.is_alive()
        q.end_pledge()
        t.join(5)
        assert got == [None]

    def test_close_wakes_blocked_pop(self):
        q = WorkQueue()
        q.make_pledge()
        got = []
        t = threading.Thread(target=lambda: got.append(q.pop()))
        t.start()
        time.sleep(0.05)
        q.close()
        t.join(5)
        assert got == [None]

    def test_push_after_close_is_noop(self):
        q = WorkQueue()
        q.close()
        q.push(1)
        assert q.pop() is None

    def test_pop_with_pledge_atomic(self):
        q = WorkQueue()
        q.push("a")
        assert q.pop(start_pledge=True) == "a"
        got = []
        t = threading.Thread(target=lambda: got.append(q.pop()))
        t.start()
        time.sleep(0.05)
        assert t.is_alive(), "the popped element's pledge must hold other workers"
        q.end_pledge()
        t.join(5)
        assert got == [None]

    def test_two_worker_handoff(self):
        # A's body pushes while holding its pledge; B must pick that up
        q = WorkQueue()
        q.push(0)
        seen = []
        lock = threading.Lock()

        def body(item, push_back):
            with lock:
                seen.append(item)
            if item < 3:
                time.sleep(0.01)
                push_back(item + 1)

        threads = [threading.Thread(target=q.work_while, args=(body,)) for _ in range(2)]
        for t in threads:
            t.start()
        for t in threads:
            t.join(10)
        assert sorted(seen) == [0, 1, 2, 3]


class _CountingWls:
    counter = 0
    lock = threading.Lock()

    def __init__(self):
        with _CountingWls.lock:
            self.ident = _CountingWls.counter
            _CountingWls.counter += 1


def _wls_probe_tree(n):
    def probe(_v, k=n):
        if k == 0:
            return bind(get_wls(), lambda w: pure(w.ident))
        return bind(yield_(), lambda _v2: probe(None, k - 1))
    return probe(None)


class TestScheduler:
    def test_single_leaf_any_workers(self):
        got, _ = scheduled_outcomes([pure(1)], workers=4)
        assert got == Counter({1: 1})

    def test_64_leaves_counted_once(self):
        cor = pure(0)
        for _ in range(6):
            cor = choose(cor, cor)
        for n in (1, 4):
            got, _ = scheduled_outcomes([cor], workers=n)
            assert sum(got.values()) == 64

    @pytest.mark.parametrize("workers", [1, 2, 4, 8])
    def test_equivalence_with_reference(self, workers):
        rng = random.Random(55)
        trees = [gen_tree(rng, 5) for _ in range(30)]
        want = Counter()
        for t in trees:
            want += reference_outcomes(t)
        got, _ = scheduled_outcomes(list(trees), workers=workers)
        assert got == want

    def test_no_lost_work(self):
        rng = random.Random(9)
        trees = [gen_tree(rng, 5) for _ in range(20)]
        _, stats = scheduled_outcomes(list(trees), workers=3)
        # every root and every pushed continuation is stepped exactly once
        assert stats.steps == len(trees) + stats.yields
        assert stats.pushed == len(trees) + stats.yields

    def test_terminates_within_watchdog(self):
        rng = random.Random(12)
        trees = [gen_tree(rng, 7) for _ in range(40)]
        done = []
        t = threading.Thread(
            target=lambda: done.append(scheduled_outcomes(list(trees), workers=4))
        )
        t.start()
        t.join(60)
        assert not t.is_alive(), "scheduler deadlocked"
        assert done

    def test_wls_membership(self):
        n = 4
        roots = [_wls_probe_tree(3) for _ in range(16)]
        got, _ = scheduled_outcomes(roots, workers=n, wls_init=_CountingWls)
        assert all(isinstance(k, int) for k in got)
        assert len(set(got)) <= n

    def test_single_worker_stable_wls(self):
        roots = [_wls_probe_tree(5) for _ in range(8)]
        got, _ = scheduled_outcomes(roots, workers=1, wls_init=_CountingWls)
        assert len(set(got)) == 1

    def test_choice_sides_same_worker_turn(self):
        # both sides of a Choice are handled before the worker's next pop
        events = []
        lock = threading.Lock()

        def on_final(v):
            with lock:
                events.append((threading.get_ident(), v))

        run_scheduler([choose(pure("L"), pure("R"))], workers=4, on_final=on_final)
        assert len(events) == 2
        assert events[0][0] == events[1][0]
        assert [v for _, v in events] == ["L", "R"]

    def test_worker_error_propagates(self):
        from wasmsym.errors import InternalEngineError

        def boom(_wls):
            raise RuntimeError("kaboom")

        with pytest.raises(InternalEngineError):
            run_scheduler([Coroutine(boom)], workers=2)


def _double_fn(v):
    return pure(v * 2)


def _const_two(_v):
    return pure(2)


def _proc_tree():
    return bind(choose(pure(1), bind(yield_(), _const_two)), _double_fn)


class TestProcessExecutor:
    def test_matches_reference(self):
        roots = [choose(pure(i), pure(i + 100)) for i in range(6)]
        want = Counter()
        for r in roots:
            want += reference_outcomes(r)
        got, _ = scheduled_outcomes(
            [choose(pure(i), pure(i + 100)) for i in range(6)],
            workers=2,
            step_executor=ProcessStepExecutor(),
        )
        assert got == want

    def test_yields_cross_process_boundary(self):
        got, stats = scheduled_outcomes(
            [_proc_tree() for _ in range(4)],
            workers=2,
            step_executor=ProcessStepExecutor(),
        )
        assert got == Counter({2: 4, 4: 4})
        assert stats.yields >= 4
