"""The coroutine monad: suspended computation trees built from four steps.

A Coroutine wraps one deferred step: a callable from worker-local storage to
a Status. A Status is one of

    Now(value)          final value of this (sub)coroutine
    Yield(prio, cont)   reschedulable continuation
    Choice(left, right) fork into two subtrees (statuses, already stepped)
    Stop                pruned branch, no value

Combinators are small callable objects rather than closures so that
coroutines whose payloads are picklable stay picklable end to end; that is
what lets the scheduler ship steps to worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Callable


class Priority:
    """Opaque scheduling priority; a single default value for now, carried
    through Yield but never consulted."""

    __slots__ = ()

    def __repr__(self):
        return "Priority()"


DEFAULT_PRIO = Priority()


class Status:
    __slots__ = ()


@dataclass(frozen=True)
class Now(Status):
    value: Any


@dataclass(frozen=True)
class Yield(Status):
    prio: Priority
    cont: "Coroutine"


@dataclass(frozen=True)
class Choice(Status):
    left: Status
    right: Status


@dataclass(frozen=True)
class Stop(Status):
    pass


STOP = Stop()


class Coroutine:
    __slots__ = ("step",)

    def __init__(self, step: Callable[[Any], Status]):
        self.step = step

    def __reduce__(self):
        return (Coroutine, (self.step,))


def run_step(cor: Coroutine, wls) -> Status:
    """Execute one step of a coroutine under the given worker-local storage."""
    return cor.step(wls)


# ---------------------------------------------------------------------------
# Combinators


@dataclass(frozen=True)
class _PureStep:
    value: Any

    def __call__(self, wls) -> Status:
        return Now(self.value)


@dataclass(frozen=True)
class _StopStep:
    def __call__(self, wls) -> Status:
        return STOP


@dataclass(frozen=True)
class _YieldStep:
    prio: Priority

    def __call__(self, wls) -> Status:
        return Yield(self.prio, pure(None))


@dataclass(frozen=True)
class _WlsStep:
    def __call__(self, wls) -> Status:
        return Now(wls)


@dataclass(frozen=True)
class _ChooseStep:
    left: Coroutine
    right: Coroutine

    def __call__(self, wls) -> Status:
        return Choice(self.left.step(wls), self.right.step(wls))


@dataclass(frozen=True)
class _ForkStep:
    prio_parent: Priority
    prio_child: Priority

    def __call__(self, wls) -> Status:
        return Choice(
            Yield(self.prio_parent, pure(False)),
            Yield(self.prio_child, pure(True)),
        )


@dataclass(frozen=True)
class _BindStep:
    source: Coroutine
    fn: Callable[[Any], Coroutine]

    def __call__(self, wls) -> Status:
        def unfold(status: Status) -> Status:
            kind = type(status)
            if kind is Now:
                return self.fn(status.value).step(wls)
            if kind is Yield:
                return Yield(status.prio, bind(status.cont, self.fn))
            if kind is Choice:
                return Choice(unfold(status.left), unfold(status.right))
            return STOP
        return unfold(self.source.step(wls))


def pure(x) -> Coroutine:
    """A coroutine that immediately finishes with x."""
    return Coroutine(_PureStep(x))


def stop() -> Coroutine:
    """A pruned branch: contributes no outcome."""
    return Coroutine(_StopStep())


def yield_(prio: Priority = DEFAULT_PRIO) -> Coroutine:
    """Hand control back to the scheduler, resuming with None."""
    return Coroutine(_YieldStep(prio))


def get_wls() -> Coroutine:
    """Read the running worker's local storage."""
    return Coroutine(_WlsStep())


def choose(a: Coroutine, b: Coroutine) -> Coroutine:
    """Explore both coroutines; the outcome multiset is the union of both."""
    return Coroutine(_ChooseStep(a, b))


def fork(prio_parent: Priority = DEFAULT_PRIO, prio_child: Priority = DEFAULT_PRIO) -> Coroutine:
    """Duplicate the current path; both continuations re-enter the queue.
    Resumes with False on the parent side and True on the child side."""
    return Coroutine(_ForkStep(prio_parent, prio_child))


def bind(m: Coroutine, fn: Callable[[Any], Coroutine]) -> Coroutine:
    """Sequence fn after m, threading it through Yield and Choice nodes."""
    return Coroutine(_BindStep(m, fn))
