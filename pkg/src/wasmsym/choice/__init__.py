"""Forkable cooperative coroutines and their multi-worker scheduler."""

from wasmsym.choice.core import (
    DEFAULT_PRIO,
    Choice,
    Coroutine,
    Now,
    Priority,
    Stop,
    Yield,
    bind,
    choose,
    fork,
    get_wls,
    pure,
    run_step,
    stop,
    yield_,
)
from wasmsym.choice.queue import WorkQueue
from wasmsym.choice.scheduler import (
    LocalStepExecutor,
    ProcessStepExecutor,
    SchedulerStats,
    run_scheduler,
)

__all__ = [
    "Coroutine", "Now", "Yield", "Choice", "Stop", "Priority", "DEFAULT_PRIO",
    "pure", "bind", "yield_", "choose", "fork", "get_wls", "stop", "run_step",
    "WorkQueue", "run_scheduler", "SchedulerStats",
    "LocalStepExecutor", "ProcessStepExecutor",
]
