"""Synchronized FIFO work queue with pledges.

A pledge is a promise that more elements may still be pushed: pops block
while any pledge is outstanding instead of concluding the queue is drained.
pop(start_pledge=True) atomically acquires a pledge together with the
element; work_while releases it once the element has been processed.
"""

from __future__ import annotations

import threading
from collections import deque
from typing import Callable

from wasmsym.errors import InternalEngineError


class WorkQueue:
    def __init__(self):
        self._buf: deque = deque()
        self._pledges = 0
        self._closed = False
        self._cond = threading.Condition()
        self.pushed = 0  # instrumentation

    def push(self, item) -> None:
        with self._cond:
            if self._closed:
                return
            self._buf.append(item)
            self.pushed += 1
            self._cond.notify()

    def pop(self, start_pledge: bool = False):
        """Next element, or None once the queue is drained or closed.

        Blocks while the queue is empty but pledges are outstanding.
        """
        with self._cond:
            while True:
                if self._closed:
                    return None
                if self._buf:
                    item = self._buf.popleft()
                    if start_pledge:
                        self._pledges += 1
                    return item
                if self._pledges == 0:
                    return None
                self._cond.wait()

    def make_pledge(self) -> None:
        with self._cond:
            self._pledges += 1

    def end_pledge(self) -> None:
        with self._cond:
            self._pledges -= 1
            if self._pledges < 0:
                raise InternalEngineError("pledge count went negative")
            if self._pledges == 0:
                self._cond.notify_all()

    def close(self) -> None:
        with self._cond:
            self._closed = True
            self._cond.notify_all()

    @property
    def closed(self) -> bool:
        with self._cond:
            return self._closed

    def work_while(self, body: Callable) -> None:
        """Pop and process elements until the queue drains or closes.

        body(element, push_back) runs under a pledge, so sibling workers
        keep waiting while it may still push new work.
        """
        while True:
            item = self.pop(start_pledge=True)
            if item is None:
                return
            try:
                body(item, self.push)
            finally:
                self.end_pledge()
