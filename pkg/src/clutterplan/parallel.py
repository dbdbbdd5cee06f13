"""Ordered worker pool used for batched expansion and simulation."""
from __future__ import annotations

import os
from concurrent.futures import Executor, ProcessPoolExecutor, ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # not available on every platform
        return os.cpu_count() or 1


class WorkerPool:
    """Maps a function over items, returning results in input order.

    ``workers <= 1`` runs inline.  Threads pay off because the compiled
    kernels release the GIL; ``kind="process"`` sidesteps the GIL entirely
    for the pure-Python backend at the cost of pickling states.
    """

    def __init__(self, workers: int = 1, kind: str = "thread"):
        if kind not in ("thread", "process"):
            raise ValueError(f"unknown pool kind {kind!r}")
        self.workers = max(1, int(workers))
        self.kind = kind
        self._executor: Executor | None = None

    def _ensure(self) -> Executor:
        if self._executor is None:
            cls = ThreadPoolExecutor if self.kind == "thread" else ProcessPoolExecutor
            self._executor = cls(max_workers=self.workers)
        return self._executor

    def map(self, fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
        items = list(items)
        if self.workers <= 1 or len(items) <= 1:
            return [fn(x) for x in items]
        chunk = max(1, len(items) // (4 * self.workers)) if self.kind == "process" else 1
        return list(self._ensure().map(fn, items, chunksize=chunk))

    def close(self) -> None:
        if self._executor is not None:
            self._executor.shutdown(wait=True)
            self._executor = None

    def __enter__(self) -> "WorkerPool":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


SERIAL = WorkerPool(1)
