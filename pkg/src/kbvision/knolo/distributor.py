"""Sequential or process-parallel evaluation of independent jobs.

Results always come back in job order, and a failing job yields a
``JobResult`` carrying the error instead of a value, so one broken job
never loses the others.
"""
from __future__ import annotations

import multiprocessing
import traceback
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures.process import BrokenProcessPool
from dataclasses import dataclass
from typing import Any, Callable, Sequence


@dataclass(frozen=True)
class JobResult:
    value: Any = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def _run(job: Callable[[], Any]) -> JobResult:
    try:
        return JobResult(job())
    except Exception as e:  # noqa: BLE001 - isolated per job
        return JobResult(error=f"{type(e).__name__}: {e}")


def _describe(exc: BaseException) -> str:
    return "".join(traceback.format_exception_only(type(exc), exc)).strip()


def _new_pool(workers: int) -> ProcessPoolExecutor:
    # spawn, not fork: workers never inherit parent state
    return ProcessPoolExecutor(max_workers=workers, mp_context=multiprocessing.get_context("spawn"))


class Distributor:
    """Job runner; as a context manager it keeps one worker pool alive
    across calls to amortise process start-up."""

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers or 1))
        self._pool: ProcessPoolExecutor | None = None

    def __enter__(self):
        if self.workers > 1:
            self._pool = _new_pool(self.workers)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def map(self, jobs: Sequence[Callable[[], Any]]) -> list[JobResult]:
        jobs = list(jobs)
        if not jobs:
            return []
        if self.workers == 1:
            return [_run(j) for j in jobs]
        if self._pool is None:
            with self:
                return self._map_pool(jobs)
        return self._map_pool(jobs)

    def _map_pool(self, jobs) -> list[JobResult]:
        futures = []
        for j in jobs:
            try:
                futures.append(self._pool.submit(_run, j))
            except Exception as e:  # noqa: BLE001 - e.g. pool already broken
                futures.append(e)
        out, broken = [], False
        for f in futures:
            try:
                if isinstance(f, BaseException):
                    raise f
                out.append(f.result())
            except Exception as e:  # noqa: BLE001 - unpicklable job or dead worker
                broken |= isinstance(e, BrokenProcessPool)
                out.append(JobResult(error=_describe(e)))
        if broken:
            self._pool.shutdown(wait=False)
            self._pool = _new_pool(self.workers)
        return out


def distribute(jobs: Sequence[Callable[[], Any]], workers: int = 1) -> list[JobResult]:
    """Run zero-argument callables, in a process pool when ``workers > 1``.

    Parallel jobs must be picklable.
    """
    return Distributor(workers).map(jobs)
