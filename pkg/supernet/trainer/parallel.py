# supernet/trainer/parallel.py

import logging
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, List, Optional, Sequence, TypeVar

from supernet.settings import get_settings

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def worker_count(jobs: int, cap: Optional[int] = None) -> int:
    """SNET_THREADS (or ``cap``) bounded by the number of jobs; defaults to one worker per job."""
    cap = cap if cap is not None else get_settings().threads
    return max(1, min(jobs, cap if cap is not None else jobs))


def run_sessions(fn: Callable[[T], R], jobs: Sequence[T], cap: Optional[int] = None) -> List[R]:
    """
    Run independent training sessions, in worker processes when more than
    one worker is allowed. Results keep the order of ``jobs`` and equal a
    sequential run because every session carries its own seed.
    """
    workers = worker_count(len(jobs), cap)
    if workers == 1:
        return [fn(job) for job in jobs]
    logger.info(f"Running {len(jobs)} sessions on {workers} worker processes")
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, jobs))
