"""Deterministic worker-pool helper.

GPCAL_THREADS caps how many worker threads the embarrassingly parallel
loops (optimizer restarts, kernel comparisons, cross-validation repeats)
may use. Unset or 1 means sequential. Results are merged by index, so
the output never depends on the schedule.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

from .errors import ConfigError

ENV_VAR = "GPCAL_THREADS"


def worker_cap() -> int:
    raw = os.environ.get(ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ConfigError(f"{ENV_VAR} must be >= 1, got {cap}")
    return cap


def run_indexed(fn, items):
    """Apply ``fn`` to each item, possibly in worker threads; ordered results."""
    items = list(items)
    workers = min(worker_cap(), len(items)) if items else 1
    if workers <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
