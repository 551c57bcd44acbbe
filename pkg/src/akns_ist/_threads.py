"""Thread-count plumbing for the data-parallel stages."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "AKNS_IST_THREADS"
_override: int | None = None


def set_threads(n: int | None) -> None:
    global _override
    if n is not None and n < 1:
        raise ValueError("thread count must be >= 1")
    _override = n


def get_threads() -> int:
    """Explicit setting first, then $AKNS_IST_THREADS, then 1."""
    if _override is not None:
        return _override
    v = os.environ.get(ENV_VAR, "").strip()
    if v:
        try:
            n = int(v)
        except ValueError:
            return 1
        return max(1, n)
    return 1


def pmap(fn, items):
    """``list(map(fn, items))``, spread over threads when more than one is allowed."""
    items = list(items)
    n = get_threads()
    if n == 1 or len(items) < 2:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
