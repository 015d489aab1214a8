"""Small shared helpers: thread-pool mapping and Fermi occupation."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np


def resolve_threads(requested=None) -> int:
    """Worker count from an explicit request or the NEQT_THREADS env var."""
    if requested is not None and int(requested) >= 1:
        return int(requested)
    env = os.environ.get("NEQT_THREADS", "")
    try:
        return max(1, int(env))
    except ValueError:
        return 1


def thread_map(fn, items, threads: int = 1) -> list:
    """Map fn over items, preserving order; threads > 1 uses a pool.

    Results are collected in input order regardless of completion order, so
    downstream reductions stay deterministic.
    """
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def fermi(x):
    """Fermi function 1/(1 + e^x), overflow-safe for large |x|."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x > 0
    out[pos] = np.exp(-x[pos]) / (1.0 + np.exp(-x[pos]))
    out[~pos] = 1.0 / (1.0 + np.exp(x[~pos]))
    return out if out.ndim else float(out)
