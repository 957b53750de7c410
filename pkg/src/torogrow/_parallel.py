"""Deterministic chunked evaluation over batches of independent points."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

ENV_THREADS = "TOROGROW_THREADS"


def max_workers() -> int:
    n = os.cpu_count() or 1
    cap = os.environ.get(ENV_THREADS)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            pass
    return n


def chunked_map(fn, points: np.ndarray, *, min_chunk: int = 4096):
    """Apply ``fn`` to row-chunks of ``points`` (batch axis 0) and reassemble in input order.

    ``fn`` must return an array or a dict of arrays whose leading axis matches the chunk.
    """
    workers = max_workers()
    total = points.shape[0]
    if workers == 1 or total < 2 * min_chunk:
        return fn(points)
    n_chunks = min(workers, total // min_chunk)
    pieces = np.array_split(points, n_chunks, axis=0)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(fn, pieces))
    if isinstance(results[0], dict):
        return {k: np.concatenate([r[k] for r in results], axis=0) for k in results[0]}
    return np.concatenate(results, axis=0)
