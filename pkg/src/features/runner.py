from __future__ import annotations

import logging
import os
from concurrent.futures import ProcessPoolExecutor, as_completed
from typing import Callable

import numpy as np

from src.utils.errors import ContractError

log = logging.getLogger(__name__)

_MODULE = "experiments"

DEFAULT_BLOCK_SIZE = 32


def _run_block(fn: Callable[..., np.ndarray], start: int, stop: int, params: dict) -> tuple[int, np.ndarray]:
    rows = [np.asarray(fn(index, **params)) for index in range(start, stop)]
    return start, np.stack(rows)


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def run_replicas(
    fn: Callable[..., np.ndarray],
    replicas: int,
    workers: int = 1,
    block_size: int = DEFAULT_BLOCK_SIZE,
    **params,
) -> np.ndarray:
    """Evaluate fn(replica_index, **params) for every replica; rows come back in replica order."""
    if replicas < 1:
        raise ContractError(_MODULE, f"replicas must be >= 1, got {replicas}")
    if workers < 1:
        raise ContractError(_MODULE, f"workers must be >= 1, got {workers}")
    blocks = [(start, min(start + block_size, replicas)) for start in range(0, replicas, block_size)]
    parts: dict[int, np.ndarray] = {}
    if workers == 1 or len(blocks) == 1:
        for start, stop in blocks:
            parts[start] = _run_block(fn, start, stop, params)[1]
    else:
        with ProcessPoolExecutor(max_workers=min(workers, len(blocks))) as executor:
            futures = [executor.submit(_run_block, fn, start, stop, params) for start, stop in blocks]
            for future in as_completed(futures):
                start, rows = future.result()
                parts[start] = rows
                log.debug("replica block %s done (%s/%s)", start, len(parts), len(blocks))
    return np.concatenate([parts[start] for start, _ in blocks], axis=0)
