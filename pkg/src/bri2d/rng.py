"""Reproducible random streams.

Every unit of work gets its own generator keyed by ``(seed, task index)``,
so results never depend on how tasks are spread over workers.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, Optional

import numpy as np

ENV_SEED = "BRI2D_SEED"
DEFAULT_SEED = 20190101


def default_seed() -> int:
    raw = os.environ.get(ENV_SEED)
    return int(raw) if raw not in (None, "") else DEFAULT_SEED


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based (Philox) generator for task ``key`` under ``seed``."""
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if rng is None:
        return stream(default_seed())
    return stream(int(rng))


def _call(args):
    fn, seed, index, payload = args
    return fn(stream(seed, index), payload)


def map_tasks(fn: Callable, payloads: Iterable, seed: int, workers: int = 1,
              offset: int = 0) -> list:
    """Run ``fn(rng_i, payload_i)`` for every payload, in index order.

    ``fn`` must be picklable when ``workers > 1``.
    """
    jobs = [(fn, seed, offset + i, p) for i, p in enumerate(payloads)]
    if workers <= 1 or len(jobs) <= 1:
        return [_call(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, jobs))


def split_counts(total: int, chunk: int) -> list:
    """Partition ``total`` into chunks of at most ``chunk`` (fixed layout,
    independent of the worker count)."""
    out = [chunk] * (total // chunk)
    if total % chunk:
        out.append(total % chunk)
    return out


def seed_or_default(seed: Optional[int]) -> int:
    return default_seed() if seed is None else int(seed)
