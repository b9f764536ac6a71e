"""Seeded, splittable randomness and thread-count-independent reductions.

Streams are counter-based (Philox) with keys derived from (seed, tags), so
every consumer draws from its own independent, reproducible stream.  Monte
Carlo sums are accumulated per fixed-size chunk and combined with Kahan
compensation in chunk order; the result is bit-identical for any number of
worker threads, which only changes who evaluates each chunk.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 8192


def stream(seed: int, *tags) -> np.random.Generator:
    """Independent generator for (seed, tags); stable across runs and platforms."""
    label = repr((int(seed),) + tags).encode()
    digest = hashlib.blake2b(label, digest_size=16).digest()
    key = np.frombuffer(digest, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def chunked_sums(evaluate, count: int, threads: int = 1, chunk: int = CHUNK) -> list[np.ndarray]:
    """Sum evaluate(start, stop) over [0, count) deterministically.

    ``evaluate`` returns a sequence of float arrays whose last axis is the
    sample axis; the returned list holds their sums over all samples.  The
    chunk size is fixed, so the partition (and therefore the float rounding)
    does not depend on ``threads``.
    """
    segments = [(s, min(s + chunk, count)) for s in range(0, count, chunk)]
    if threads > 1 and len(segments) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(pool.map(lambda seg: evaluate(*seg), segments))
    else:
        partials = [evaluate(*seg) for seg in segments]

    sums: list[np.ndarray] | None = None
    comps: list[np.ndarray] | None = None
    for part in partials:
        part_sums = [np.sum(np.asarray(p, dtype=float), axis=-1) for p in part]
        if sums is None:
            sums = part_sums
            comps = [np.zeros_like(s) for s in part_sums]
            continue
        for i, ps in enumerate(part_sums):
            y = ps - comps[i]
            t = sums[i] + y
            comps[i] = (t - sums[i]) - y
            sums[i] = t
    assert sums is not None
    return sums


def mean_and_stderr(total: np.ndarray, total_sq: np.ndarray, count: int):
    """Sample mean and standard error from sums of values and squares."""
    mean = total / count
    if count > 1:
        var = (total_sq - count * mean * mean) / (count - 1)
        var = np.maximum(var, 0.0)
        stderr = np.sqrt(var / count)
    else:
        stderr = np.zeros_like(mean)
    return mean, stderr
