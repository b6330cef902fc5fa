"""Counter-derived random streams and chunked, worker-count-independent execution."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

DEFAULT_CHUNK = 4096


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the stream addressed by ``(seed, key...)``.

    The same address always yields the same stream, regardless of how many
    other streams exist or which process asks for it.
    """
    seq = np.random.SeedSequence(int(seed) & ((1 << 64) - 1), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def chunk_sizes(total: int, chunk: int = DEFAULT_CHUNK) -> list[int]:
    if total < 0:
        raise ValueError("total must be nonnegative")
    full, rest = divmod(total, chunk)
    return [chunk] * full + ([rest] if rest else [])


def _call(args):
    fn, seed, key, size = args
    return fn(substream(seed, *key), size)


def map_chunks(
    fn: Callable[[np.random.Generator, int], T],
    total: int,
    seed: int,
    stream: Sequence[int] = (),
    chunk: int = DEFAULT_CHUNK,
    workers: int = 1,
) -> list[T]:
    """Run ``fn(rng, size)`` over fixed-size chunks, each with its own substream.

    Results come back in chunk order, so any in-order merge is independent of
    ``workers``.
    """
    tasks = [(fn, seed, (*stream, i), size) for i, size in enumerate(chunk_sizes(total, chunk))]
    if workers <= 1 or len(tasks) <= 1:
        return [_call(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_call, tasks))
