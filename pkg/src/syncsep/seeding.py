"""Counter-based RNG streams for schedule-independent Monte Carlo runs.

Every random consumer derives its generator from a structured integer key,
never from a shared mutable stream, so results are bit-identical for any
worker count or chunk schedule.  Dataset records use ``(master_seed, index)``;
sweep trials use ``(master_seed, purpose_tag, point_index, chunk_index)``.
"""

from __future__ import annotations

from typing import Iterator

import numpy as np

# purpose tags, one per independent random consumer
TAG_MSE = 1
TAG_BER = 2
TAG_THEOREM1 = 3
TAG_DECAY = 4
TAG_MGF = 5
TAG_TAIL = 6
TAG_BER_TRAIN = 7

DEFAULT_CHUNK = 1024


def rng_for(*key: int) -> np.random.Generator:
    return np.random.default_rng(list(int(k) for k in key))


def iter_chunks(total: int, chunk: int = DEFAULT_CHUNK) -> Iterator[tuple[int, int]]:
    """Yield ``(chunk_index, chunk_size)`` covering ``total`` trials."""
    i = 0
    start = 0
    while start < total:
        size = min(chunk, total - start)
        yield i, size
        i += 1
        start += size
