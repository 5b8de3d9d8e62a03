"""Counter-based random streams: one independent Philox stream per (stage, chunk, round)."""
from typing import Iterator, Tuple

import numpy as np

STAGE_WALK = 1
STAGE_REUSE = 2
# per-point retries after a chunk fails
STAGE_WALK_RETRY = 3
STAGE_REUSE_RETRY = 4


def make_rng(seed: int, stage: int, chunk: int, round_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, stage, chunk, round_index]))


def chunk_slices(n: int, chunk_size: int) -> Iterator[Tuple[int, slice]]:
    """Fixed-size chunks; boundaries depend only on n and chunk_size."""
    for index, start in enumerate(range(0, n, chunk_size)):
        yield index, slice(start, min(start + chunk_size, n))
