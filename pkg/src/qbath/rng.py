"""Seeded random streams and the chunked execution used by every sampler.

A stream is identified by ``(seed, stream_id)``. Work of ``count`` items is
cut into fixed-size chunks; chunk ``j`` draws from its own generator keyed by
``(seed, stream_id, j)``. Results are merged by chunk index, so the output does
not depend on how many worker threads ran the chunks.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
DEFAULT_CHUNK = 8192


@dataclass(frozen=True)
class RngStream:
    seed: int
    stream_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "seed", int(self.seed) & MASK64)
        object.__setattr__(self, "stream_id", int(self.stream_id) & MASK64)

    def generator(self, chunk=None):
        """PCG64 generator for the whole stream, or for one chunk of it."""
        key = (self.stream_id,) if chunk is None else (self.stream_id, int(chunk))
        seq = np.random.SeedSequence(self.seed, spawn_key=key)
        return np.random.Generator(np.random.PCG64(seq))

    def substream(self, stream_id):
        return RngStream(self.seed, stream_id)


def chunk_sizes(count, chunk=DEFAULT_CHUNK):
    """Sizes of the fixed chunks covering ``count`` items (last one may be short)."""
    if count < 0:
        raise ValueError("count must be non-negative")
    full, rest = divmod(int(count), int(chunk))
    return [chunk] * full + ([rest] if rest else [])


def map_chunks(fn, count, rng, *, chunk=DEFAULT_CHUNK, threads=1):
    """Run ``fn(generator, size)`` on every chunk; results in chunk order."""
    sizes = chunk_sizes(count, chunk)

    def run(j):
        return fn(rng.generator(j), sizes[j])

    if threads <= 1 or len(sizes) <= 1:
        return [run(j) for j in range(len(sizes))]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(run, range(len(sizes))))
