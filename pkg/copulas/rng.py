"""
Seeded, splittable random streams.

Every draw in the engine comes from a PCG64 generator seeded with
``SeedSequence(seed, spawn_key=(stream, chunk))``. Large draws are cut into
fixed-size chunks so the output is the same whatever the worker count.
"""
import logging
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from longevity_bounds.exceptions import InvalidInputError

logger = logging.getLogger(__name__)

CHUNK_SIZE = 10_000
SEED_LIMIT = 2 ** 64

_TINY = np.finfo(float).tiny
_BELOW_ONE = 1.0 - np.finfo(float).epsneg


def stream_id(name):
    """Stable integer id for a named stream (e.g. a copula label)."""
    if isinstance(name, (int, np.integer)):
        if name < 0:
            raise InvalidInputError(f"Stream ids must be non-negative, got {name}")
        return int(name)
    return zlib.crc32(str(name).encode('utf-8'))


@dataclass(frozen=True)
class Seed:
    value: int

    def __post_init__(self):
        if isinstance(self.value, bool) or not isinstance(self.value, (int, np.integer)):
            raise InvalidInputError(f"Seed must be an integer, got {self.value!r}")
        if not 0 <= int(self.value) < SEED_LIMIT:
            raise InvalidInputError(f"Seed must be an unsigned 64-bit integer, got {self.value}")
        object.__setattr__(self, 'value', int(self.value))

    def __str__(self):
        return str(self.value)

    def generator(self, stream, chunk=0):
        sequence = np.random.SeedSequence(self.value, spawn_key=(stream_id(stream), int(chunk)))
        return np.random.Generator(np.random.PCG64(sequence))


def _worker_count(workers):
    if workers is None:
        workers = getattr(settings, 'BOUNDS_WORKERS', 1)
    return max(1, int(workers))


def draw_chunked(seed, stream, n, fill, workers=None):
    """
    Build ``n`` rows by calling ``fill(generator, size)`` once per chunk.

    Chunk ``c`` always draws from substream ``(stream, c)`` and the chunks are
    concatenated in order, so threads only change the wall-clock time.
    """
    if n < 1:
        raise InvalidInputError(f"Number of draws must be at least 1, got {n}")
    sizes = [min(CHUNK_SIZE, n - start) for start in range(0, n, CHUNK_SIZE)]

    def run(chunk):
        return fill(seed.generator(stream, chunk), sizes[chunk])

    workers = _worker_count(workers)
    if workers == 1 or len(sizes) == 1:
        parts = [run(chunk) for chunk in range(len(sizes))]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(len(sizes))))

    logger.debug(f"Drew {n} rows from stream {stream!r} in {len(sizes)} chunks")
    return np.concatenate(parts, axis=0)


def open_unit(u):
    """Clip uniforms into the open interval (0, 1)."""
    return np.clip(u, _TINY, _BELOW_ONE)


def uniforms(seed, stream, n, width=1, workers=None):
    return draw_chunked(
        seed, stream, n,
        lambda rng, size: open_unit(rng.random((size, width))),
        workers=workers,
    )


def standard_normals(seed, stream, n, width=1, workers=None):
    return draw_chunked(
        seed, stream, n,
        lambda rng, size: rng.standard_normal((size, width)),
        workers=workers,
    )
