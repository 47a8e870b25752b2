"""Reproducible random streams.

Every Monte Carlo routine draws from a stream derived from a master seed,
a module tag and a replica (or block) index.  The derivation is counter
based: a Philox bit generator keyed through ``SeedSequence`` with a spawn
key built from the tag and the index, so stream ``i`` never depends on how
many other streams were requested.
"""
from __future__ import annotations

import zlib
from typing import Iterator, Union

import numpy as np

RngLike = Union[int, np.random.Generator, None]

#: replicas per derived stream in blocked Monte Carlo loops
BLOCK_SIZE = 1 << 16


def tag_id(module_tag: str) -> int:
    """Stable 32-bit integer for a module tag."""
    return zlib.crc32(module_tag.encode("utf-8"))


def rng_stream(master_seed: int, module_tag: str, replica_index: int) -> np.random.Generator:
    """Independent generator for ``(master_seed, module_tag, replica_index)``.

    Parameters
    ----------
    master_seed : int
        Non-negative 64-bit master seed.
    module_tag : str
        Name of the consumer, hashed into the spawn key.
    replica_index : int
        Non-negative stream index.

    Returns
    -------
    numpy.random.Generator
        Philox-backed generator.
    """
    if master_seed < 0 or replica_index < 0:
        raise ValueError("seed and index must be non-negative")
    ss = np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=(tag_id(module_tag), int(replica_index))
    )
    return np.random.Generator(np.random.Philox(ss))


def blocks(rng: RngLike, module_tag: str, replicas: int,
           block_size: int = BLOCK_SIZE) -> Iterator[tuple[np.random.Generator, int]]:
    """Split ``replicas`` into (generator, count) blocks.

    With an integer seed, block ``b`` uses ``rng_stream(seed, tag, b)`` so the
    first ``r`` replicas are identical whatever the total.  A ``Generator``
    is used as a single stream for the whole run.
    """
    if replicas < 0:
        raise ValueError("replicas must be non-negative")
    if isinstance(rng, np.random.Generator):
        if replicas:
            yield rng, replicas
        return
    seed = 0 if rng is None else int(rng)
    done, b = 0, 0
    while done < replicas:
        c = min(block_size, replicas - done)
        yield rng_stream(seed, module_tag, b), c
        done += c
        b += 1


def as_generator(rng: RngLike, module_tag: str = "default") -> np.random.Generator:
    """Coerce a seed or generator into a generator (stream index 0)."""
    if isinstance(rng, np.random.Generator):
        return rng
    return rng_stream(0 if rng is None else int(rng), module_tag, 0)
