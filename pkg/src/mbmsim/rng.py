"""Deterministic random-stream derivation.

Every randomized operation in the package draws from a named substream of a
single master seed, so that e.g. an Eb/N0 sweep can reuse one constellation
realization while noise and message draws stay independent, and so that
parallel workers owning disjoint batch indices reproduce the single-threaded
run bit for bit.

Streams are keyed as (master_seed, stream_id, *indices) through numpy's
``SeedSequence`` spawn keys on top of the counter-based Philox generator.
"""

from __future__ import annotations

import numpy as np

# Fixed ids; appending new names is fine, renumbering is a compatibility break.
_STREAM_IDS = {
    "constellation": 0,
    "noise": 1,
    "message": 2,
    "pilot": 3,
    "mutual-information": 4,
    "agreement": 5,
    "permutation": 6,
}


def substream(master_seed: int, stream: str, *indices: int) -> np.random.Generator:
    """Return the generator for a named substream of ``master_seed``.

    The same (seed, stream, indices) triple always yields an identical
    generator state, independent of call order or thread count.
    """
    try:
        stream_id = _STREAM_IDS[stream]
    except KeyError:
        raise ValueError(f"unknown stream name {stream!r}") from None
    ss = np.random.SeedSequence(entropy=master_seed, spawn_key=(stream_id, *indices))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed) -> np.random.Generator:
    """Coerce ``seed`` (int, SeedSequence, Generator, or None) to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
