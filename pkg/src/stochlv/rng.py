"""Reproducible, addressable random streams.

A stream is identified by ``(seed, stream_id)`` where ``stream_id`` is a
tuple of non-negative integers such as ``(path_index, noise_index)``. The
id becomes the spawn key of a :class:`numpy.random.SeedSequence`, so streams
are statistically independent and do not depend on the order in which
they are created or consumed.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

# noise_index values used by the simulators
B1, B2, B3 = 1, 2, 3
CHAIN = 0


def _key(stream_id) -> tuple[int, ...]:
    if isinstance(stream_id, (int, np.integer)):
        ids: Iterable = (stream_id,)
    else:
        ids = stream_id
    key = tuple(int(i) for i in ids)
    if any(i < 0 for i in key):
        raise ValueError(f"stream ids must be non-negative, got {stream_id!r}")
    return key


def gaussian_stream(seed: int, stream_id) -> np.random.Generator:
    """Generator for the stream ``(seed, stream_id)``.

    Draws are chunk-invariant: ``standard_normal(m)`` followed by
    ``standard_normal(n)`` yields the same numbers as ``standard_normal(m + n)``.
    """
    if seed < 0 or seed >= 2 ** 64:
        raise ValueError("seed must be a 64-bit unsigned integer")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=_key(stream_id))
    return np.random.Generator(np.random.PCG64(ss))
