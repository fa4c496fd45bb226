"""Keyed random streams.

Every random draw in the package comes from a generator keyed by the run seed
plus the identity of the thing being generated (unit, month, ...). The stream
for a cell therefore does not depend on how many other cells were generated
before it, or on which thread generated it.
"""

from __future__ import annotations

import zlib

import numpy as np

from .core import DomainError

_MASK64 = (1 << 64) - 1


def _word(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    if hasattr(part, "value") and isinstance(part.value, str):  # enums
        return zlib.crc32(part.value.encode("utf-8"))
    part = int(part)
    if part < 0:
        raise DomainError(f"stream key parts must be non-negative, got {part}")
    return part


def keyed_rng(seed: int, *key) -> np.random.Generator:
    """Generator for ``(seed, *key)``; ints, strings and str-enums are accepted as key parts."""
    if not 0 <= int(seed) <= _MASK64:
        raise DomainError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(seed), *map(_word, key)])))
