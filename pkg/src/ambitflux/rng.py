"""Counter-based random streams.

Every sampler takes an explicit ``numpy.random.Generator``. Replication ``i``
of an experiment seeded with ``master_seed`` always draws from
``stream(master_seed, i)``, so results do not depend on how replications are
scheduled across workers.
"""

from __future__ import annotations

import hashlib

import numpy as np


def stream(master_seed: int, *path: int) -> np.random.Generator:
    """Philox stream keyed by ``(master_seed, *path)``."""
    seq = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, *map(int, path)])
    return np.random.Generator(np.random.Philox(seq))


def child_seed(rng: np.random.Generator) -> int:
    """Draw a 63-bit seed from ``rng`` for a derived stream."""
    return int(rng.integers(0, 2**63 - 1))


def array_key(*arrays: np.ndarray) -> int:
    """Stable 64-bit digest of array contents (shape and dtype included)."""
    h = hashlib.blake2b(digest_size=8)
    for a in arrays:
        a = np.ascontiguousarray(a)
        h.update(str(a.shape).encode())
        h.update(str(a.dtype).encode())
        h.update(a.tobytes())
    return int.from_bytes(h.digest(), "little") & 0x7FFFFFFFFFFFFFFF
