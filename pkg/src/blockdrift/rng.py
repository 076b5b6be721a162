"""Counter-based random streams.

Every uniform draw is addressed by ``(seed, replication_index, trial_index)``:
the Philox key comes from ``seed`` and the replication index occupies the
second counter word, so trial ``i`` of replication ``r`` is the ``i``-th
output of a stream nobody else touches.  Results therefore do not depend
on batch sizes, execution order or the number of workers.
"""

from __future__ import annotations

import hashlib
from functools import lru_cache

import numpy as np

_MASK64 = (1 << 64) - 1


def derive_seed(master_seed: int, *parts) -> int:
    """Stable 64-bit seed from a master seed and a job description.

    ``parts`` are rendered with ``repr`` (floats with 12 significant
    digits) so the mapping is identical across runs and platforms.
    """
    tokens = [str(int(master_seed))]
    for p in parts:
        if isinstance(p, float):
            tokens.append(format(p, ".12g"))
        else:
            tokens.append(str(p))
    digest = hashlib.blake2b("|".join(tokens).encode(), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@lru_cache(maxsize=1024)
def _philox_key(seed: int) -> tuple[int, int]:
    state = np.random.SeedSequence(int(seed) & _MASK64).generate_state(2, np.uint64)
    return int(state[0]), int(state[1])


def stream(seed: int, replication_index: int) -> np.random.Generator:
    """Generator for one replication; draws are a pure function of the indices."""
    if replication_index < 0:
        raise ValueError("replication_index must be non-negative")
    key = np.array(_philox_key(seed), dtype=np.uint64)
    counter = np.array([0, replication_index, 0, 0], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(counter=counter, key=key))


def uniforms(seed: int, start: int, count: int, n: int, out: np.ndarray | None = None) -> np.ndarray:
    """``(count, n)`` matrix of uniforms for replications ``start .. start+count-1``."""
    if out is None:
        out = np.empty((count, n), dtype=np.float64)
    for r in range(count):
        stream(seed, start + r).random(n, out=out[r])
    return out
