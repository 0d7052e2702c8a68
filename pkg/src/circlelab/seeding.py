"""Deterministic seed derivation and RNG construction for replica ensembles.

Every replica owns one PCG64 stream whose seed is a pure function of the
root seed and the replica index.  The derivation uses the splitmix64
finalizer on ``root + (index + 1) * GOLDEN``; the finalizer is a bijection
on 64-bit integers and GOLDEN is odd, so distinct indices under a fixed
root can never collide, and distinct roots at a fixed index cannot either.
"""

from __future__ import annotations

from typing import Iterable, List

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15


def _mix(z: int) -> int:
    """splitmix64 output finalizer; a bijection on 64-bit integers."""
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def derive_replica_seed(root_seed: int, replica_index: int) -> int:
    """Derive the 64-bit seed of one replica from the root seed.

    Deterministic and collision-resistant: for a fixed root the map
    index -> seed is injective over the full 64-bit index range.
    """
    if replica_index < 0:
        raise ValueError("replica_index must be nonnegative")
    return _mix((int(root_seed) + GOLDEN * (replica_index + 1)) & MASK64)


def derive_replica_seeds(root_seed: int, n: int) -> tuple:
    """Seeds for replicas 0..n-1 under one root seed."""
    return tuple(derive_replica_seed(root_seed, i) for i in range(n))


def generator_from_seed(seed: int) -> np.random.Generator:
    """A fresh PCG64 generator for one replica seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & MASK64))


def generators_from_seeds(seeds: Iterable[int]) -> List[np.random.Generator]:
    return [generator_from_seed(s) for s in seeds]
