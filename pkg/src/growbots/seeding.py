"""Deterministic seed derivation for parallel-safe experiments.

Every stochastic stream in a run is derived from the 64-bit run seed with
splitmix64, so results never depend on scheduling, worker count, or
evaluation order.  The mixing function is fixed and documented here so that
run records stay portable across machines.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    """One splitmix64 scramble step (Steele, Lea & Flood's finalizer)."""
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def mix(*parts: int) -> int:
    """Fold integers into one 64-bit seed, order-sensitively."""
    h = 0x8E2B_64F1_0C55_3D9B
    for p in parts:
        h = splitmix64((h ^ (p & _MASK64)) & _MASK64)
    return h


def noise_seed(run_seed: int, generation: int, member_index: int) -> int:
    """Seed of a member's motor-noise stream: mix(run_seed, gen, index)."""
    return mix(run_seed, generation, member_index)


def rng_from(seed: int) -> np.random.Generator:
    """PCG64 generator for a derived 64-bit seed."""
    return np.random.Generator(np.random.PCG64(seed))
