"""Counter-based random number generation for reproducible simulation.

The generator, named by GENERATOR_ID in result metadata, is a stateless
map (key, counter) -> uint64: the SplitMix64 output permutation applied at
key + (counter+1) * GAMMA.  Because every draw is addressed rather than
produced by advancing shared state, each replicate owns a key derived from
(master seed, phase, replicate index) and consumes counters in a canonical
order fixed by the algorithm, never by scheduling.  Worker counts and
execution order therefore cannot change a single drawn byte.

Counter layout inside one tree replicate: counters [0, size) hold the
per-vertex open/closed draws at the vertex's breadth-first index, and
counters from size upward are consumed sequentially by the boundary
continuation walkers, processed in breadth-first boundary order.

This module is the pure-Python reference; the compiled kernels reimplement
the same arithmetic and are tested for exact agreement against it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

__all__ = [
    "GENERATOR_ID",
    "GAMMA",
    "MASK64",
    "PHASE_TREE_CLUSTER",
    "PHASE_TREE_RUN",
    "PHASE_TREE_JOINT",
    "PHASE_SINGLE_CLUSTER",
    "PHASE_SINGLE_RUN",
    "RandomStream",
    "derive_key",
    "mix64",
    "u64_at",
    "uniform_at",
]

GENERATOR_ID = "sm64ctr-v1"

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15

# Phase constants keep the streams of distinct sampling tasks disjoint even
# under one master seed.
PHASE_TREE_CLUSTER = 0x11
PHASE_TREE_RUN = 0x22
PHASE_TREE_JOINT = 0x33
PHASE_SINGLE_CLUSTER = 0x44
PHASE_SINGLE_RUN = 0x55

_INV_2_53 = 1.0 / (1 << 53)


def mix64(x: int) -> int:
    """SplitMix64 output permutation (a bijection on 64-bit words)."""
    x &= MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & MASK64
    x ^= x >> 31
    return x


def u64_at(key: int, counter: int) -> int:
    """The uint64 at an absolute counter position under a key."""
    return mix64((key + ((counter + 1) * GAMMA)) & MASK64)


def uniform_at(key: int, counter: int) -> float:
    """The counter's draw as a float in [0, 1) with 53 random bits."""
    return (u64_at(key, counter) >> 11) * _INV_2_53


def derive_key(key: int, *fields: int) -> int:
    """Fold integer coordinates (phase, replicate, ...) into a subkey.

    Each step XORs one field into the running key, offsets by GAMMA, and
    passes through mix64; every step is a bijection of the key for a fixed
    field, so distinct field tuples of equal length cannot collide by
    construction and mixed lengths only by 2^-64 accident.
    """
    k = key & MASK64
    for f in fields:
        k = mix64(((k ^ (f & MASK64)) + GAMMA) & MASK64)
    return k


@dataclass
class RandomStream:
    """Sequential view over one key's counter line.

    Thin convenience for Python-level sampling and oracles; kernels address
    counters directly.
    """

    key: int
    counter: int = field(default=0)

    @classmethod
    def for_replicate(cls, seed: int, phase: int, replicate: int) -> "RandomStream":
        return cls(key=derive_key(seed, phase, replicate))

    def next_u64(self) -> int:
        v = u64_at(self.key, self.counter)
        self.counter += 1
        return v

    def next_uniform(self) -> float:
        v = uniform_at(self.key, self.counter)
        self.counter += 1
        return v

    def jump_to(self, counter: int) -> None:
        if counter < 0:
            raise ValueError("counter must be >= 0")
        self.counter = counter
