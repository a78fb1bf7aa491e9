"""Seed derivation and the portable shuffle PRNG.

All stochastic steps (node-order shuffles, ensemble run seeds) draw from
splitmix64 streams so results are reproducible bit for bit across
platforms and library versions.  The constants are the published
splitmix64 ones (Steele, Lea and Flood, 2014).  Ensemble seeds are
derived with blake2b so they are stable 64-bit hashes of their inputs,
not Python hashes.
"""

from __future__ import annotations

import hashlib

PRNG_ID = "splitmix64/fisher-yates v1"

_MASK = 0xFFFFFFFFFFFFFFFF
_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(state: int) -> tuple[int, int]:
    """Advance a splitmix64 state; return (new_state, output)."""
    state = (state + _GAMMA) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def mix(value: int) -> int:
    """One splitmix64 output for a given state, without keeping the stream."""
    return splitmix64(value & _MASK)[1]


def shuffle_order(n: int, seed: int) -> list[int]:
    """Fisher-Yates permutation of range(n) driven by splitmix64.

    Reference implementation; the clustering kernel carries a compiled
    twin that must produce identical orders (enforced by tests).
    """
    order = list(range(n))
    state = seed & _MASK
    for i in range(n - 1, 0, -1):
        state, z = splitmix64(state)
        j = z % (i + 1)
        order[i], order[j] = order[j], order[i]
    return order


def derive_seed(master: int, *parts: object) -> int:
    """Stable 64-bit seed for a named substream of a master seed.

    Hashes the repr of (master, *parts) with blake2b, so the same
    arguments give the same seed on every platform and process.
    """
    payload = repr((int(master),) + tuple(parts)).encode("utf-8")
    digest = hashlib.blake2b(payload, digest_size=8).digest()
    return int.from_bytes(digest, "little")
