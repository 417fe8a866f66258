"""Deterministic seed derivation for all randomized subsystems.

A single master seed is split into independent per-subsystem streams via a
64-bit mixing hash of (seed, subsystem name). Identical (seed, name, index)
always yields the identical derived seed on every platform.
"""

from __future__ import annotations

_MASK = 0xFFFFFFFFFFFFFFFF


def _fnv1a64(data: bytes) -> int:
    h = 0xCBF29CE484222325
    for b in data:
        h ^= b
        h = (h * 0x100000001B3) & _MASK
    return h


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _MASK
    return (x ^ (x >> 31)) & _MASK


def subsystem_seed(master: int, name: str, index: int | None = None) -> int:
    """Derive the 64-bit seed for one subsystem (optionally one item of it)."""
    h = _splitmix64((master & _MASK) ^ _fnv1a64(name.encode("utf-8")))
    if index is not None:
        h = _splitmix64(h ^ (index & _MASK))
    return h
