"""Deterministic seed derivation for parallel, reproducible generation.

A master seed plus an item index map to a 64-bit per-item seed through
splitmix64: ``derive_seed(master, i) = mix(master + i * GOLDEN mod 2^64)``.
Per-item streams are therefore independent of worker scheduling, so a
dataset generated with any ``--jobs`` value is byte-identical.
"""

from __future__ import annotations

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 output step for a 64-bit state."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def derive_seed(master: int, index: int) -> int:
    """Per-item seed for `index` under `master`; stable across platforms."""
    if index < 0:
        raise ValueError("index must be non-negative")
    return splitmix64((master + index * _GOLDEN) & _MASK64)
