"""Seed-addressed uniform random field on the bonds of the oriented lattice.

Site ``(n, m)`` (with ``n + m`` even) has two outgoing bonds, to
``(n + 1, m - 1)`` (``LEFT``) and to ``(n + 1, m + 1)`` (``RIGHT``).  Each bond
carries a uniform in ``[0, 1)`` computed by hashing ``(seed, n, m, direction)``
with chained splitmix64 finalizers, so any bond can be looked up in any order
and coupled runs at different ``p`` or window order see the same randomness.
A bond is open at ``p`` iff its uniform is ``<= p``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xBF58476D1CE4E5B9
_C2 = 0x94D049BB133111EB
_INV_2_53 = 2.0**-53


class CoordinateError(ValueError):
    """Bond coordinate off the even sublattice."""


class Direction(enum.IntEnum):
    LEFT = 0
    RIGHT = 1


@dataclass(frozen=True)
class BondCoord:
    time: int
    space: int
    direction: Direction

    def __post_init__(self):
        if self.time < 0:
            raise CoordinateError(f"negative time {self.time}")
        if (self.time + self.space) % 2:
            raise CoordinateError(f"site ({self.time}, {self.space}) has odd parity")
        object.__setattr__(self, "direction", Direction(self.direction))

    @property
    def target(self) -> tuple[int, int]:
        step = 1 if self.direction is Direction.RIGHT else -1
        return self.time + 1, self.space + step


def _mix(z: int) -> int:
    z = (z + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _C1) & MASK64
    z = ((z ^ (z >> 27)) * _C2) & MASK64
    return z ^ (z >> 31)


_G = np.uint64(_GOLDEN)
_M1 = np.uint64(_C1)
_M2 = np.uint64(_C2)


def _mix_vec(z: np.ndarray) -> np.ndarray:
    z = z + _G
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class UniformBondField:
    """Deterministic map from bond coordinates to uniforms in ``[0, 1)``."""

    __slots__ = ("seed", "_h0")

    def __init__(self, seed: int):
        if not 0 <= int(seed) <= MASK64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self._h0 = _mix(self.seed)

    def __repr__(self):
        return f"UniformBondField(seed={self.seed})"

    def uniform(self, n: int, m: int, direction: int) -> float:
        """Uniform of the bond leaving ``(n, m)``; parity is not rechecked."""
        h = _mix(self._h0 ^ (n & MASK64))
        h = _mix(h ^ (m & MASK64))
        return (_mix(h ^ int(direction)) >> 11) * _INV_2_53

    def uniform_at(self, c: BondCoord) -> float:
        return self.uniform(c.time, c.space, c.direction)

    def open_at(self, c: BondCoord, p: float) -> bool:
        return self.uniform_at(c) <= p

    def is_open(self, n: int, m: int, direction: int, p: float) -> bool:
        return self.uniform(n, m, direction) <= p

    def uniforms(self, n, m, direction) -> np.ndarray:
        """Vectorized ``uniform``; bit-identical to the scalar path.

        Arguments broadcast against each other; parity is checked.
        """
        n, m, d = np.broadcast_arrays(np.asarray(n, dtype=np.int64), np.asarray(m, dtype=np.int64),
                                      np.asarray(direction, dtype=np.int64))
        if np.any((n + m) & 1):
            raise CoordinateError("coordinates with odd parity")
        if np.any(n < 0):
            raise CoordinateError("negative time")
        with np.errstate(over="ignore"):
            h = _mix_vec(np.uint64(self._h0) ^ n.astype(np.uint64))
            h = _mix_vec(h ^ m.astype(np.uint64))
            h = _mix_vec(h ^ d.astype(np.uint64))
        return (h >> np.uint64(11)).astype(np.float64) * _INV_2_53
