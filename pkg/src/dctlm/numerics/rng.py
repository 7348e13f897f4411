"""Counter-based SplitMix64 generator.

Output ``k`` (1-based) of a stream is ``mix(seed + k * GAMMA)`` with all
arithmetic modulo 2**64, so a draw depends only on ``(seed, position)`` and
whole blocks can be generated with vectorised integer arithmetic.
"""
from __future__ import annotations

import zlib

import numpy as np

GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_MASK = (1 << 64) - 1


def _mix(z: np.ndarray) -> np.ndarray:
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def derive_seed(seed: int, label: str) -> int:
    """Independent child seed for a named purpose (init, dropout, ...)."""
    salt = zlib.crc32(label.encode("utf-8"))
    z = np.array([(seed ^ (salt << 32) ^ salt) & _MASK], dtype=np.uint64)
    with np.errstate(over="ignore"):
        return int(_mix(z + GAMMA)[0])


class Rng:
    algorithm = "splitmix64"

    def __init__(self, seed: int, position: int = 0):
        self.seed = int(seed) & _MASK
        self.position = int(position)

    def next_u64(self, count: int) -> np.ndarray:
        k = np.arange(self.position + 1, self.position + count + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            out = _mix(np.uint64(self.seed) + k * GAMMA)
        self.position += count
        return out

    def random(self, shape=()) -> np.ndarray:
        """Uniform floats in [0, 1) with 53 random bits each."""
        n = int(np.prod(shape, dtype=np.int64))
        u = self.next_u64(n) >> np.uint64(11)
        return (u.astype(np.float64) * 2.0 ** -53).reshape(shape)

    def uniform(self, low: float, high: float, shape=()) -> np.ndarray:
        return low + (high - low) * self.random(shape)

    def state(self) -> dict:
        return {"algorithm": self.algorithm, "seed": self.seed,
                "position": self.position}

    @classmethod
    def from_state(cls, state: dict) -> "Rng":
        if state.get("algorithm", cls.algorithm) != cls.algorithm:
            raise ValueError(f"unknown generator {state['algorithm']!r}")
        return cls(state["seed"], state["position"])

    def __repr__(self):
        return f"Rng(seed={self.seed}, position={self.position})"
