"""Seeded random streams and exponential shift sampling."""
from __future__ import annotations

import math
import zlib
from dataclasses import dataclass

import numpy as np


def _key_part(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode())
    if isinstance(part, (int, np.integer)) and part >= 0:
        return int(part)
    raise TypeError(f"stream key parts must be str or non-negative int, got {part!r}")


@dataclass(frozen=True)
class RandomStreams:
    """A master seed plus a key path naming one independent substream.

    ``spawn`` extends the key; two streams with different keys never share
    state, so e.g. level 3 of a hierarchy can be rebuilt on its own.
    """

    seed: int
    key: tuple = ()

    def spawn(self, *parts) -> "RandomStreams":
        return RandomStreams(self.seed, self.key + tuple(_key_part(p) for p in parts))

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(entropy=self.seed & (2**64 - 1), spawn_key=self.key)
        return np.random.Generator(np.random.PCG64(seq))


def as_streams(rng) -> RandomStreams:
    if isinstance(rng, RandomStreams):
        return rng
    if isinstance(rng, (int, np.integer)):
        return RandomStreams(int(rng))
    raise TypeError(f"expected a seed or RandomStreams, got {type(rng).__name__}")


@dataclass(frozen=True)
class ShiftVector:
    delta: np.ndarray
    mean: float

    def __len__(self) -> int:
        return len(self.delta)


def exponential_from_uniform(u, D: float):
    """Inverse CDF of Exp(D) at u in (0, 1]; written as D * Exp(1) so scaling is exact."""
    if D <= 0:
        raise ValueError("scale D must be positive")
    return D * -np.log(u)


def sample_shifts(rng: np.random.Generator, n: int, D: float) -> ShiftVector:
    if D <= 0:
        raise ValueError("scale D must be positive")
    u = 1.0 - rng.random(n)  # (0, 1]
    return ShiftVector(exponential_from_uniform(u, D), float(D))


def shift_cap(n: int, D: float) -> float:
    """Largest admissible shift, 9 D ln n (no cap for n = 1)."""
    return 9.0 * D * math.log(n) if n > 1 else math.inf


def sample_capped_shifts(rng: np.random.Generator, n: int, D: float, max_attempts: int = 64) -> ShiftVector:
    cap = shift_cap(n, D)
    for _ in range(max_attempts):
        shifts = sample_shifts(rng, n, D)
        if n == 0 or shifts.delta.max() <= cap:
            return shifts
    raise RuntimeError(f"shift cap {cap:g} exceeded {max_attempts} times in a row")
