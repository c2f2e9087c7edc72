"""Block-structured, reproducible Monte Carlo plumbing.

Trials are cut into fixed-size blocks.  Block ``b`` draws from its own
generator seeded by (seed, b), and per-block moments are merged in block
order, so results do not depend on how many workers ran the blocks.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

BLOCK_SIZE = 1 << 16


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(block),)))


def block_sizes(trials: int, block_size: int = BLOCK_SIZE) -> list[int]:
    if trials < 1:
        raise ValueError("trials must be >= 1")
    full, rest = divmod(trials, block_size)
    return [block_size] * full + ([rest] if rest else [])


@dataclass
class Moments:
    """Count, mean and sum of squared deviations (Chan et al. merge)."""

    n: int = 0
    mean: float = 0.0
    m2: float = 0.0

    @classmethod
    def of(cls, values: np.ndarray) -> "Moments":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            return cls()
        mu = math.fsum(v) / v.size
        return cls(v.size, mu, math.fsum((v - mu) ** 2))

    def merge(self, other: "Moments") -> "Moments":
        if other.n == 0:
            return Moments(self.n, self.mean, self.m2)
        if self.n == 0:
            return Moments(other.n, other.mean, other.m2)
        n = self.n + other.n
        delta = other.mean - self.mean
        mean = self.mean + delta * other.n / n
        m2 = self.m2 + other.m2 + delta * delta * self.n * other.n / n
        return Moments(n, mean, m2)

    @property
    def stderr(self) -> float:
        if self.n < 2:
            return 0.0
        return math.sqrt(self.m2 / (self.n - 1) / self.n)


def run_blocks(
    fn: Callable[[np.random.Generator, int], Sequence[np.ndarray]],
    trials: int,
    seed: int,
    workers: int = 1,
    block_size: int = BLOCK_SIZE,
) -> list[Moments]:
    """Run ``fn(rng, n)`` per block; it returns one value array per tracked quantity."""
    sizes = block_sizes(trials, block_size)

    def job(b):
        outs = fn(block_rng(seed, b), sizes[b])
        return [Moments.of(o) for o in outs]

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, range(len(sizes))))
    else:
        parts = [job(b) for b in range(len(sizes))]
    total = [Moments() for _ in parts[0]]
    for part in parts:
        total = [t.merge(p) for t, p in zip(total, part)]
    return total
