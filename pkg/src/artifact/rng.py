"""Counter-based random streams.

Every draw is addressed by ``(master, stream, step)``: the Philox key holds
``(master, stream)`` and the top counter word holds ``step``.  Blocks of
paths are assigned to streams, so results do not depend on how the blocks
are scheduled across workers.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Seed:
    master: int = 0
    stream: int = 0

    def __post_init__(self):
        if not (0 <= self.master <= _MASK64 and 0 <= self.stream <= _MASK64):
            raise ValueError("seed words must be 64-bit unsigned")

    def child(self, stream: int) -> "Seed":
        return Seed(self.master, stream & _MASK64)


def as_seed(seed) -> Seed:
    """Accept a Seed or a plain integer master key."""
    return seed if isinstance(seed, Seed) else Seed(int(seed))


def block_seed(seed: Seed, block: int) -> Seed:
    """Sub-stream for one block of paths, derived by hashing (stream, block)."""
    seed = as_seed(seed)
    if block == 0:
        return seed
    words = np.random.SeedSequence([seed.stream, block, 0x5EED]).generate_state(1, np.uint64)
    return Seed(seed.master, int(words[0]))


def generator(seed: Seed, step: int = 0, sub: int = 0) -> np.random.Generator:
    """Philox generator positioned at counter (.., sub, .., step)."""
    seed = as_seed(seed)
    key = np.array([seed.master, seed.stream], dtype=np.uint64)
    counter = np.array([0, sub & _MASK64, 0, step & _MASK64], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def normals(seed: Seed, step: int, size, sub: int = 0) -> np.ndarray:
    """Standard normals for one (sub-)step of one stream."""
    return generator(seed, step, sub).standard_normal(size)


def complex_normals(seed: Seed, step: int, size, sub: int = 0) -> np.ndarray:
    """Standard complex Gaussians, density exp(-|z|^2)/pi."""
    shape = (size,) if np.ndim(size) == 0 else tuple(size)
    g = generator(seed, step, sub).standard_normal((2,) + shape)
    return (g[0] + 1j * g[1]) / np.sqrt(2.0)


def blocks(n_paths: int, block_size: int):
    """Yield (block index, start, stop) covering n_paths."""
    for b, start in enumerate(range(0, n_paths, block_size)):
        yield b, start, min(n_paths, start + block_size)
