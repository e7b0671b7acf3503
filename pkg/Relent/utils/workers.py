import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from Relent.vars import Var

LOGGER = logging.getLogger(__name__)


@dataclass
class Tally:
    """Commutative (count, sum, sum of squares) accumulator; values may be vectors."""

    count: int = 0
    total: Optional[np.ndarray] = None
    total_sq: Optional[np.ndarray] = None

    @classmethod
    def of(cls, values) -> "Tally":
        values = np.asarray(values, dtype=float)
        return cls(values.shape[0], values.sum(axis=0), (values ** 2).sum(axis=0))

    def __add__(self, other: "Tally") -> "Tally":
        if self.total is None:
            return other
        if other.total is None:
            return self
        return Tally(self.count + other.count, self.total + other.total, self.total_sq + other.total_sq)

    @property
    def mean(self):
        return self.total / self.count

    @property
    def stderr(self):
        if self.count < 2:
            return np.zeros_like(self.mean) if np.ndim(self.mean) else 0.0
        variance = (self.total_sq - self.count * self.mean ** 2) / (self.count - 1)
        return np.sqrt(np.clip(variance, 0.0, None) / self.count)


def split_seeds(seed: int, blocks: int) -> List[np.random.SeedSequence]:
    """Independent child seeds, one per trial block; child i depends only on (seed, i)."""
    return np.random.SeedSequence(seed).spawn(blocks)


def block_sizes(trials: int, per_block: Optional[int] = None) -> List[int]:
    per_block = Var.BLOCK_TRIALS if per_block is None else per_block
    full, rest = divmod(trials, per_block)
    return [per_block] * full + ([rest] if rest else [])


def run_blocks(
    task: Callable[[np.random.SeedSequence, int], np.ndarray],
    trials: int,
    seed: int,
    per_block: Optional[int] = None,
    workers: Optional[int] = None,
) -> Tally:
    """Run ``task(seed_seq, size)`` over seeded blocks and fold the results by block index.

    ``task`` must be picklable when more than one worker is configured.
    """
    workers = Var.WORKERS if workers is None else workers
    sizes = block_sizes(trials, per_block)
    seeds = split_seeds(seed, len(sizes))
    if workers > 1 and len(sizes) > 1:
        LOGGER.info("Running %d blocks on %d workers", len(sizes), workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, seeds, sizes))
    else:
        results = []
        for i, (child, size) in enumerate(zip(seeds, sizes)):
            LOGGER.debug("Starting - Block %d (%d trials)", i, size)
            results.append(task(child, size))
    tally = Tally()
    for values in results:
        tally = tally + Tally.of(values)
    return tally
