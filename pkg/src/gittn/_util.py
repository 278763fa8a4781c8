"""Small shared helpers: memory budgets, named RNG streams, deadlines."""

from __future__ import annotations

import time
import zlib

import numpy as np

from .errors import BudgetExceededError, TimeLimitExceeded

DEFAULT_MEMORY_BUDGET = 2 * 1024**3  # bytes


def ensure_memory(nbytes: float, budget: int | None, what: str = "allocation"):
    """Refuse up front if a dense allocation would exceed the budget."""
    if budget is not None and nbytes > budget:
        raise BudgetExceededError(
            f"{what} needs {nbytes / 1024**2:.0f} MiB, budget is "
            f"{budget / 1024**2:.0f} MiB"
        )


def named_rng(seed: int, name: str) -> np.random.Generator:
    """Deterministic RNG stream derived from one seed and a stream name.

    Streams with different names are statistically independent; the same
    (seed, name) pair always yields the same stream.
    """
    key = zlib.crc32(name.encode("utf-8"))
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(key,)))


class Deadline:
    """Cooperative wall-clock limit. ``check()`` raises once the limit passes."""

    def __init__(self, seconds: float | None):
        self.seconds = seconds
        self.start = time.perf_counter()

    def remaining(self) -> float:
        if self.seconds is None:
            return float("inf")
        return self.seconds - (time.perf_counter() - self.start)

    def check(self):
        if self.remaining() <= 0.0:
            raise TimeLimitExceeded(f"time limit of {self.seconds} s exceeded")
