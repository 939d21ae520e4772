"""Counter-based random substreams.

Every random number is a pure function of ``(seed, stream, block, factor, step,
position-in-block)``. A Philox generator is keyed per ``(seed, stream, block,
factor)`` and its counter advances with the step index, so a path's draws never
depend on how many paths were requested or how blocks are spread over workers.
"""
from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

#: Paths per block. Part of the reproducibility contract: changing it changes every draw.
BLOCK_SIZE = 8192

STREAM_HESTON = 1
STREAM_COPULA = 2
STREAM_EXPERT = 3
STREAM_FRANK_CALIBRATION = 4
STREAM_BOOTSTRAP = 5

_MASK64 = (1 << 64) - 1

T = TypeVar("T")


def check_seed(seed: int) -> int:
    seed = int(seed)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed must be a 64-bit unsigned integer, got {seed}")
    return seed


def generator(seed: int, stream: int, block: int = 0, factor: int = 0) -> np.random.Generator:
    """Philox generator for one substream."""
    seq = np.random.SeedSequence(entropy=check_seed(seed), spawn_key=(stream, block, factor))
    return np.random.Generator(np.random.Philox(seq))


def derive_seed(master: int, label: str) -> int:
    """Child seed for a named purpose (``"dsw"``, ``"expert"``, ...)."""
    seq = np.random.SeedSequence(entropy=check_seed(master), spawn_key=(zlib.crc32(label.encode()),))
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def block_ranges(n: int) -> list[tuple[int, int, int]]:
    """``(block index, start, stop)`` triples covering ``range(n)``."""
    return [(b, s, min(s + BLOCK_SIZE, n)) for b, s in enumerate(range(0, n, BLOCK_SIZE))]


def worker_count(workers: int | None = None) -> int:
    """Resolve a worker count; ``None`` reads ``QUANTO_THREADS`` (0 or unset = auto)."""
    if workers is None:
        try:
            workers = int(os.environ.get("QUANTO_THREADS", "0"))
        except ValueError:
            workers = 0
    if workers <= 0:
        workers = os.cpu_count() or 1
    return workers


def map_blocks(fn: Callable[[int, int, int], T], n: int, workers: int | None = None) -> list[T]:
    """Apply ``fn(block, start, stop)`` to every block; results come back in block order."""
    ranges = block_ranges(n)
    w = min(worker_count(workers), len(ranges))
    if w <= 1:
        return [fn(*r) for r in ranges]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(lambda r: fn(*r), ranges))


def block_normals(seed: int, stream: int, block: int, factors: Sequence[int], size: int):
    """Per-factor generators yielding one ``BLOCK_SIZE`` normal vector per step.

    Only the first ``size`` entries are kept, so path ``p`` sees the same numbers
    whatever the total path count.
    """
    gens = [generator(seed, stream, block, f) for f in factors]

    def draw() -> list[np.ndarray]:
        return [g.standard_normal(BLOCK_SIZE)[:size] for g in gens]

    return draw
