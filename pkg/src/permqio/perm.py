"""Permutations of ``{1..n}``, uniform sampling and adjacent-transposition moves.

Single permutations are plain tuples of ints. The solvers work on batches,
stored as ``(count, n)`` integer arrays with one permutation per row.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np

PERM_DTYPE = np.int64


def make_rng(seed: int, *key: int) -> np.random.Generator:
    """Return an independent Philox stream for ``(seed, *key)``.

    Streams with distinct keys are statistically independent, so a run can hand
    out one stream per instance or per phase without sharing state.
    """
    seq = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def identity(n: int) -> tuple[int, ...]:
    return tuple(range(1, n + 1))


def random_permutations(n: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``count`` uniform permutations of ``1..n`` with Durstenfeld's shuffle.

    Each row consumes exactly ``n - 1`` swap decisions.
    """
    if n < 1:
        raise ValueError(f"permutation size must be >= 1, got {n}")
    out = np.tile(np.arange(1, n + 1, dtype=PERM_DTYPE), (count, 1))
    rows = np.arange(count)
    for i in range(n - 1, 0, -1):
        j = rng.integers(0, i + 1, size=count)
        tmp = out[rows, j].copy()
        out[rows, j] = out[:, i]
        out[:, i] = tmp
    return out


def random_permutation(n: int, rng: np.random.Generator) -> tuple[int, ...]:
    return tuple(int(x) for x in random_permutations(n, 1, rng)[0])


def apply_move(p: Sequence[int], k: int) -> tuple[int, ...]:
    """Swap the entries at positions ``k`` and ``k + 1``."""
    if not 0 <= k <= len(p) - 2:
        raise IndexError(f"move position {k} out of range for length {len(p)}")
    q = list(p)
    q[k], q[k + 1] = q[k + 1], q[k]
    return tuple(q)


def neighborhood(p: Sequence[int]) -> list[tuple[int, ...]]:
    """All ``n - 1`` adjacent transpositions of ``p``, by ascending position."""
    return [apply_move(p, k) for k in range(len(p) - 1)]


def is_valid(p: Sequence[int]) -> bool:
    try:
        values = [int(x) for x in p]
    except (TypeError, ValueError):
        return False
    if any(int(x) != x for x in p):
        return False
    n = len(values)
    return n > 0 and sorted(values) == list(range(1, n + 1))


def swap_rows(perms: np.ndarray, k: np.ndarray) -> None:
    """In place: swap columns ``k[r]`` and ``k[r] + 1`` of every row ``r``."""
    rows = np.arange(perms.shape[0])
    left = perms[rows, k].copy()
    perms[rows, k] = perms[rows, k + 1]
    perms[rows, k + 1] = left
