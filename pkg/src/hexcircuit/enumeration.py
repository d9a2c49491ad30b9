"""Complete enumeration of feasible circuitry vectors.

The far-end bends split the coil into ``m = t/2`` two-tube paths.  A
feasible design adds front-end connections between path endpoints without
closing a cycle, so the search only needs to track, for every free tube,
the opposite endpoint of the path it currently terminates.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from math import comb, factorial
from typing import Iterator

from .circuitry import (
    CircuitryDesign,
    CircuitryVector,
    ContractError,
    HexLayout,
    _far_pairs,
    _pairs,
    decode,
    orient,
    pair_index,
)

__all__ = [
    "DEFAULT_ENUM_CAP",
    "PUBLISHED_COUNTS",
    "EnumerationStats",
    "EnumerationCapError",
    "enumerate_vectors",
    "enumerate_directed",
    "count_feasible",
    "count_oracle",
    "enumeration_stats",
    "count_deviation",
]

DEFAULT_ENUM_CAP = 12

# published counts: t -> (solutions, combinations, combinations with Q >= 3900 W)
PUBLISHED_COUNTS = {
    4: (5, 12, 2),
    6: (37, 104, 48),
    8: (361, 1168, 544),
    10: (3965, 14976, 6981),
    12: (54539, 232512, 41899),
}


class EnumerationCapError(RuntimeError):
    pass


@dataclass(frozen=True)
class EnumerationStats:
    t: int
    solutions: int
    combinations: int
    wall_time: float


def _check_cap(layout: HexLayout, cap: int | None, override: bool) -> None:
    cap = DEFAULT_ENUM_CAP if cap is None else cap
    if layout.t > cap and not override:
        raise EnumerationCapError(
            f"enumeration for t={layout.t} exceeds the cap t<={cap}; "
            "pass override=True (CLI: --override-enum-cap) to proceed"
        )


def _front_candidates(layout: HexLayout) -> list[tuple[int, int, int]]:
    far = set(_far_pairs(layout.tubes_per_row))
    return [(k, i, j) for k, (i, j) in enumerate(_pairs(layout.t)) if (i, j) not in far]


def _search(layout: HexLayout) -> Iterator[list[int]]:
    """Yield the bit positions (0-based) of front edges of every solution.

    The yielded list is reused between solutions; copy it if retained.
    """
    t = layout.t
    cands = _front_candidates(layout)
    free = [True] * (t + 1)
    other = [0] * (t + 1)
    for i, j in _far_pairs(layout.tubes_per_row):
        other[i], other[j] = j, i
    chosen: list[int] = []
    ncand = len(cands)

    def rec(start: int) -> Iterator[list[int]]:
        yield chosen
        for idx in range(start, ncand):
            k, i, j = cands[idx]
            if not (free[i] and free[j]) or other[i] == j:
                continue
            oi, oj = other[i], other[j]
            free[i] = free[j] = False
            other[oi], other[oj] = oj, oi
            chosen.append(k)
            yield from rec(idx + 1)
            chosen.pop()
            other[oi], other[oj] = i, j
            free[i] = free[j] = True

    yield from rec(0)


def enumerate_vectors(
    layout: HexLayout, cap: int | None = None, override: bool = False
) -> Iterator[CircuitryVector]:
    """Stream every feasible vector exactly once.

    Order is lexicographic in the (ascending) vector indices of the added
    front-end connections, starting with the bare far-end vector.
    """
    _check_cap(layout, cap, override)
    base = [0] * layout.n
    for i, j in _far_pairs(layout.tubes_per_row):
        base[pair_index(i, j, layout) - 1] = 1
    for front in _search(layout):
        bits = list(base)
        for k in front:
            bits[k] = 1
        yield CircuitryVector(layout, tuple(bits))


def enumerate_directed(
    layout: HexLayout, cap: int | None = None, override: bool = False
) -> Iterator[CircuitryDesign]:
    for x in enumerate_vectors(layout, cap, override):
        yield from orient(decode(x))


def count_feasible(layout: HexLayout) -> tuple[int, int]:
    """(solutions, combinations) by running the backtracker without building vectors."""
    t = layout.t
    m = t // 2
    cands = _front_candidates(layout)
    free = [True] * (t + 1)
    other = [0] * (t + 1)
    for i, j in _far_pairs(layout.tubes_per_row):
        other[i], other[j] = j, i
    ncand = len(cands)
    solutions = 0
    combinations = 0

    def rec(start: int, added: int) -> None:
        nonlocal solutions, combinations
        solutions += 1
        combinations += 1 << (m - added)
        for idx in range(start, ncand):
            _, i, j = cands[idx]
            if not free[i] or not free[j] or other[i] == j:
                continue
            oi, oj = other[i], other[j]
            free[i] = free[j] = False
            other[oi] = oj
            other[oj] = oi
            rec(idx + 1, added + 1)
            other[oi] = i
            other[oj] = j
            free[i] = free[j] = True

    rec(0, 0)
    return solutions, combinations


def _paths(k: int) -> int:
    # ways to chain k labelled two-ended nodes into one undirected path
    return 1 if k == 1 else factorial(k) * 2 ** (k - 1)


def count_oracle(m: int) -> tuple[int, int]:
    """Closed recurrence for (solutions, combinations) with ``m = t/2`` far-end pairs.

    Independent of the backtracker: set partitions of the pairs into
    blocks, each block chained into a path in ``_paths(k)`` ways, and each
    path given one of two flow directions for the combination count.
    """
    if m <= 0:
        raise ContractError(f"pair count must be >= 1, got {m}")
    a = [1] + [0] * m
    c = [1] + [0] * m
    for size in range(1, m + 1):
        a[size] = sum(comb(size - 1, k - 1) * _paths(k) * a[size - k] for k in range(1, size + 1))
        c[size] = sum(
            comb(size - 1, k - 1) * 2 * _paths(k) * c[size - k] for k in range(1, size + 1)
        )
    return a[m], c[m]


def enumeration_stats(
    layout: HexLayout, cap: int | None = None, override: bool = False
) -> EnumerationStats:
    _check_cap(layout, cap, override)
    start = time.perf_counter()
    solutions, combinations = count_feasible(layout)
    return EnumerationStats(layout.t, solutions, combinations, time.perf_counter() - start)


def count_deviation(t: int, solutions: int, combinations: int) -> str | None:
    """Note describing disagreement with the published counts, or None."""
    if t not in PUBLISHED_COUNTS:
        return None
    ref_sol, ref_comb, _ = PUBLISHED_COUNTS[t]
    if (solutions, combinations) == (ref_sol, ref_comb):
        return None
    return (
        f"t={t}: the stated rules give {solutions} solutions / {combinations} combinations; "
        f"the published reference counts are {ref_sol} / {ref_comb}. The published run likely applied an "
        "unstated extra restriction."
    )
