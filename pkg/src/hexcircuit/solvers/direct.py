"""DIRECT over the unit hypercube of free circuitry coordinates.

Binary coordinates are handled the way integer-aware DIRECT variants do:
once a side has been cut, its thirds that round to the same bit are merged
and the side is resolved (length 0).  Sampled centres round with
``c > 0.5 -> 1``, so an unresolved side sits at its tie value 0 and the
initial centre is the bare far-end design.

Cutting the longest side, lowest index first, resolves sides in index
order.  A rectangle is then just its prefix of resolved bits: its centre
vector is the prefix padded with zeros, its size class is the prefix length
and cutting it yields the 0-child (same centre, no evaluation) and the
1-child (one new vector).

Setting more bits never repairs a merge/split or a cycle, so a rectangle
whose centre is infeasible holds no feasible vector and is dropped
without a simulator call.
"""
from __future__ import annotations

import heapq
import math

from .base import Budget, BudgetExhausted, Problem, Session, SolverReport, vector_from_free

__all__ = ["solve_direct", "potentially_optimal"]


def potentially_optimal(points: list[tuple[float, float, int]], eps: float = 1e-4) -> list[int]:
    """Labels of potentially optimal points among ``(diameter, f, label)``.

    ``f`` is minimised.  Points are the best of each size class; the result
    is the lower-right convex hull from the lowest-``f`` point towards larger
    diameters, filtered by the usual ``eps`` improvement test.
    """
    if not points:
        return []
    fmin = min(p[1] for p in points)
    dmin = max(p[0] for p in points if p[1] == fmin)
    cand = sorted((p for p in points if p[0] >= dmin), key=lambda p: (p[0], p[1]))
    uniq = []
    for p in cand:
        if uniq and uniq[-1][0] == p[0]:
            continue
        uniq.append(p)
    hull: list[tuple] = []
    for p in uniq:
        while len(hull) >= 2:
            (d1, f1, _), (d2, f2, _) = hull[-2], hull[-1]
            if (f2 - f1) * (p[0] - d1) >= (p[1] - f1) * (d2 - d1):
                hull.pop()
            else:
                break
        hull.append(p)
    target = fmin - eps * abs(fmin)
    chosen = []
    for idx, (d, f, label) in enumerate(hull):
        if idx + 1 < len(hull):
            d2, f2, _ = hull[idx + 1]
            if f - (f2 - f) / (d2 - d) * d > target:
                continue
        chosen.append(label)
    return chosen


def solve_direct(problem: Problem, budget: Budget | None = None, eps: float = 1e-4) -> SolverReport:
    """Deterministic DIRECT variant; maximises the problem objective."""
    budget = budget or Budget()
    session = Session(problem, budget, "direct")
    layout = problem.layout
    free = problem.free_indices
    dim = len(free)
    # size class k -> heap of (-value, prefix); prefixes are bit tuples of length k
    buckets: dict[int, list] = {}

    def diameter(k: int) -> float:
        return 0.5 * math.sqrt(dim - k)

    def push(prefix: tuple, value: float) -> None:
        if len(prefix) < dim:
            heapq.heappush(buckets.setdefault(len(prefix), []), (-value, prefix))

    def sample(prefix: tuple) -> float | None:
        x = vector_from_free(layout, free, prefix + (0,) * (dim - len(prefix)))
        return session.score(x)

    try:
        root = ()
        value = sample(root)
        if value is None:
            raise BudgetExhausted("exhausted")
        push(root, value)
        while True:
            points = [(diameter(k), heap[0][0], k) for k, heap in buckets.items() if heap]
            classes = potentially_optimal(points, eps)
            if not classes:
                raise BudgetExhausted("exhausted")
            for k in sorted(classes):
                neg, prefix = heapq.heappop(buckets[k])
                if not buckets[k]:
                    del buckets[k]
                push(prefix + (0,), -neg)
                child = prefix + (1,)
                v = sample(child)
                if v is not None:
                    push(child, v)
    except BudgetExhausted as stop:
        session.stop_reason = stop.reason
    return session.report()

