"""Feasibility-preserving moves on circuitry vectors.

All moves act on front-end connections only and keep the design a union of
simple paths:

* split  - remove one front-end connection (one circuit becomes two)
* merge  - connect an endpoint of one circuit to an endpoint of another
* relink - a split followed by a merge that does not restore the removed edge
"""
from __future__ import annotations

import itertools

import numpy as np

from ..circuitry import CircuitryVector, HexLayout, _far_pairs, base_vector, decode, pair_index

__all__ = ["random_feasible", "split_moves", "merge_moves", "relink_moves", "neighbors", "random_move"]


def _endpoints(circuits) -> list[tuple[int, ...]]:
    return [tuple(sorted({c[0], c[-1]})) for c in circuits]


def _toggle(x: CircuitryVector, pairs_on=(), pairs_off=()) -> CircuitryVector:
    bits = list(x.bits)
    t = x.t
    for i, j in pairs_off:
        bits[pair_index(min(i, j), max(i, j), t) - 1] = 0
    for i, j in pairs_on:
        bits[pair_index(min(i, j), max(i, j), t) - 1] = 1
    return CircuitryVector(x.layout, tuple(bits))


def random_feasible(layout: HexLayout, rng: np.random.Generator) -> CircuitryVector:
    """Random design built by inserting shuffled front-end connections.

    The number of connections is drawn uniformly from 0..t/2-1, then
    connections are accepted greedily when both tubes are still free and
    the endpoints belong to different paths.
    """
    t = layout.t
    m = t // 2
    target = int(rng.integers(0, m))
    far = set(_far_pairs(layout.tubes_per_row))
    other = [0] * (t + 1)
    for i, j in far:
        other[i], other[j] = j, i
    free = [True] * (t + 1)
    cands = [p for p in itertools.combinations(range(1, t + 1), 2) if p not in far]
    order = rng.permutation(len(cands))
    chosen = []
    for idx in order:
        if len(chosen) >= target:
            break
        i, j = cands[idx]
        if not (free[i] and free[j]) or other[i] == j:
            continue
        oi, oj = other[i], other[j]
        free[i] = free[j] = False
        other[oi], other[oj] = oj, oi
        chosen.append((i, j))
    return _toggle(base_vector(layout), pairs_on=chosen)


def split_moves(x: CircuitryVector) -> list[CircuitryVector]:
    return [_toggle(x, pairs_off=[p]) for p in x.front_pairs()]


def _merge_pairs(circuits, exclude=None) -> list[tuple[int, int]]:
    ends = _endpoints(circuits)
    out = []
    for a, b in itertools.combinations(range(len(ends)), 2):
        for u in ends[a]:
            for v in ends[b]:
                p = (min(u, v), max(u, v))
                if p != exclude:
                    out.append(p)
    return sorted(out)


def merge_moves(x: CircuitryVector) -> list[CircuitryVector]:
    return [_toggle(x, pairs_on=[p]) for p in _merge_pairs(decode(x).circuits)]


def relink_moves(x: CircuitryVector) -> list[CircuitryVector]:
    out = []
    for p in x.front_pairs():
        y = _toggle(x, pairs_off=[p])
        out.extend(_toggle(y, pairs_on=[q]) for q in _merge_pairs(decode(y).circuits, exclude=p))
    return out


def neighbors(x: CircuitryVector) -> list[CircuitryVector]:
    """Distinct split/merge/relink neighbours, sorted by bit pattern."""
    seen = {}
    for y in itertools.chain(split_moves(x), merge_moves(x), relink_moves(x)):
        seen.setdefault(y.bits, y)
    seen.pop(x.bits, None)
    return [seen[k] for k in sorted(seen)]


def random_move(x: CircuitryVector, rng: np.random.Generator, relink_prob: float = 0.5) -> CircuitryVector:
    """One random move; falls back to whichever move type is available."""
    design = decode(x)
    front = x.front_pairs()
    can_merge = design.c > 1
    if front and rng.random() < relink_prob:
        p = front[int(rng.integers(len(front)))]
        y = _toggle(x, pairs_off=[p])
        options = _merge_pairs(decode(y).circuits, exclude=p)
        if options:
            return _toggle(y, pairs_on=[options[int(rng.integers(len(options)))]])
    ops = []
    if front:
        ops.append("split")
    if can_merge:
        ops.append("merge")
    if not ops:
        return x
    op = ops[int(rng.integers(len(ops)))]
    if op == "split":
        return _toggle(x, pairs_off=[front[int(rng.integers(len(front)))]])
    options = _merge_pairs(design.circuits)
    return _toggle(x, pairs_on=[options[int(rng.integers(len(options)))]])
