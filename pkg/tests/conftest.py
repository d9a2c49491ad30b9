import itertools
import time

import pytest

from hexcircuit.circuitry import CircuitryVector, HexLayout


def naive_feasible(layout: HexLayout, bits) -> bool:
    """Slow reference check: far bends present, degree 1..2, no cycle, every tube used."""
    t = layout.t
    pairs = list(itertools.combinations(range(1, t + 1), 2))
    edges = [p for p, b in zip(pairs, bits) if b]
    tpr = layout.tubes_per_row
    if tpr % 2 == 0:
        far = [(k, k + 1) for k in range(1, t, 2)]
    else:
        far = [(1, tpr + 1)] + [(k, k + 1) for k in range(2, tpr, 2)] + [
            (k, k + 1) for k in range(tpr + 2, t, 2)
        ]
    if not set(far) <= set(edges):
        return False
    deg = {v: 0 for v in range(1, t + 1)}
    adj = {v: [] for v in range(1, t + 1)}
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
        adj[i].append(j)
        adj[j].append(i)
    if any(d == 0 or d > 2 for d in deg.values()):
        return False
    # a forest has |E| = |V| - components
    seen = set()
    comps = 0
    for v in adj:
        if v in seen:
            continue
        comps += 1
        stack = [v]
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            stack.extend(adj[u])
    return len(edges) == t - comps


def all_vectors(layout: HexLayout):
    for bits in itertools.product((0, 1), repeat=layout.n):
        yield CircuitryVector(layout, bits)


@pytest.fixture(scope="session")
def brute_t4():
    L = HexLayout(2)
    return sorted(x.bits for x in all_vectors(L) if naive_feasible(L, x.bits))


@pytest.fixture(scope="session")
def brute_t6():
    L = HexLayout(3)
    return sorted(x.bits for x in all_vectors(L) if naive_feasible(L, x.bits))


SESSION_START = time.perf_counter()


def pytest_collection_modifyitems(session, config, items):
    # acceptance checks run last so the runtime criterion sees the whole suite
    items.sort(key=lambda item: item.nodeid.startswith("tests/test_acceptance.py"))
