"""Binary encoding of refrigerant circuitry for two-row fin-tube coils.

Tubes are numbered 1..t, top to bottom within a row and row by row in the
direction of air flow.  A circuitry is the undirected graph whose nodes are
tubes and whose edges are U-bend connections.  Only the strict upper triangle
of the adjacency matrix is stored, row-major, giving a binary vector of
length ``n = (t*t - t) // 2``.

Every tube receives exactly one pre-bent connection at the far end of the
coil; the remaining (front-end) connections are the free design choice.  A
vector is feasible when the resulting graph is a disjoint union of simple
paths covering every tube.
"""
from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, NamedTuple, Sequence

import numpy as np

__all__ = [
    "ContractError",
    "InfeasibleDesignError",
    "HexLayout",
    "EdgeEnd",
    "Edge",
    "CircuitryVector",
    "CircuitryDesign",
    "FeasibilityReport",
    "pair_index",
    "inverse_index",
    "far_end_edges",
    "base_vector",
    "validate",
    "violation",
    "decode",
    "encode",
    "orient",
]

MAX_TUBES_PER_ROW = 18


class ContractError(ValueError):
    """Raised when an argument violates an operation's precondition."""


class InfeasibleDesignError(ValueError):
    """Raised when an infeasible vector is decoded."""

    def __init__(self, report: "FeasibilityReport"):
        super().__init__(report.message)
        self.report = report


@dataclass(frozen=True)
class HexLayout:
    """Tube arrangement of a coil with ``rows`` depth rows."""

    tubes_per_row: int
    rows: int = 2

    def __post_init__(self):
        if self.rows != 2:
            raise ContractError(f"only 2 depth rows are supported, got {self.rows}")
        if not 1 <= self.tubes_per_row <= MAX_TUBES_PER_ROW:
            raise ContractError(
                f"tubes_per_row must be in 1..{MAX_TUBES_PER_ROW}, got {self.tubes_per_row}"
            )

    @classmethod
    def from_tubes(cls, t: int) -> "HexLayout":
        if t % 2:
            raise ContractError(f"tube count must be even, got {t}")
        return cls(tubes_per_row=t // 2)

    @property
    def t(self) -> int:
        return self.rows * self.tubes_per_row

    @property
    def n(self) -> int:
        return (self.t * self.t - self.t) // 2

    def position(self, tube: int) -> tuple[int, int]:
        """(row, position) of a tube, both 1-based."""
        _check_tube(tube, self.t)
        row, pos = divmod(tube - 1, self.tubes_per_row)
        return row + 1, pos + 1

    def tube_at(self, row: int, position: int) -> int:
        return (row - 1) * self.tubes_per_row + position


def _check_tube(tube: int, t: int) -> None:
    if not 1 <= tube <= t:
        raise ContractError(f"tube id {tube} outside 1..{t}")


def pair_index(i: int, j: int, layout: HexLayout | int) -> int:
    """1-based position of the connection (i, j) in the decision vector."""
    t = layout if isinstance(layout, int) else layout.t
    if not (1 <= i < j <= t):
        raise ContractError(f"need 1 <= i < j <= {t}, got ({i}, {j})")
    return (i - 1) * t - (i - 1) * i // 2 + (j - i)


def inverse_index(k: int, layout: HexLayout | int) -> tuple[int, int]:
    t = layout if isinstance(layout, int) else layout.t
    n = (t * t - t) // 2
    if not 1 <= k <= n:
        raise ContractError(f"vector index {k} outside 1..{n}")
    return _pairs(t)[k - 1]


@lru_cache(maxsize=None)
def _pairs(t: int) -> tuple[tuple[int, int], ...]:
    return tuple(itertools.combinations(range(1, t + 1), 2))


class EdgeEnd(enum.Enum):
    FAR = "far"
    FRONT = "front"


class Edge(NamedTuple):
    i: int
    j: int
    end: EdgeEnd


@lru_cache(maxsize=None)
def _far_pairs(tubes_per_row: int) -> tuple[tuple[int, int], ...]:
    t = 2 * tubes_per_row
    rows = [list(range(1, tubes_per_row + 1)), list(range(tubes_per_row + 1, t + 1))]
    pairs = []
    if t % 4:
        # odd tube count per row: the two top tubes are bent across rows
        pairs.append((rows[0][0], rows[1][0]))
        rows = [r[1:] for r in rows]
    for r in rows:
        pairs.extend((r[k], r[k + 1]) for k in range(0, len(r), 2))
    return tuple(sorted(pairs))


def far_end_edges(layout: HexLayout) -> frozenset[Edge]:
    return frozenset(Edge(i, j, EdgeEnd.FAR) for i, j in _far_pairs(layout.tubes_per_row))


def far_end_partner(layout: HexLayout) -> dict[int, int]:
    partner = {}
    for i, j in _far_pairs(layout.tubes_per_row):
        partner[i] = j
        partner[j] = i
    return partner


@dataclass(frozen=True)
class CircuitryVector:
    """Decision vector; ``bits[k - 1]`` is decision variable ``x_k``."""

    layout: HexLayout
    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != self.layout.n:
            raise ContractError(
                f"vector length {len(self.bits)} != {self.layout.n} for t={self.layout.t}"
            )

    @classmethod
    def from_edges(cls, layout: HexLayout, pairs: Iterable[tuple[int, int]]) -> "CircuitryVector":
        bits = [0] * layout.n
        for i, j in pairs:
            a, b = min(i, j), max(i, j)
            bits[pair_index(a, b, layout) - 1] = 1
        return cls(layout, tuple(bits))

    @classmethod
    def from_array(cls, layout: HexLayout, arr: Sequence[int]) -> "CircuitryVector":
        return cls(layout, tuple(int(b) for b in arr))

    @property
    def t(self) -> int:
        return self.layout.t

    @property
    def array(self) -> np.ndarray:
        return np.array(self.bits, dtype=np.int8)

    def ones(self) -> list[int]:
        """1-based indices of set bits."""
        return [k + 1 for k, b in enumerate(self.bits) if b]

    def popcount(self) -> int:
        return sum(self.bits)

    def pairs(self) -> list[tuple[int, int]]:
        table = _pairs(self.t)
        return [table[k] for k, b in enumerate(self.bits) if b]

    def front_pairs(self) -> list[tuple[int, int]]:
        far = set(_far_pairs(self.layout.tubes_per_row))
        return [p for p in self.pairs() if p not in far]

    def with_bit(self, k: int, value: int) -> "CircuitryVector":
        bits = list(self.bits)
        bits[k - 1] = value
        return CircuitryVector(self.layout, tuple(bits))

    def to_text(self) -> str:
        return f"t={self.t};bits={''.join(map(str, self.bits))}"

    @classmethod
    def from_text(cls, text: str) -> "CircuitryVector":
        try:
            fields = dict(part.split("=", 1) for part in text.strip().split(";"))
            t = int(fields["t"])
            raw = fields["bits"]
        except (KeyError, ValueError) as exc:
            raise ContractError(f"malformed vector text: {text!r}") from exc
        if set(raw) - {"0", "1"}:
            raise ContractError(f"bits must be 0/1, got {raw!r}")
        return cls(HexLayout.from_tubes(t), tuple(int(c) for c in raw))

    def __str__(self):
        return self.to_text()


def base_vector(layout: HexLayout) -> CircuitryVector:
    return CircuitryVector.from_edges(layout, _far_pairs(layout.tubes_per_row))


@dataclass(frozen=True)
class FeasibilityReport:
    feasible: bool
    rule: str | None = None
    message: str = "feasible"
    tube: int | None = None

    def __bool__(self):
        return self.feasible


class _DisjointSet:
    __slots__ = ("parent",)

    def __init__(self, size: int):
        self.parent = list(range(size))

    def find(self, a: int) -> int:
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[rb] = ra
        return True


def validate(x: CircuitryVector) -> FeasibilityReport:
    """Check the manufacturing rules; report the first violated one.

    Rules are checked in the fixed order far-end bits, degree, cycle.
    """
    layout = x.layout
    t = layout.t
    for i, j in _far_pairs(layout.tubes_per_row):
        if not x.bits[pair_index(i, j, t) - 1]:
            return FeasibilityReport(
                False, "far_end", f"far-end connection ({i},{j}) is missing", tube=i
            )
    pairs = x.pairs()
    degree = [0] * (t + 1)
    for i, j in pairs:
        degree[i] += 1
        degree[j] += 1
    for tube in range(1, t + 1):
        if degree[tube] > 2:
            return FeasibilityReport(
                False, "degree", f"tube {tube} has {degree[tube]} connections (merge/split)", tube=tube
            )
    ds = _DisjointSet(t + 1)
    for i, j in pairs:
        if not ds.union(i, j):
            return FeasibilityReport(
                False, "cycle", f"connection ({i},{j}) closes a cycle", tube=i
            )
    return FeasibilityReport(True)


def violation(x: CircuitryVector) -> int:
    """Graded infeasibility: missing far-end bits + degree excess + cycle rank.

    Zero exactly when ``validate(x)`` is feasible.
    """
    layout = x.layout
    t = layout.t
    missing = sum(
        1 for i, j in _far_pairs(layout.tubes_per_row) if not x.bits[pair_index(i, j, t) - 1]
    )
    pairs = x.pairs()
    degree = [0] * (t + 1)
    ds = _DisjointSet(t + 1)
    closing = 0
    for i, j in pairs:
        degree[i] += 1
        degree[j] += 1
        if not ds.union(i, j):
            closing += 1
    excess = sum(d - 2 for d in degree if d > 2)
    return missing + excess + closing


@dataclass(frozen=True)
class CircuitryDesign:
    """Set of vertex-disjoint tube paths.

    When ``directed`` is true each circuit runs from its first tube (inlet)
    to its last tube (outlet).
    """

    layout: HexLayout
    circuits: tuple[tuple[int, ...], ...]
    directed: bool = False

    @property
    def c(self) -> int:
        return len(self.circuits)

    def pairs(self) -> list[tuple[int, int]]:
        out = []
        for circuit in self.circuits:
            out.extend((min(a, b), max(a, b)) for a, b in zip(circuit, circuit[1:]))
        return sorted(out)

    def edges(self) -> list[Edge]:
        far = set(_far_pairs(self.layout.tubes_per_row))
        return [Edge(i, j, EdgeEnd.FAR if (i, j) in far else EdgeEnd.FRONT) for i, j in self.pairs()]

    def undirected(self) -> "CircuitryDesign":
        return CircuitryDesign(self.layout, _canonical(self.circuits), directed=False)

    def to_text(self) -> str:
        sep = "->" if self.directed else "-"
        return "\n".join(sep.join(map(str, circuit)) for circuit in self.circuits)

    @classmethod
    def from_text(cls, text: str, layout: HexLayout) -> "CircuitryDesign":
        lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
        directed = any("->" in ln for ln in lines)
        sep = "->" if directed else "-"
        circuits = tuple(tuple(int(tok) for tok in ln.split(sep)) for ln in lines)
        return cls(layout, circuits, directed)

    def key(self) -> str:
        """Stable one-line key, used for caching simulations."""
        return f"t={self.layout.t}|" + ";".join(
            ">".join(map(str, c)) for c in self.circuits
        ) + ("|d" if self.directed else "|u")


def _canonical(circuits: Iterable[Sequence[int]]) -> tuple[tuple[int, ...], ...]:
    out = []
    for circuit in circuits:
        circuit = tuple(circuit)
        if circuit[-1] < circuit[0]:
            circuit = circuit[::-1]
        out.append(circuit)
    out.sort(key=min)
    return tuple(out)


def decode(x: CircuitryVector) -> CircuitryDesign:
    """Decode a feasible vector into undirected circuits.

    Each circuit starts at its lower-numbered endpoint; circuits are sorted
    by their lowest tube id.
    """
    report = validate(x)
    if not report:
        raise InfeasibleDesignError(report)
    t = x.t
    adj: list[list[int]] = [[] for _ in range(t + 1)]
    for i, j in x.pairs():
        adj[i].append(j)
        adj[j].append(i)
    seen = [False] * (t + 1)
    circuits = []
    for start in range(1, t + 1):
        if seen[start] or len(adj[start]) != 1:
            continue
        path = [start]
        seen[start] = True
        prev, cur = 0, start
        while True:
            nxt = [v for v in adj[cur] if v != prev]
            if not nxt:
                break
            prev, cur = cur, nxt[0]
            path.append(cur)
            seen[cur] = True
        circuits.append(tuple(path))
    circuits.sort(key=min)
    return CircuitryDesign(x.layout, tuple(circuits), directed=False)


def encode(design: CircuitryDesign) -> CircuitryVector:
    return CircuitryVector.from_edges(design.layout, design.pairs())


def orient(design: CircuitryDesign) -> list[CircuitryDesign]:
    """All 2**c inlet/outlet assignments.

    Direction bit 0 keeps a circuit as listed, 1 reverses it; variants are
    ordered lexicographically with the first circuit most significant.
    """
    base = design.undirected().circuits if design.directed else design.circuits
    out = []
    for flips in itertools.product((0, 1), repeat=len(base)):
        circuits = tuple(c[::-1] if f else c for c, f in zip(base, flips))
        out.append(CircuitryDesign(design.layout, circuits, directed=True))
    return out
