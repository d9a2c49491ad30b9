"""Problem definition, budgets, penalty and the shared evaluation session."""
from __future__ import annotations

import enum
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable

from ..circuitry import CircuitryVector, HexLayout, _far_pairs, decode, orient, pair_index, validate
from ..simulator import DP_FLOOR, Evaluator, HexInstance, SimulationResult, SimulatorConfig

__all__ = [
    "Objective",
    "PenaltyConfig",
    "Budget",
    "Problem",
    "SolverReport",
    "BudgetExhausted",
    "Session",
    "penalized",
]


class Objective(str, enum.Enum):
    HEAT_CAPACITY = "q"
    RATIO = "ratio"


@dataclass(frozen=True)
class PenaltyConfig:
    lam: float = 1e6
    q_lim: float = 3900.0  # W

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("penalty weight must be positive")
        if self.q_lim <= 0:
            raise ValueError("q_lim must be positive")


def penalized(raw: float, Q: float, cfg: PenaltyConfig) -> float:
    """Objective minus the squared heat-capacity shortfall times lambda."""
    shortfall = max(0.0, cfg.q_lim - Q)
    return raw - cfg.lam * shortfall * shortfall


@dataclass(frozen=True)
class Budget:
    max_simulator_calls: int = 2500
    max_wall_seconds: float = 86400.0
    seed: int = 0
    # candidate vectors generated (feasible or not, cached or not)
    max_candidates: int = 50_000

    def __post_init__(self):
        if self.max_simulator_calls <= 0 or self.max_wall_seconds <= 0 or self.max_candidates <= 0:
            raise ValueError("budget limits must be positive")


@dataclass
class Problem:
    instance: HexInstance
    objective: Objective = Objective.HEAT_CAPACITY
    penalty: PenaltyConfig = field(default_factory=PenaltyConfig)
    config: SimulatorConfig = field(default_factory=SimulatorConfig)
    evaluator: Evaluator | None = None

    def __post_init__(self):
        self.objective = Objective(self.objective)
        if self.evaluator is None:
            self.evaluator = Evaluator(self.instance, self.config)

    @property
    def layout(self) -> HexLayout:
        return self.instance.layout

    @property
    def free_indices(self) -> list[int]:
        """1-based vector indices not fixed by the far-end bends."""
        fixed = {pair_index(i, j, self.layout) for i, j in _far_pairs(self.layout.tubes_per_row)}
        return [k for k in range(1, self.layout.n + 1) if k not in fixed]

    def value_of(self, result: SimulationResult) -> float:
        if self.objective is Objective.HEAT_CAPACITY:
            return result.Q
        return penalized(result.Q / max(result.delta_p, DP_FLOOR), result.Q, self.penalty)


class BudgetExhausted(Exception):
    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


@dataclass
class SolverReport:
    solver: str
    objective: str
    t: int
    best_vector: str | None
    best_value: float | None  # value optimised (penalised for the ratio objective)
    best_Q: float | None
    best_delta_p: float | None
    best_ratio: float | None
    constraint_satisfied: bool | None
    calls: int
    candidates: int
    wall_seconds: float
    trajectory: list[tuple[int, float]]
    restarts: int = 0
    stop_reason: str = ""
    seed: int | None = None

    @property
    def status(self) -> str:
        return "ok" if self.best_vector is not None else "no-feasible"

    @property
    def solved(self) -> bool:
        """Feasible circuitry found and, for the ratio objective, Q >= Q_lim."""
        if self.best_vector is None:
            return False
        return self.objective == Objective.HEAT_CAPACITY.value or bool(self.constraint_satisfied)

    @property
    def table_value(self) -> float | None:
        """Value for the comparison tables: Q, or the raw Q/dP ratio."""
        if not self.solved:
            return None
        return self.best_Q if self.objective == Objective.HEAT_CAPACITY.value else self.best_ratio

    def signature(self) -> tuple:
        """Everything except wall time; equal for reproducible runs."""
        return (
            self.solver, self.objective, self.t, self.best_vector, self.best_value,
            self.calls, self.candidates, tuple(self.trajectory), self.restarts, self.stop_reason,
        )


class Session:
    """One solver run: enforces the budget and tracks the incumbent.

    Simulator calls are counted as evaluator cache misses during this run.
    Infeasible vectors are rejected before the simulator is touched.
    """

    def __init__(self, problem: Problem, budget: Budget, solver: str, workers: int = 1):
        self.problem = problem
        self.budget = budget
        self.solver = solver
        self.workers = workers
        self.evaluator = problem.evaluator
        self._calls0 = self.evaluator.calls
        self._start = time.perf_counter()
        self.candidates = 0
        self.restarts = 0
        self.best_x: CircuitryVector | None = None
        self.best_value: float | None = None
        self.best_result: SimulationResult | None = None
        self.trajectory: list[tuple[int, float]] = []
        self._memo: dict[tuple, float | None] = {}
        self.stop_reason = ""

    @property
    def calls(self) -> int:
        return self.evaluator.calls - self._calls0

    def elapsed(self) -> float:
        return time.perf_counter() - self._start

    def _tick(self) -> None:
        if self.elapsed() >= self.budget.max_wall_seconds:
            raise BudgetExhausted("wall-time")
        if self.candidates >= self.budget.max_candidates:
            raise BudgetExhausted("candidates")
        self.candidates += 1

    def _record(self, x: CircuitryVector, result: SimulationResult, call_no: int | None = None) -> float:
        value = self.problem.value_of(result)
        self._memo[x.bits] = value
        if self.best_value is None or value > self.best_value:
            self.best_value = value
            self.best_x = x
            self.best_result = result
            self.trajectory.append((self.calls if call_no is None else call_no, value))
        return value

    def score(self, x: CircuitryVector) -> float | None:
        """Objective value of ``x`` (None if infeasible); raises BudgetExhausted."""
        self._tick()
        if x.bits in self._memo:
            return self._memo[x.bits]
        if not validate(x):
            self._memo[x.bits] = None
            return None
        design = orient(decode(x))[0]
        if not self.evaluator.is_cached(design) and self.calls >= self.budget.max_simulator_calls:
            raise BudgetExhausted("simulator-calls")
        result, _ = self.evaluator.simulate(design, x, 0)
        return self._record(x, result)

    def score_batch(self, xs: Iterable[CircuitryVector]) -> list[float | None]:
        """Score candidates in serialized-vector order, simulating with ``workers`` threads.

        Results and budget accounting do not depend on the worker count.
        Raises BudgetExhausted after recording whatever fitted in the budget.
        """
        xs = sorted(xs, key=lambda v: v.bits)
        if self.workers <= 1:
            return [self.score(x) for x in xs]
        todo = []
        new_keys = set()
        pending = set()
        stop = None
        for x in xs:
            if self.elapsed() >= self.budget.max_wall_seconds:
                stop = "wall-time"
                break
            if self.candidates >= self.budget.max_candidates:
                stop = "candidates"
                break
            self.candidates += 1
            if x.bits in self._memo or x.bits in pending:
                todo.append((x, None, 0))
                continue
            if not validate(x):
                self._memo[x.bits] = None
                todo.append((x, None, 0))
                continue
            design = orient(decode(x))[0]
            key = design.key()
            if not self.evaluator.is_cached(design) and key not in new_keys:
                if self.calls + len(new_keys) >= self.budget.max_simulator_calls:
                    stop = "simulator-calls"
                    break
                new_keys.add(key)
            pending.add(x.bits)
            # call count a serial run would show after this candidate
            todo.append((x, design, self.calls + len(new_keys)))
        with ThreadPoolExecutor(self.workers) as pool:
            futures = [
                pool.submit(self.evaluator.simulate, d, x, 0) if d is not None else None
                for x, d, _ in todo
            ]
            results = [f.result()[0] if f is not None else None for f in futures]
        out = []
        for (x, d, call_no), res in zip(todo, results):
            out.append(self._record(x, res, call_no) if res is not None else self._memo.get(x.bits))
        if stop:
            raise BudgetExhausted(stop)
        return out

    def report(self) -> SolverReport:
        res = self.best_result
        prob = self.problem
        ratio = None if res is None else res.Q / max(res.delta_p, DP_FLOOR)
        satisfied = None
        if res is not None and prob.objective is Objective.RATIO:
            satisfied = res.Q >= prob.penalty.q_lim
        return SolverReport(
            solver=self.solver,
            objective=prob.objective.value,
            t=prob.layout.t,
            best_vector=None if self.best_x is None else self.best_x.to_text(),
            best_value=self.best_value,
            best_Q=None if res is None else res.Q,
            best_delta_p=None if res is None else res.delta_p,
            best_ratio=ratio,
            constraint_satisfied=satisfied,
            calls=self.calls,
            candidates=self.candidates,
            wall_seconds=self.elapsed(),
            trajectory=list(self.trajectory),
            restarts=self.restarts,
            stop_reason=self.stop_reason,
            seed=self.budget.seed if self.solver != "direct" else None,
        )


def vector_from_free(layout: HexLayout, free_indices: list[int], free_bits: Iterable[int]) -> CircuitryVector:
    bits = [0] * layout.n
    for i, j in _far_pairs(layout.tubes_per_row):
        bits[pair_index(i, j, layout) - 1] = 1
    for k, b in zip(free_indices, free_bits):
        bits[k - 1] = b
    return CircuitryVector(layout, tuple(bits))
