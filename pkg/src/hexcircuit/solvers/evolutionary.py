"""(mu + lambda) evolution strategy restricted to feasible circuitries."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .base import Budget, BudgetExhausted, Problem, Session, SolverReport
from .moves import random_feasible, random_move

__all__ = ["EvolutionConfig", "solve_evolutionary"]


@dataclass(frozen=True)
class EvolutionConfig:
    mu: int = 20
    lam: int = 40
    relink_prob: float = 0.5


def solve_evolutionary(
    problem: Problem,
    budget: Budget | None = None,
    config: EvolutionConfig | None = None,
    workers: int = 1,
) -> SolverReport:
    budget = budget or Budget()
    cfg = config or EvolutionConfig()
    rng = np.random.default_rng(budget.seed)
    session = Session(problem, budget, "evo", workers=workers)
    layout = problem.layout

    def rank(pool):
        # unique designs, best first; ties broken by bit pattern
        uniq = {x.bits: (v, x) for v, x in pool}
        return sorted(uniq.values(), key=lambda vx: (-vx[0], vx[1].bits))

    try:
        init = [random_feasible(layout, rng) for _ in range(cfg.mu)]
        values = session.score_batch(init)
        population = rank(zip(values, sorted(init, key=lambda v: v.bits)))[: cfg.mu]
        while True:
            parents = [population[int(rng.integers(len(population)))][1] for _ in range(cfg.lam)]
            children = [random_move(p, rng, cfg.relink_prob) for p in parents]
            ordered = sorted(children, key=lambda v: v.bits)
            values = session.score_batch(ordered)
            population = rank(population + list(zip(values, ordered)))[: cfg.mu]
    except BudgetExhausted as stop:
        session.stop_reason = stop.reason
    return session.report()
