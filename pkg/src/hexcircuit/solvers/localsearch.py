"""Steepest-ascent hill climbing with random restarts."""
from __future__ import annotations

import logging

import numpy as np

from .base import Budget, BudgetExhausted, Problem, Session, SolverReport
from .moves import neighbors, random_feasible

__all__ = ["solve_localsearch"]

log = logging.getLogger(__name__)


def solve_localsearch(problem: Problem, budget: Budget | None = None, workers: int = 1) -> SolverReport:
    budget = budget or Budget()
    rng = np.random.default_rng(budget.seed)
    session = Session(problem, budget, "local", workers=workers)
    layout = problem.layout
    starts = 0
    try:
        while True:
            if starts:
                session.restarts += 1
                log.info("restart %d after %d calls", session.restarts, session.calls)
            starts += 1
            x = random_feasible(layout, rng)
            value = session.score(x)
            while True:
                nbrs = neighbors(x)
                if not nbrs:
                    break
                values = session.score_batch(nbrs)
                best = max(range(len(nbrs)), key=lambda k: (values[k], -k))
                if values[best] <= value:
                    break
                x, value = nbrs[best], values[best]
    except BudgetExhausted as stop:
        session.stop_reason = stop.reason
    return session.report()
