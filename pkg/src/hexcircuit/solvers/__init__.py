"""Derivative-free solvers over the binary circuitry space."""
from .base import (
    Budget,
    BudgetExhausted,
    Objective,
    PenaltyConfig,
    Problem,
    Session,
    SolverReport,
    penalized,
)
from .direct import solve_direct
from .evolutionary import EvolutionConfig, solve_evolutionary
from .localsearch import solve_localsearch

SOLVERS = {
    "direct": solve_direct,
    "evo": solve_evolutionary,
    "local": solve_localsearch,
}

__all__ = [
    "Budget",
    "BudgetExhausted",
    "EvolutionConfig",
    "Objective",
    "PenaltyConfig",
    "Problem",
    "SOLVERS",
    "Session",
    "SolverReport",
    "penalized",
    "solve_direct",
    "solve_evolutionary",
    "solve_localsearch",
]
