"""Refrigerant circuitry design for two-row fin-tube evaporators.

Circuitries are binary vectors over tube pairs; feasible ones are enumerated
exactly for small coils and searched with derivative-free solvers for larger
ones, each candidate being scored by a built-in crossflow evaporator model.
"""
from .circuitry import (
    CircuitryDesign,
    CircuitryVector,
    ContractError,
    HexLayout,
    base_vector,
    decode,
    encode,
    orient,
    pair_index,
    validate,
)
from .enumeration import count_feasible, count_oracle, enumerate_directed, enumerate_vectors
from .simulator import Evaluator, HexInstance, SimulationResult, SimulatorConfig, simulate
from .solvers import Budget, PenaltyConfig, Problem, penalized, solve_direct, solve_evolutionary, solve_localsearch

__version__ = "0.1.0"

__all__ = [
    "Budget",
    "CircuitryDesign",
    "CircuitryVector",
    "ContractError",
    "Evaluator",
    "HexInstance",
    "HexLayout",
    "PenaltyConfig",
    "Problem",
    "SimulationResult",
    "SimulatorConfig",
    "base_vector",
    "count_feasible",
    "count_oracle",
    "decode",
    "encode",
    "enumerate_directed",
    "enumerate_vectors",
    "orient",
    "pair_index",
    "penalized",
    "simulate",
    "solve_direct",
    "solve_evolutionary",
    "solve_localsearch",
    "validate",
]
